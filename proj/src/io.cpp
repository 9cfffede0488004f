#include "ccama/io.hpp"

#include <Eigen/Eigenvalues>
#include <fstream>
#include <limits>
#include <sstream>

namespace ccama {

using nlohmann::json;

namespace {

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw InvalidInput("cannot parse " + path.string() + ": " + e.what());
  }
  return j;
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write " + path.string());
  out << j.dump(1) << "\n";
}

uint64_t fnv1a64(const std::string& s) {
  uint64_t h = 0xCBF29CE484222325ull;
  for (const unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

json instance_fields_json(const ProblemInstance& inst) {
  json j;
  j["n"] = inst.model.n;
  j["p"] = inst.model.p;
  j["A"] = matrix_to_json(inst.model.A);
  j["C"] = matrix_to_json(inst.model.C);
  j["E"] = matrix_to_json(inst.data.E);
  j["G"] = matrix_to_json(inst.data.G);
  j["gamma"] = inst.gamma;
  return j;
}

DualPoint dual_point_from_json(const json& j) {
  return DualPoint(matrix_from_json(j.at("Y1")), matrix_from_json(j.at("Y2")));
}

}  // namespace

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j) {
  if (!j.is_array()) throw InvalidInput("matrix: expected an array of rows");
  const size_t rows = j.size();
  if (rows == 0) return Matrix(0, 0);
  const size_t cols = j.at(0).size();
  Matrix m(rows, cols);
  for (size_t i = 0; i < rows; ++i) {
    const json& row = j.at(i);
    if (!row.is_array() || row.size() != cols)
      throw InvalidInput("matrix: ragged rows");
    for (size_t c = 0; c < cols; ++c) {
      if (!row.at(c).is_number())
        throw InvalidInput("matrix: non-numeric entry");
      m(i, c) = row.at(c).get<double>();
    }
  }
  if (!m.allFinite()) throw InvalidInput("matrix: non-finite entry");
  return m;
}

std::string instance_hash(const ProblemInstance& instance) {
  std::ostringstream hex;
  hex << std::hex << fnv1a64(instance_fields_json(instance).dump());
  return hex.str();
}

json manifest_to_json(const RunManifest& m) {
  json j;
  j["command"] = m.command;
  j["flags"] = m.flags;
  j["instance_hash"] = m.instance_hash;
  j["seeds"] = m.seeds;
  j["timings_ms"] = m.timings_ms;
  j["version"] = m.version;
  return j;
}

void save_instance(const std::filesystem::path& path,
                   const ProblemInstance& instance,
                   const RunManifest* manifest) {
  json j = instance_fields_json(instance);
  if (manifest) j["manifest"] = manifest_to_json(*manifest);
  write_json_file(path, j);
}

ProblemInstance load_instance(const std::filesystem::path& path) {
  const json j = read_json_file(path);
  try {
    const int n = j.at("n").get<int>();
    const int p = j.at("p").get<int>();
    Matrix A = matrix_from_json(j.at("A"));
    Matrix C = matrix_from_json(j.at("C"));
    Matrix E = matrix_from_json(j.at("E"));
    Matrix G = matrix_from_json(j.at("G"));
    const double gamma = j.at("gamma").get<double>();
    if (A.rows() != n || C.rows() != p || E.rows() != p || G.rows() != p)
      throw InvalidInput("instance: dimension fields disagree with matrices");
    LtiModel model(std::move(A), std::move(C));
    return ProblemInstance(std::move(model),
                           CovarianceData(std::move(G), std::move(E)), gamma);
  } catch (const json::exception& e) {
    throw InvalidInput("instance " + path.string() + ": " + e.what());
  }
}

void save_ground_truth(const std::filesystem::path& path,
                       const MsdGroundTruth& truth,
                       const RunManifest* manifest) {
  json j;
  j["masses"] = truth.masses;
  j["Sigma_xx"] = matrix_to_json(truth.Sigma_xx);
  j["Sigma_full"] = matrix_to_json(truth.Sigma_full);
  if (manifest) j["manifest"] = manifest_to_json(*manifest);
  write_json_file(path, j);
}

Matrix load_ground_truth_sigma(const std::filesystem::path& path) {
  return matrix_from_json(read_json_file(path).at("Sigma_xx"));
}

void save_run(const std::filesystem::path& dir, const ProblemInstance& instance,
              const SolveResult& result, const RunManifest& manifest) {
  std::filesystem::create_directories(dir);
  write_json_file(dir / "manifest.json", manifest_to_json(manifest));
  save_instance(dir / "instance.json", instance);

  json sol;
  sol["solver"] = result.solver;
  sol["gamma"] = instance.gamma;
  sol["converged"] = result.converged;
  sol["iterations"] = result.iterations;
  sol["gap"] = result.gap;
  sol["primal_residual"] = result.primal_residual;
  sol["instance_hash"] = manifest.instance_hash;
  sol["manifest_ref"] = "manifest.json";
  sol["X"] = matrix_to_json(result.X);
  sol["Z"] = matrix_to_json(result.Z);
  sol["Y1"] = matrix_to_json(result.Y.Y1);
  sol["Y2"] = matrix_to_json(result.Y.Y2);
  write_json_file(dir / "solution.json", sol);

  write_history_csv(dir / "history.csv", result.solver, result.history);

  if (!result.iterates.empty()) {
    json its = json::array();
    for (const auto& Y : result.iterates) {
      json e;
      e["Y1"] = matrix_to_json(Y.Y1);
      e["Y2"] = matrix_to_json(Y.Y2);
      its.push_back(std::move(e));
    }
    json wrap;
    wrap["manifest_ref"] = "manifest.json";
    wrap["iterates"] = std::move(its);
    write_json_file(dir / "iterates.json", wrap);
  }
}

SolveResult load_solution(const std::filesystem::path& dir) {
  const json sol = read_json_file(dir / "solution.json");
  SolveResult r;
  try {
    r.solver = sol.at("solver").get<std::string>();
    r.converged = sol.at("converged").get<bool>();
    r.iterations = sol.at("iterations").get<int>();
    r.gap = sol.at("gap").is_null()
                ? std::numeric_limits<double>::quiet_NaN()
                : sol.at("gap").get<double>();
    r.primal_residual = sol.at("primal_residual").get<double>();
    r.X = matrix_from_json(sol.at("X"));
    r.Z = matrix_from_json(sol.at("Z"));
    r.Y = DualPoint(matrix_from_json(sol.at("Y1")),
                    matrix_from_json(sol.at("Y2")));
  } catch (const json::exception& e) {
    throw InvalidInput("solution " + dir.string() + ": " + e.what());
  }
  if (std::filesystem::exists(dir / "history.csv"))
    r.history = read_history_csv(dir / "history.csv");
  const auto iterates_path = dir / "iterates.json";
  if (std::filesystem::exists(iterates_path)) {
    const json its = read_json_file(iterates_path);
    for (const auto& e : its.at("iterates"))
      r.iterates.push_back(dual_point_from_json(e));
  }
  return r;
}

void write_history_csv(const std::filesystem::path& path,
                       const std::string& solver,
                       const std::vector<HistoryRow>& history) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write " + path.string());
  out << "# manifest: manifest.json\n";
  out << "solver,k,J_p,J_d,gap,primal_residual,rho,backtracks\n";
  out.precision(17);
  for (const auto& row : history) {
    out << solver << ',' << row.k << ',' << row.J_p << ',' << row.J_d << ','
        << row.gap << ',' << row.primal_residual << ',' << row.rho << ','
        << row.backtracks << '\n';
  }
}

std::vector<HistoryRow> read_history_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path.string());
  std::vector<HistoryRow> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("solver,", 0) == 0)
      continue;
    std::istringstream ss(line);
    std::string field;
    HistoryRow r;
    std::getline(ss, field, ',');  // solver tag
    std::getline(ss, field, ',');
    r.k = std::stoi(field);
    std::getline(ss, field, ',');
    r.J_p = std::stod(field);
    std::getline(ss, field, ',');
    r.J_d = std::stod(field);
    std::getline(ss, field, ',');
    r.gap = std::stod(field);
    std::getline(ss, field, ',');
    r.primal_residual = std::stod(field);
    std::getline(ss, field, ',');
    r.rho = std::stod(field);
    std::getline(ss, field, ',');
    r.backtracks = std::stoi(field);
    rows.push_back(r);
  }
  return rows;
}

void save_decomposition(const std::filesystem::path& path,
                        const ChannelDecomposition& dec) {
  json j;
  j["T"] = matrix_to_json(dec.T);
  j["B"] = matrix_to_json(dec.B);
  j["H"] = matrix_to_json(dec.H);
  j["m"] = dec.m;
  j["signature"] = {{"pi", dec.sig.pi},
                    {"nu", dec.sig.nu},
                    {"delta", dec.sig.delta},
                    {"zero_tol", dec.sig.zero_tol}};
  json evs = json::array();
  for (int i = 0; i < dec.sig.eigenvalues.size(); ++i)
    evs.push_back(dec.sig.eigenvalues(i));
  j["eigenvalues"] = std::move(evs);
  j["near_cut"] = dec.sig.near_cut;
  j["canonical_residual"] = dec.canonical_residual;
  j["reconstruction_residual"] = dec.reconstruction_residual;
  j["manifest_ref"] = "manifest.json";
  write_json_file(path, j);
}

ChannelDecomposition load_decomposition(const std::filesystem::path& path) {
  const json j = read_json_file(path);
  ChannelDecomposition dec;
  dec.T = matrix_from_json(j.at("T"));
  dec.B = matrix_from_json(j.at("B"));
  dec.H = matrix_from_json(j.at("H"));
  dec.m = j.at("m").get<int>();
  dec.sig.pi = j.at("signature").at("pi").get<int>();
  dec.sig.nu = j.at("signature").at("nu").get<int>();
  dec.sig.delta = j.at("signature").at("delta").get<int>();
  dec.sig.zero_tol = j.at("signature").at("zero_tol").get<double>();
  const auto& evs = j.at("eigenvalues");
  dec.sig.eigenvalues.resize(evs.size());
  for (size_t i = 0; i < evs.size(); ++i)
    dec.sig.eigenvalues(i) = evs.at(i).get<double>();
  dec.canonical_residual = j.at("canonical_residual").get<double>();
  dec.reconstruction_residual = j.at("reconstruction_residual").get<double>();
  return dec;
}

void save_realization(const std::filesystem::path& path,
                      const FilterRealization& fr, const std::string& mode) {
  json j;
  j["mode"] = mode;
  j["B"] = matrix_to_json(fr.B);
  j["K"] = matrix_to_json(fr.K);
  j["Omega"] = matrix_to_json(fr.Omega);
  j["Acl"] = matrix_to_json(fr.Acl);
  j["X"] = matrix_to_json(fr.X);
  j["closed_loop_residual"] = fr.closed_loop_residual;
  Eigen::EigenSolver<Matrix> es(fr.Acl, false);
  json spec = json::array();
  for (int i = 0; i < es.eigenvalues().size(); ++i)
    spec.push_back({es.eigenvalues()(i).real(), es.eigenvalues()(i).imag()});
  j["Acl_spectrum"] = std::move(spec);
  j["manifest_ref"] = "manifest.json";
  write_json_file(path, j);
}

FilterRealization load_realization(const std::filesystem::path& path) {
  const json j = read_json_file(path);
  FilterRealization fr;
  fr.B = matrix_from_json(j.at("B"));
  fr.K = matrix_from_json(j.at("K"));
  fr.Omega = matrix_from_json(j.at("Omega"));
  fr.Acl = matrix_from_json(j.at("Acl"));
  fr.X = matrix_from_json(j.at("X"));
  fr.closed_loop_residual = j.at("closed_loop_residual").get<double>();
  return fr;
}

void save_stats(const std::filesystem::path& csv_path,
                const std::filesystem::path& json_path,
                const EnsembleStats& stats, const RunManifest& manifest) {
  std::ofstream out(csv_path);
  if (!out) throw InvalidInput("cannot write " + csv_path.string());
  out << "# manifest: " << json_path.filename().string() << "\n";
  out << "time,mean_square_norm";
  const int n = static_cast<int>(stats.state_variance.cols());
  for (int i = 0; i < n; ++i) out << ",var_x" << i;
  out << "\n";
  out.precision(17);
  for (int r = 0; r < stats.times.size(); ++r) {
    out << stats.times(r) << ',' << stats.mean_square_norm(r);
    for (int i = 0; i < n; ++i) out << ',' << stats.state_variance(r, i);
    out << '\n';
  }

  json j;
  j["manifest"] = manifest_to_json(manifest);
  j["tail_start"] = stats.tail_start;
  j["steps"] = stats.steps;
  j["n_traj"] = stats.n_traj;
  j["sample_cov_final"] = matrix_to_json(stats.sample_cov_final);
  write_json_file(json_path, j);
}

}  // namespace ccama
