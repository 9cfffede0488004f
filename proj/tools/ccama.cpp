// Command-line front end: instance generation, solving, gamma sweeps,
// channel decomposition, filter synthesis, stochastic validation, and solver
// diagnostics. Exit codes: 0 success, 2 solver stopped at max_iter (outputs
// still written), 3 invalid input, 4 numerical failure.

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "ccama/admm.hpp"
#include "ccama/decomposition.hpp"
#include "ccama/diagnostics.hpp"
#include "ccama/io.hpp"
#include "ccama/linalg.hpp"
#include "ccama/realization.hpp"
#include "ccama/simulation.hpp"
#include "ccama/solver.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fs = std::filesystem;
using namespace ccama;

namespace {

class Stopwatch {
 public:
  explicit Stopwatch(std::map<std::string, double>& sink) : sink_(sink) {}
  template <typename F>
  auto time(const std::string& phase, F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      record(phase, t0);
    } else {
      auto out = f();
      record(phase, t0);
      return out;
    }
  }

 private:
  void record(const std::string& phase,
              std::chrono::steady_clock::time_point t0) {
    sink_[phase] = std::chrono::duration<double, std::milli>(
                       std::chrono::steady_clock::now() - t0)
                       .count();
  }
  std::map<std::string, double>& sink_;
};

std::string env_name(const std::string& flag) {
  std::string out = "CCAMA_";
  for (char c : flag) out += (c == '-') ? '_' : static_cast<char>(std::toupper(c));
  return out;
}

// Adds an option with the matching CCAMA_* environment fallback.
template <typename T>
CLI::Option* opt(CLI::App* app, const std::string& name, T& var,
                 const std::string& help) {
  auto* o = app->add_option(name, var, help);
  std::string longest;
  for (const auto& n : o->get_lnames())
    if (n.size() > longest.size()) longest = n;
  if (!longest.empty()) o->envname(env_name(longest));
  return o;
}

CLI::Option* flag(CLI::App* app, const std::string& name, bool& var,
                  const std::string& help) {
  auto* o = app->add_flag(name, var, help);
  std::string longest;
  for (const auto& n : o->get_lnames())
    if (n.size() > longest.size()) longest = n;
  if (!longest.empty()) o->envname(env_name(longest));
  return o;
}

std::string format_gamma(double gamma) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", gamma);
  return buf;
}

struct SolveFlags {
  std::string solver = "ama-bb";
  double eps_gap = 1e-4;
  double eps_primal = 1e-4;
  int max_iter = 10000;
  double rho = 1.0;
  double beta = 0.5;
  int max_backtracks = 60;
  double mu_safety = 1.05;
  double inner_tol = 1e-8;
  int inner_max = 500;
  std::string admm_policy = "constant";
  bool paper_stop = false;
  bool record_iterates = false;
};

void add_solve_flags(CLI::App* app, SolveFlags& f) {
  opt(app, "--solver", f.solver, "ama|ama-bb|ama-fixed|admm")
      ->check(CLI::IsMember({"ama", "ama-bb", "ama-fixed", "admm"}));
  opt(app, "--eps-gap", f.eps_gap, "duality-gap tolerance (epsilon_1)");
  opt(app, "--eps-primal", f.eps_primal,
      "primal-residual tolerance (epsilon_2)");
  opt(app, "--max-iter", f.max_iter, "iteration cap");
  opt(app, "--rho", f.rho,
      "fixed step (ama-fixed) or penalty/initial step (admm)");
  opt(app, "--beta", f.beta, "backtracking shrink factor");
  opt(app, "--max-backtracks", f.max_backtracks, "backtracking cap");
  opt(app, "--mu-safety", f.mu_safety, "ADMM inner-step safety factor (>= 1)");
  opt(app, "--inner-tol", f.inner_tol, "ADMM inner relative tolerance");
  opt(app, "--inner-max", f.inner_max, "ADMM inner iteration cap");
  opt(app, "--admm-policy", f.admm_policy, "constant|residual-balancing")
      ->check(CLI::IsMember({"constant", "residual-balancing"}));
  flag(app, "--paper-stop", f.paper_stop,
       "stop when either tolerance is met (literal loop condition) instead "
       "of both");
  flag(app, "--record-iterates", f.record_iterates,
       "store dual iterates for the diagnose command");
}

SolveResult run_solver(const ProblemInstance& instance, const SolveFlags& f,
                       const OperatorBundle& bundle) {
  if (f.solver == "admm") {
    AdmmOptions o;
    o.rho = f.rho;
    o.mu_safety = f.mu_safety;
    o.inner_tol = f.inner_tol;
    o.inner_max = f.inner_max;
    o.eps_gap = f.eps_gap;
    o.eps_primal = f.eps_primal;
    o.max_iter = f.max_iter;
    o.step_policy = f.admm_policy == "residual-balancing"
                        ? AdmmStepPolicy::ResidualBalancing
                        : AdmmStepPolicy::Constant;
    o.paper_stop = f.paper_stop;
    o.record_iterates = f.record_iterates;
    return solve_admm(instance, o, &bundle);
  }
  AmaOptions o;
  o.eps_gap = f.eps_gap;
  o.eps_primal = f.eps_primal;
  o.beta_backtrack = f.beta;
  o.max_iter = f.max_iter;
  o.max_backtracks = f.max_backtracks;
  o.paper_stop = f.paper_stop;
  o.record_iterates = f.record_iterates;
  if (f.solver == "ama-fixed") {
    o.step_mode = StepMode::Fixed;
    o.fixed_rho = f.rho;
  } else if (f.solver == "ama") {
    o.step_mode = StepMode::Backtracking;
    o.rho0 = f.rho;
  } else {
    o.step_mode = StepMode::BbBacktracking;
    o.rho0 = f.rho;
  }
  return solve_ama(instance, o, &bundle);
}

std::map<std::string, std::string> solve_flag_map(const SolveFlags& f) {
  return {{"solver", f.solver},
          {"eps_gap", std::to_string(f.eps_gap)},
          {"eps_primal", std::to_string(f.eps_primal)},
          {"max_iter", std::to_string(f.max_iter)},
          {"rho", std::to_string(f.rho)},
          {"beta", std::to_string(f.beta)},
          {"max_backtracks", std::to_string(f.max_backtracks)},
          {"mu_safety", std::to_string(f.mu_safety)},
          {"inner_tol", std::to_string(f.inner_tol)},
          {"inner_max", std::to_string(f.inner_max)},
          {"admm_policy", f.admm_policy},
          {"paper_stop", f.paper_stop ? "true" : "false"},
          {"record_iterates", f.record_iterates ? "true" : "false"}};
}

int cmd_gen_msd(int masses, double gamma, const std::string& out) {
  RunManifest manifest;
  manifest.command = "gen-msd";
  manifest.flags = {{"masses", std::to_string(masses)},
                    {"gamma", std::to_string(gamma)},
                    {"out", out}};
  Stopwatch watch(manifest.timings_ms);
  const MsdGroundTruth truth =
      watch.time("gen_msd", [&] { return gen_msd(masses, gamma); });
  manifest.instance_hash = instance_hash(truth.instance);
  save_instance(out, truth.instance, &manifest);
  save_ground_truth(out + ".truth.json", truth, &manifest);
  std::cout << "wrote " << out << " (n=" << truth.instance.model.n
            << ", hash " << manifest.instance_hash << ") and " << out
            << ".truth.json\n";
  return 0;
}

int cmd_solve(const std::string& instance_path, double gamma_override,
              const SolveFlags& f, const std::string& out_dir) {
  RunManifest manifest;
  manifest.command = "solve";
  manifest.flags = solve_flag_map(f);
  manifest.flags["instance"] = instance_path;
  manifest.flags["out"] = out_dir;
  Stopwatch watch(manifest.timings_ms);

  ProblemInstance instance = load_instance(instance_path);
  if (gamma_override > 0.0) {
    manifest.flags["gamma"] = std::to_string(gamma_override);
    instance = ProblemInstance(instance.model, instance.data, gamma_override);
  }
  manifest.instance_hash = instance_hash(instance);

  const OperatorBundle bundle = watch.time("operator_norms", [&] {
    return OperatorBundle(instance.model, instance.data.E);
  });
  const SolveResult result =
      watch.time("solve", [&] { return run_solver(instance, f, bundle); });
  save_run(out_dir, instance, result, manifest);
  std::cout << result.solver << ": " << (result.converged ? "converged" : "hit max_iter")
            << " after " << result.iterations << " iterations, gap "
            << result.gap << ", primal residual " << result.primal_residual
            << "\n";
  return result.converged ? 0 : 2;
}

int cmd_sweep(const std::string& instance_path, std::vector<double> gammas,
              const SolveFlags& f, const std::string& truth_path,
              const std::string& out_dir) {
  if (gammas.empty()) throw InvalidInput("sweep: need at least one gamma");
  RunManifest manifest;
  manifest.command = "sweep";
  manifest.flags = solve_flag_map(f);
  manifest.flags["instance"] = instance_path;
  manifest.flags["out"] = out_dir;
  {
    std::ostringstream gs;
    for (size_t i = 0; i < gammas.size(); ++i)
      gs << (i ? "," : "") << format_gamma(gammas[i]);
    manifest.flags["gammas"] = gs.str();
  }
  Stopwatch watch(manifest.timings_ms);

  const ProblemInstance base = load_instance(instance_path);
  manifest.instance_hash = instance_hash(base);
  std::optional<Matrix> sigma_truth;
  if (!truth_path.empty()) sigma_truth = load_ground_truth_sigma(truth_path);

  const OperatorBundle bundle = watch.time("operator_norms", [&] {
    return OperatorBundle(base.model, base.data.E);
  });

  fs::create_directories(out_dir);
  struct Row {
    double gamma;
    SolveResult result;
    Signature sig;
  };
  std::vector<Row> rows(gammas.size());
  const auto t0 = std::chrono::steady_clock::now();
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1)
#endif
  for (int i = 0; i < static_cast<int>(gammas.size()); ++i) {
    ProblemInstance inst(base.model, base.data, gammas[i]);
    Row row;
    row.gamma = gammas[i];
    row.result = run_solver(inst, f, bundle);
    row.sig = signature(row.result.Z);
    rows[i] = std::move(row);
  }
  manifest.timings_ms["sweep"] =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                t0)
          .count();

  std::ofstream csv(fs::path(out_dir) / "sweep.csv");
  csv << "# manifest: manifest.json\n";
  csv << "gamma,converged,iterations,J_p,J_d,gap,primal_residual,rel_error,"
         "pi,nu,delta,nnz_sv,m\n";
  csv.precision(17);
  bool all_converged = true;
  for (auto& row : rows) {
    ProblemInstance inst(base.model, base.data, row.gamma);
    RunManifest sub = manifest;
    sub.command = "solve";
    sub.flags["gamma"] = format_gamma(row.gamma);
    save_run(fs::path(out_dir) / ("gamma_" + format_gamma(row.gamma)), inst,
             row.result, sub);
    const auto& h = row.result.history.back();
    const double rel_error =
        sigma_truth ? (row.result.X - *sigma_truth).norm() / sigma_truth->norm()
                    : std::numeric_limits<double>::quiet_NaN();
    csv << format_gamma(row.gamma) << ',' << row.result.converged << ','
        << row.result.iterations << ',' << h.J_p << ',' << h.J_d << ','
        << h.gap << ',' << h.primal_residual << ',' << rel_error << ','
        << row.sig.pi << ',' << row.sig.nu << ',' << row.sig.delta << ','
        << (row.sig.pi + row.sig.nu) << ','
        << std::max(row.sig.pi, row.sig.nu) << '\n';
    all_converged = all_converged && row.result.converged;
  }
  csv.close();
  std::ofstream mf(fs::path(out_dir) / "manifest.json");
  mf << manifest_to_json(manifest).dump(1) << "\n";
  std::cout << "sweep over " << gammas.size() << " gamma values written to "
            << out_dir << "\n";
  return all_converged ? 0 : 2;
}

int cmd_decompose(const std::string& solution_dir, double zero_tol) {
  const SolveResult sol = load_solution(solution_dir);
  const ChannelDecomposition dec = factor_channels(sol.Z, zero_tol);
  save_decomposition(fs::path(solution_dir) / "decomposition.json", dec);
  std::cout << "signature (pi, nu, delta) = (" << dec.sig.pi << ", "
            << dec.sig.nu << ", " << dec.sig.delta << "), m = " << dec.m
            << ", reconstruction residual " << dec.reconstruction_residual
            << "\n";
  if (!dec.sig.near_cut.empty()) {
    std::cout << "warning: " << dec.sig.near_cut.size()
              << " eigenvalue(s) within a decade of the zero cut:";
    for (double v : dec.sig.near_cut) std::cout << ' ' << v;
    std::cout << "\n";
  }
  return 0;
}

int cmd_filter(const std::string& solution_dir, const std::string& mode) {
  const fs::path dir(solution_dir);
  const SolveResult sol = load_solution(dir);
  const ProblemInstance instance = load_instance(dir / "instance.json");

  ChannelDecomposition dec;
  if (fs::exists(dir / "decomposition.json"))
    dec = load_decomposition(dir / "decomposition.json");
  else
    dec = factor_channels(sol.Z);

  // The solver pair (X, Z) is only eps-consistent with the Lyapunov
  // constraint; gains are synthesized against the exactly consistent
  // covariance of the solver's Z.
  const Matrix X_c = lyapunov_solve(instance.model.A, sol.Z);
  const Matrix Omega = Matrix::Identity(dec.m, dec.m);
  FilterRealization fr =
      mode == "optimal"
          ? optimal_gain(instance.model, X_c, dec.B, Omega)
          : filter_gain(instance.model, X_c, dec.B, dec.H, Omega);
  const fs::path out = dir / ("realization_" + mode + ".json");
  save_realization(out, fr, mode);
  std::cout << "wrote " << out.string() << "; ||X_c - X||/||X|| = "
            << (X_c - sol.X).norm() / sol.X.norm()
            << ", closed-loop residual " << fr.closed_loop_residual << "\n";
  return 0;
}

int cmd_simulate(const std::string& realization_path, int traj, uint64_t seed,
                 double tfinal, double dt, const std::string& scheme,
                 int stride, int threads, const std::string& out_prefix) {
  RunManifest manifest;
  manifest.command = "simulate";
  manifest.seeds = {seed};
  Stopwatch watch(manifest.timings_ms);
  const FilterRealization fr = load_realization(realization_path);

  SimConfig cfg;
  cfg.dt = dt;
  cfg.n_traj = traj;
  cfg.seed = seed;
  cfg.scheme = scheme == "euler" ? SimScheme::EulerMaruyama
                                 : SimScheme::ExactDiscretization;
  cfg.output_stride = stride;
  cfg.threads = threads;
  if (tfinal > 0.0) {
    cfg.t_final = tfinal;
  } else {
    const double slowest = -max_real_eigenvalue(fr.Acl);
    cfg.t_final = std::ceil(60.0 / slowest);
  }
  manifest.flags = {{"realization", realization_path},
                    {"traj", std::to_string(traj)},
                    {"seed", std::to_string(seed)},
                    {"tfinal", std::to_string(cfg.t_final)},
                    {"dt", std::to_string(dt)},
                    {"scheme", scheme},
                    {"stride", std::to_string(stride)},
                    {"threads", std::to_string(threads)},
                    {"out", out_prefix}};

  const EnsembleStats stats =
      watch.time("simulate", [&] { return simulate_ensemble(fr, cfg); });
  save_stats(out_prefix + ".csv", out_prefix + ".json", stats, manifest);

  const CovarianceComparison cmp = compare_covariance(
      stats, fr.X, Matrix::Ones(fr.X.rows(), fr.X.cols()));
  std::cout << "simulated " << traj << " trajectories over t=["
            << cfg.dt << ", " << cfg.t_final
            << "]; tail sample covariance vs assigned X: rel Frobenius error "
            << cmp.full_rel_fro << "\n";
  return 0;
}

int cmd_diagnose(const std::string& solution_dir) {
  const fs::path dir(solution_dir);
  const SolveResult sol = load_solution(dir);
  if (sol.iterates.empty())
    throw InvalidInput(
        "diagnose: no recorded iterates in this run (solve with "
        "--record-iterates)");
  const ProblemInstance instance = load_instance(dir / "instance.json");
  const OperatorBundle bundle(instance.model, instance.data.E);
  const SolverDiagnostics d = diagnose(bundle, instance, sol);

  nlohmann::json j;
  j["alpha"] = d.alpha;
  j["beta"] = d.beta;
  j["lipschitz"] = d.lipschitz;
  j["rho_contraction_bound"] = d.rho_contraction;
  j["lemma_beta"] = d.lemma_beta;
  j["lemma_log_alpha"] = d.lemma_log_alpha;
  j["lemma_alpha"] = d.lemma_alpha;
  j["sigma_max_a"] = d.sigma_max_a;
  j["sigma_max_adj"] = d.sigma_max_adj;
  j["sigma_max_a1_adj"] = d.sigma_max_a1_adj;
  j["contraction_verdict"] = d.contraction_verdict;
  j["steps_checked"] = d.steps_checked;
  j["violations"] = d.violations;
  j["manifest_ref"] = "manifest.json";
  std::ofstream out(dir / "diagnostics.json");
  out << j.dump(1) << "\n";

  std::cout << "alpha " << d.alpha << ", beta " << d.beta << ", L "
            << d.lipschitz << ", contraction rho bound " << d.rho_contraction
            << ", verdict "
            << (d.contraction_verdict ? "contractive" : "violations found")
            << " (" << d.steps_checked << " steps checked)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Covariance completion toolkit"};
  app.require_subcommand(1);

  // gen-msd
  auto* gen = app.add_subcommand("gen-msd",
                                 "generate a mass-spring-damper instance");
  int masses = 10;
  double gen_gamma = 1.0;
  std::string gen_out = "instance.json";
  opt(gen, "--masses", masses, "number of masses (n = 2*masses states)")
      ->required();
  opt(gen, "--gamma", gen_gamma, "regularization weight stored in the file");
  opt(gen, "--out", gen_out, "instance file path")->required();

  // solve
  auto* solve = app.add_subcommand("solve", "solve one completion problem");
  std::string solve_instance, solve_out = "run";
  double solve_gamma = 0.0;
  SolveFlags sf;
  opt(solve, "--instance", solve_instance, "instance file")->required();
  opt(solve, "--gamma", solve_gamma, "override the instance gamma");
  opt(solve, "--out", solve_out, "run directory");
  add_solve_flags(solve, sf);

  // sweep
  auto* sweep = app.add_subcommand("sweep", "solve across a gamma list");
  std::string sweep_instance, sweep_out = "sweep", sweep_truth;
  std::vector<double> sweep_gammas;
  SolveFlags sweepf;
  opt(sweep, "--instance", sweep_instance, "instance file")->required();
  opt(sweep, "--gammas", sweep_gammas, "comma-separated gamma list")
      ->required()
      ->delimiter(',');
  opt(sweep, "--truth", sweep_truth,
      "ground-truth sidecar for relative errors");
  opt(sweep, "--out", sweep_out, "output directory");
  add_solve_flags(sweep, sweepf);

  // decompose
  auto* dec = app.add_subcommand("decompose",
                                 "factor Z into disturbance channels");
  std::string dec_dir;
  double zero_tol = 1e-6;
  opt(dec, "--solution", dec_dir, "run directory")->required();
  opt(dec, "--zero-tol", zero_tol, "relative zero tolerance for the signature");

  // filter
  auto* filt = app.add_subcommand("filter", "synthesize the realizing filter");
  std::string filt_dir, filt_mode = "eq5c";
  opt(filt, "--solution", filt_dir, "run directory")->required();
  opt(filt, "--mode", filt_mode, "eq5c|optimal")
      ->check(CLI::IsMember({"eq5c", "optimal"}));

  // simulate
  auto* sim = app.add_subcommand("simulate",
                                 "ensemble simulation of the realization");
  std::string sim_realization, sim_out = "stats", sim_scheme = "exact";
  int sim_traj = 20, sim_stride = 1, sim_threads = 0;
  uint64_t sim_seed = 1;
  double sim_tfinal = 0.0, sim_dt = 0.1;
  opt(sim, "--realization", sim_realization, "realization file")->required();
  opt(sim, "--traj", sim_traj, "number of trajectories");
  opt(sim, "--seed", sim_seed, "ensemble seed");
  opt(sim, "--tfinal", sim_tfinal, "horizon (0 = auto from the spectrum)");
  opt(sim, "--dt", sim_dt, "time step");
  opt(sim, "--scheme", sim_scheme, "exact|euler")
      ->check(CLI::IsMember({"exact", "euler"}));
  opt(sim, "--stride", sim_stride, "record statistics every k-th step");
  opt(sim, "--threads", sim_threads, "0 = all, 1 = serial");
  opt(sim, "--out", sim_out, "output prefix (.csv/.json)");

  // diagnose
  auto* diag = app.add_subcommand("diagnose",
                                  "convergence constants and contraction check");
  std::string diag_dir;
  opt(diag, "--solution", diag_dir, "run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 3;
  }

  try {
    if (gen->parsed()) return cmd_gen_msd(masses, gen_gamma, gen_out);
    if (solve->parsed())
      return cmd_solve(solve_instance, solve_gamma, sf, solve_out);
    if (sweep->parsed())
      return cmd_sweep(sweep_instance, sweep_gammas, sweepf, sweep_truth,
                       sweep_out);
    if (dec->parsed()) return cmd_decompose(dec_dir, zero_tol);
    if (filt->parsed()) return cmd_filter(filt_dir, filt_mode);
    if (sim->parsed())
      return cmd_simulate(sim_realization, sim_traj, sim_seed, sim_tfinal,
                          sim_dt, sim_scheme, sim_stride, sim_threads, sim_out);
    if (diag->parsed()) return cmd_diagnose(diag_dir);
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
