#pragma once

#include <filesystem>
#include <map>
#include <string>

#include <json.hpp>

#include "ccama/decomposition.hpp"
#include "ccama/problem.hpp"
#include "ccama/realization.hpp"
#include "ccama/simulation.hpp"
#include "ccama/solver.hpp"

namespace ccama {

inline constexpr const char* kVersion = "ccama 0.1.0";

nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j);

// FNV-1a over the canonical dump of the instance fields; identifies an
// instance across run artifacts.
std::string instance_hash(const ProblemInstance& instance);

// Command provenance attached to every artifact (embedded, or referenced by
// living next to manifest.json in a run directory).
struct RunManifest {
  std::string command;
  std::map<std::string, std::string> flags;
  std::string instance_hash;
  std::vector<uint64_t> seeds;
  std::map<std::string, double> timings_ms;
  std::string version = kVersion;
};

nlohmann::json manifest_to_json(const RunManifest& m);

// Instance file: {"n", "p", "A", "C", "E", "G", "gamma"} with matrices as
// nested row arrays. On load: entries must be finite, E binary symmetric,
// G symmetric to 1e-12 (then symmetrized), A Hurwitz, gamma > 0.
void save_instance(const std::filesystem::path& path,
                   const ProblemInstance& instance,
                   const RunManifest* manifest = nullptr);
ProblemInstance load_instance(const std::filesystem::path& path);

void save_ground_truth(const std::filesystem::path& path,
                       const MsdGroundTruth& truth,
                       const RunManifest* manifest = nullptr);
Matrix load_ground_truth_sigma(const std::filesystem::path& path);

// Run directory: manifest.json, instance.json, solution.json, history.csv,
// optionally iterates.json.
void save_run(const std::filesystem::path& dir, const ProblemInstance& instance,
              const SolveResult& result, const RunManifest& manifest);
SolveResult load_solution(const std::filesystem::path& dir);

void write_history_csv(const std::filesystem::path& path,
                       const std::string& solver,
                       const std::vector<HistoryRow>& history);
std::vector<HistoryRow> read_history_csv(const std::filesystem::path& path);

void save_decomposition(const std::filesystem::path& path,
                        const ChannelDecomposition& dec);
ChannelDecomposition load_decomposition(const std::filesystem::path& path);

void save_realization(const std::filesystem::path& path,
                      const FilterRealization& fr, const std::string& mode);
FilterRealization load_realization(const std::filesystem::path& path);

void save_stats(const std::filesystem::path& csv_path,
                const std::filesystem::path& json_path,
                const EnsembleStats& stats, const RunManifest& manifest);

}  // namespace ccama
