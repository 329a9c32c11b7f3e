#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qudash/abr.hpp"
#include "qudash/sim.hpp"
#include "qudash/trace.hpp"

namespace qudash {

struct ManifestSpec {
  std::vector<BitrateLevel> levels = {{1.0, "360p"},  {2.5, "480p"},  {5.0, "720p"},
                                      {8.0, "1080p"}, {16.0, "1440p"}, {40.0, "2160p"}};
  double segment_duration = 2.0;
  std::size_t num_segments = 50;
  std::string size_model = "cbr";  // "cbr" or "vbr"
  double size_jitter = 0.0;
  std::uint64_t size_seed = 0;

  Manifest build() const;
};

struct TraceSource {
  std::optional<std::string> name;
  std::optional<std::filesystem::path> file;
  std::optional<ScenarioProfile> profile;
  bool seed_explicit = false;
  bool wraparound = false;
};

struct AlgorithmSpec {
  std::string name;
  std::string type;  // rb, bb, mpc, qudash
  QudashParams qudash;
  MpcParams mpc;
  std::size_t rb_window = kDefaultPredictorWindow;
  double reservoir = kDefaultReservoir;
  double cushion = kDefaultCushion;
  bool seed_explicit = false;

  std::unique_ptr<AbrAlgorithm> make() const;
  // Sets one named parameter (a, b, c, d, horizon, n_run, n_ite, ...).
  void set_param(const std::string& param, double value);
};

struct SweepSpec {
  std::string algorithm;
  std::string param;
  std::vector<double> values;
};

// JSON experiment description; see README for the schema.
struct ExperimentConfig {
  ManifestSpec manifest;
  std::vector<TraceSource> traces;
  std::vector<AlgorithmSpec> algorithms;
  std::optional<SweepSpec> sweep;
  SessionConfig session;
  std::uint64_t seed = 0;
  std::filesystem::path out = "out";
  unsigned jobs = 1;

  // Relative trace paths resolve against base_dir.
  static ExperimentConfig from_json(const nlohmann::json& j,
                                    const std::filesystem::path& base_dir = {});
  static ExperimentConfig load(const std::filesystem::path& path);

  // Re-derives seeds that were not set explicitly from the global seed.
  void apply_seed(std::uint64_t global_seed);

  const AlgorithmSpec& algorithm(const std::string& name) const;
};

std::vector<ThroughputTrace> load_traces(const ExperimentConfig& config);

// Runs fn(i) for i in [0, n) on up to `jobs` threads.
void run_cells(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn);

struct CellResult {
  std::string trace;
  std::string algorithm;
  std::optional<SessionResult> session;
  std::string error;

  bool ok() const noexcept { return session.has_value(); }
};

CellResult run_cell(const ThroughputTrace& trace, const Manifest& manifest,
                    const AlgorithmSpec& algorithm, const SessionConfig& session);

// Writes <out>/<trace>__<alg>.segments.csv, .qoe.json and .decisions.jsonl.
CellResult cmd_run(const ExperimentConfig& config, const std::optional<std::string>& trace,
                   const std::optional<std::string>& algorithm);

// Values outside the ranges explored for the QuDASH coefficients and anneal
// budgets; the sweep still runs.
std::vector<std::string> sweep_warnings(const SweepSpec& sweep);

struct SweepRow {
  std::string trace;
  std::string param;
  double value = 0.0;
  CellResult cell;
};

// Writes <out>/sweep.csv.
std::vector<SweepRow> cmd_sweep(const ExperimentConfig& config);

struct AlgorithmSummary {
  std::string name;
  double mean_qoe_per_chunk = 0.0;
  std::size_t sessions_ok = 0;
  std::size_t wins = 0;
  double win_fraction = 0.0;
};

struct CompareResult {
  std::vector<CellResult> cells;  // trace-major, config order
  std::vector<AlgorithmSummary> summary;
  std::size_t num_traces = 0;
  std::size_t ties = 0;  // traces without a strict winner

  nlohmann::json summary_json() const;
};

// Writes <out>/compare.csv, summary.json, cdf.csv and sessions/*.csv.
CompareResult cmd_compare(const ExperimentConfig& config);

// Writes the synthetic trace CSV to `path`.
ThroughputTrace cmd_synth(const ScenarioProfile& profile, const std::filesystem::path& path);

}  // namespace qudash
