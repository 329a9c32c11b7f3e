// qudash: trace-driven ABR experiment harness.
//
//   qudash run     --config cfg.json [--trace NAME] [--algorithm NAME]
//   qudash sweep   --config cfg.json
//   qudash compare --config cfg.json
//   qudash synth   --profile bus --duration 100 --seed 3 --out traces/
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or validation error.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "qudash/error.hpp"
#include "qudash/experiment.hpp"

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

int exit_code_for(const qudash::Error& e) {
  switch (e.code()) {
    case qudash::ErrorCode::kInvalidConfig:
    case qudash::ErrorCode::kParse:
    case qudash::ErrorCode::kIo:
    case qudash::ErrorCode::kInvalidArgument:
      return kExitUsage;
    default:
      return kExitRuntime;
  }
}

struct GlobalFlags {
  std::string config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> jobs;
};

qudash::ExperimentConfig load_config(const GlobalFlags& flags) {
  if (flags.config.empty()) {
    throw qudash::Error(qudash::ErrorCode::kInvalidConfig, "--config is required");
  }
  auto cfg = qudash::ExperimentConfig::load(flags.config);
  if (flags.out) cfg.out = *flags.out;
  if (flags.seed) cfg.apply_seed(*flags.seed);
  if (flags.jobs) cfg.jobs = std::max(1u, *flags.jobs);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"QUBO/annealing ABR simulation toolkit"};
  app.require_subcommand(1);

  GlobalFlags flags;
  auto add_globals = [&](CLI::App* sub) {
    sub->add_option("--config", flags.config, "Experiment config (JSON)");
    sub->add_option("--out", flags.out, "Output directory");
    sub->add_option("--seed", flags.seed, "Global seed");
    sub->add_option("--jobs", flags.jobs, "Parallel sessions");
  };

  auto* run = app.add_subcommand("run", "Run one session and write its records");
  add_globals(run);
  std::optional<std::string> trace_name, algorithm_name;
  run->add_option("--trace", trace_name, "Trace name (default: first)");
  run->add_option("--algorithm", algorithm_name, "Algorithm name (default: first)");

  auto* sweep = app.add_subcommand("sweep", "Sweep one parameter across traces");
  add_globals(sweep);

  auto* compare = app.add_subcommand("compare", "Compare algorithms across traces");
  add_globals(compare);

  auto* synth = app.add_subcommand("synth", "Generate a synthetic throughput trace");
  std::string profile_name = "static";
  std::size_t duration = 100;
  std::uint64_t synth_seed = 0;
  std::optional<double> mean, stddev, drop_rate, drop_depth;
  std::string synth_out = ".";
  std::optional<std::string> synth_file;
  synth->add_option("--profile", profile_name, "static, walk or bus");
  synth->add_option("--duration", duration, "Seconds");
  synth->add_option("--seed", synth_seed, "Seed");
  synth->add_option("--mean", mean, "Mean Mbps");
  synth->add_option("--stddev", stddev, "Std-dev Mbps");
  synth->add_option("--drop-rate", drop_rate, "Per-second dip probability");
  synth->add_option("--drop-depth", drop_depth, "Dip multiplier");
  synth->add_option("--out", synth_out, "Output directory");
  synth->add_option("--file", synth_file, "Output file (overrides --out)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*run) {
      const auto cfg = load_config(flags);
      const auto cell = qudash::cmd_run(cfg, trace_name, algorithm_name);
      if (!cell.ok()) {
        std::cerr << "error: " << cell.trace << "/" << cell.algorithm << ": " << cell.error
                  << "\n";
        return kExitRuntime;
      }
      std::cout << cell.trace << "," << cell.algorithm << ",qoe_per_chunk="
                << qudash::format_number(cell.session->qoe.qoe_per_chunk) << "\n";
    } else if (*sweep) {
      const auto cfg = load_config(flags);
      if (cfg.sweep) {
        for (const auto& w : qudash::sweep_warnings(*cfg.sweep)) {
          std::cerr << "warning: " << w << "\n";
        }
      }
      const auto rows = qudash::cmd_sweep(cfg);
      std::size_t failed = 0;
      for (const auto& r : rows) failed += r.cell.ok() ? 0 : 1;
      std::cout << "wrote " << (cfg.out / "sweep.csv").string() << " (" << rows.size()
                << " rows, " << failed << " failed)\n";
    } else if (*compare) {
      const auto cfg = load_config(flags);
      const auto result = qudash::cmd_compare(cfg);
      std::cout << result.summary_json().dump(2) << "\n";
    } else if (*synth) {
      auto profile = qudash::ScenarioProfile::defaults(qudash::parse_scenario_kind(profile_name),
                                                       duration, synth_seed);
      if (mean) profile.mean = *mean;
      if (stddev) profile.stddev = *stddev;
      if (drop_rate) profile.drop_rate = *drop_rate;
      if (drop_depth) profile.drop_depth = *drop_depth;
      const std::filesystem::path path =
          synth_file ? std::filesystem::path(*synth_file)
                     : std::filesystem::path(synth_out) /
                           (profile_name + "_" + std::to_string(synth_seed) + ".csv");
      const auto trace = qudash::cmd_synth(profile, path);
      std::cout << "wrote " << path.string() << " (" << trace.size() << " samples)\n";
    }
  } catch (const qudash::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
