#include "qudash/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "qudash/error.hpp"

namespace qudash {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

Error config_error(const std::string& what) {
  return Error(ErrorCode::kInvalidConfig, what);
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw config_error(std::string("field '") + key + "': " + e.what());
  }
}

void reject_unknown_keys(const json& j, const std::set<std::string>& known,
                         const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw config_error("unknown key '" + key + "' in " + where);
  }
}

ManifestSpec parse_manifest(const json& j) {
  ManifestSpec m;
  if (!j.is_object()) throw config_error("manifest must be an object");
  reject_unknown_keys(j,
                      {"bitrates_mbps", "labels", "segment_duration_s", "num_segments",
                       "size_model", "size_jitter", "size_seed"},
                      "manifest");
  if (j.contains("bitrates_mbps")) {
    const auto rates = get_or<std::vector<double>>(j, "bitrates_mbps", {});
    const auto labels = get_or<std::vector<std::string>>(j, "labels", {});
    if (!labels.empty() && labels.size() != rates.size()) {
      throw config_error("manifest labels must match bitrates_mbps");
    }
    m.levels.clear();
    for (std::size_t l = 0; l < rates.size(); ++l) {
      m.levels.push_back({rates[l], labels.empty() ? "L" + std::to_string(l) : labels[l]});
    }
  }
  m.segment_duration = get_or(j, "segment_duration_s", m.segment_duration);
  m.num_segments = get_or(j, "num_segments", m.num_segments);
  m.size_model = get_or(j, "size_model", m.size_model);
  m.size_jitter = get_or(j, "size_jitter", m.size_jitter);
  m.size_seed = get_or(j, "size_seed", m.size_seed);
  if (m.size_model != "cbr" && m.size_model != "vbr") {
    throw config_error("size_model must be 'cbr' or 'vbr'");
  }
  m.build();
  return m;
}

TraceSource parse_trace(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw config_error("trace entries must be objects");
  reject_unknown_keys(j,
                      {"name", "file", "profile", "duration_s", "seed", "mean", "stddev",
                       "drop_rate", "drop_depth", "wraparound"},
                      "trace");
  TraceSource t;
  if (j.contains("name")) t.name = get_or<std::string>(j, "name", "");
  t.wraparound = get_or(j, "wraparound", false);
  if (j.contains("file") == j.contains("profile")) {
    throw config_error("each trace needs exactly one of 'file' or 'profile'");
  }
  if (j.contains("file")) {
    fs::path p = get_or<std::string>(j, "file", "");
    t.file = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
    return t;
  }
  const auto kind = parse_scenario_kind(get_or<std::string>(j, "profile", ""));
  auto p = ScenarioProfile::defaults(kind, get_or<std::size_t>(j, "duration_s", 100));
  t.seed_explicit = j.contains("seed");
  p.seed = get_or(j, "seed", p.seed);
  p.mean = get_or(j, "mean", p.mean);
  p.stddev = get_or(j, "stddev", p.stddev);
  p.drop_rate = get_or(j, "drop_rate", p.drop_rate);
  p.drop_depth = get_or(j, "drop_depth", p.drop_depth);
  p.validate();
  t.profile = p;
  return t;
}

AlgorithmSpec parse_algorithm(const json& j) {
  if (j.is_string()) return parse_algorithm(json{{"name", j.get<std::string>()}});
  if (!j.is_object()) throw config_error("algorithm entries must be objects");
  reject_unknown_keys(j, {"name", "type", "params"}, "algorithm");
  AlgorithmSpec a;
  a.name = get_or<std::string>(j, "name", "");
  a.type = get_or<std::string>(j, "type", a.name);
  if (a.name.empty()) throw config_error("algorithm needs a name");
  const json params = j.contains("params") ? j.at("params") : json::object();
  if (!params.is_object()) throw config_error("algorithm params must be an object");
  if (a.type == "qudash") {
    a.qudash = qudash_params_from_json(params);
    a.seed_explicit = params.contains("anneal") && params.at("anneal").contains("seed");
  } else if (a.type == "mpc") {
    reject_unknown_keys(params, {"horizon", "window", "rebuffer_weight"}, "mpc params");
    a.mpc.horizon = get_or(params, "horizon", a.mpc.horizon);
    a.mpc.window = get_or(params, "window", a.mpc.window);
    a.mpc.rebuffer_weight = get_or(params, "rebuffer_weight", a.mpc.rebuffer_weight);
  } else if (a.type == "rb") {
    reject_unknown_keys(params, {"window"}, "rb params");
    a.rb_window = get_or(params, "window", a.rb_window);
  } else if (a.type == "bb") {
    reject_unknown_keys(params, {"reservoir", "cushion"}, "bb params");
    a.reservoir = get_or(params, "reservoir", a.reservoir);
    a.cushion = get_or(params, "cushion", a.cushion);
  } else {
    throw config_error("unknown algorithm type '" + a.type + "'");
  }
  a.make();
  return a;
}

std::string csv_safe(std::string s) {
  std::replace_if(s.begin(), s.end(), [](char c) { return c == ',' || c == '\n' || c == '\r'; },
                  ';');
  return s;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << content;
  if (!out) throw Error(ErrorCode::kIo, "failed writing " + path.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create directory " + dir.string());
}

std::string records_csv(const std::vector<SegmentRecord>& records) {
  std::ostringstream os;
  write_records_csv(os, records);
  return os.str();
}

std::string decisions_jsonl(const std::vector<DecisionReport>& decisions) {
  std::string s;
  for (const auto& d : decisions) s += d.to_json().dump() + "\n";
  return s;
}

bool is_integral_param(const std::string& p) {
  return p == "horizon" || p == "predictor_window" || p == "window" || p == "n_run" ||
         p == "n_ite";
}

}  // namespace

Manifest ManifestSpec::build() const {
  BitrateLadder ladder(levels, segment_duration);
  if (size_model == "vbr") {
    return Manifest::variable_bitrate(std::move(ladder), num_segments, size_jitter, size_seed);
  }
  return Manifest::constant_bitrate(std::move(ladder), num_segments);
}

std::unique_ptr<AbrAlgorithm> AlgorithmSpec::make() const {
  if (type == "rb") return std::make_unique<RbAlgorithm>(rb_window);
  if (type == "bb") return std::make_unique<BbAlgorithm>(reservoir, cushion);
  if (type == "mpc") {
    if (mpc.horizon < 1 || mpc.window < 1) {
      throw config_error("mpc horizon and window must be >= 1");
    }
    return std::make_unique<MpcAlgorithm>(mpc);
  }
  if (type == "qudash") return std::make_unique<QudashAlgorithm>(qudash);
  throw config_error("unknown algorithm type '" + type + "'");
}

void AlgorithmSpec::set_param(const std::string& param, double value) {
  if (is_integral_param(param) && !(value >= 1.0 && std::floor(value) == value)) {
    throw config_error("parameter '" + param + "' needs a positive integer value");
  }
  const auto as_count = static_cast<std::size_t>(value);
  bool known = true;
  if (type == "qudash") {
    auto& q = qudash;
    if (param == "a") q.a = value;
    else if (param == "b") q.b = value;
    else if (param == "c") q.c = value;
    else if (param == "d") q.d = value;
    else if (param == "horizon") q.horizon = as_count;
    else if (param == "predictor_window") q.predictor_window = as_count;
    else if (param == "n_run") q.anneal.n_run = as_count;
    else if (param == "n_ite") q.anneal.n_ite = as_count;
    else if (param == "t_init") q.anneal.t_init = value;
    else if (param == "t_final") q.anneal.t_final = value;
    else if (param == "offset_step") q.anneal.offset_step = value;
    else known = false;
    if (known) q.validate();
  } else if (type == "mpc") {
    if (param == "horizon") mpc.horizon = as_count;
    else if (param == "window") mpc.window = as_count;
    else if (param == "rebuffer_weight") mpc.rebuffer_weight = value;
    else known = false;
  } else if (type == "rb") {
    if (param == "window") rb_window = as_count;
    else known = false;
  } else if (type == "bb") {
    if (param == "reservoir") reservoir = value;
    else if (param == "cushion") cushion = value;
    else known = false;
  } else {
    known = false;
  }
  if (!known) {
    throw config_error("algorithm '" + name + "' (" + type + ") has no parameter '" + param +
                       "'");
  }
}

ExperimentConfig ExperimentConfig::from_json(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw config_error("config must be a JSON object");
  reject_unknown_keys(j,
                      {"manifest", "traces", "algorithms", "sweep", "session", "seed", "out",
                       "jobs"},
                      "config");
  ExperimentConfig c;
  if (j.contains("manifest")) c.manifest = parse_manifest(j.at("manifest"));
  if (j.contains("traces")) {
    if (!j.at("traces").is_array()) throw config_error("'traces' must be an array");
    for (const auto& t : j.at("traces")) c.traces.push_back(parse_trace(t, base_dir));
  }
  if (j.contains("algorithms")) {
    if (!j.at("algorithms").is_array()) throw config_error("'algorithms' must be an array");
    for (const auto& a : j.at("algorithms")) c.algorithms.push_back(parse_algorithm(a));
  }
  if (c.traces.empty()) throw config_error("config needs at least one trace");
  if (c.algorithms.empty()) throw config_error("config needs at least one algorithm");
  std::set<std::string> names;
  for (const auto& a : c.algorithms) {
    if (!names.insert(a.name).second) throw config_error("duplicate algorithm '" + a.name + "'");
  }
  if (j.contains("session")) {
    const auto& s = j.at("session");
    reject_unknown_keys(s, {"max_buffer_s", "qoe_w"}, "session");
    c.session.max_buffer = get_or(s, "max_buffer_s", c.session.max_buffer);
    c.session.qoe_w = get_or(s, "qoe_w", c.session.qoe_w);
  }
  c.session.validate(c.manifest.segment_duration);
  if (j.contains("sweep")) {
    const auto& s = j.at("sweep");
    reject_unknown_keys(s, {"algorithm", "param", "values"}, "sweep");
    SweepSpec sweep;
    sweep.param = get_or<std::string>(s, "param", "");
    sweep.values = get_or<std::vector<double>>(s, "values", {});
    sweep.algorithm = get_or<std::string>(s, "algorithm", c.algorithms.front().name);
    c.sweep = sweep;
  }
  c.seed = get_or<std::uint64_t>(j, "seed", 0);
  c.out = get_or<std::string>(j, "out", "out");
  c.jobs = std::max(1u, get_or<unsigned>(j, "jobs", 1));
  c.apply_seed(c.seed);
  return c;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParse, path.string() + ": " + e.what());
  }
  return from_json(j, path.parent_path());
}

void ExperimentConfig::apply_seed(std::uint64_t global_seed) {
  seed = global_seed;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    if (traces[i].profile && !traces[i].seed_explicit) {
      traces[i].profile->seed = replica_seed(global_seed, i);
    }
  }
  for (std::size_t i = 0; i < algorithms.size(); ++i) {
    if (algorithms[i].type == "qudash" && !algorithms[i].seed_explicit) {
      algorithms[i].qudash.anneal.seed = replica_seed(global_seed ^ 0xa5a5a5a5ULL, i);
    }
  }
}

const AlgorithmSpec& ExperimentConfig::algorithm(const std::string& name) const {
  for (const auto& a : algorithms) {
    if (a.name == name) return a;
  }
  throw config_error("no algorithm named '" + name + "'");
}

std::vector<ThroughputTrace> load_traces(const ExperimentConfig& config) {
  std::vector<ThroughputTrace> out;
  std::set<std::string> names;
  for (std::size_t i = 0; i < config.traces.size(); ++i) {
    const auto& src = config.traces[i];
    std::optional<ThroughputTrace> trace;
    if (src.file) {
      if (!fs::exists(*src.file)) {
        throw Error(ErrorCode::kIo, "trace file not found: " + src.file->string());
      }
      trace = load_csv(*src.file);
    } else {
      trace = synth_trace(*src.profile);
    }
    std::string name = src.name.value_or(
        src.file ? src.file->stem().string() : to_string(src.profile->kind) + "_" + std::to_string(i));
    if (!names.insert(name).second) throw config_error("duplicate trace name '" + name + "'");
    out.emplace_back(name, trace->samples(), src.wraparound);
  }
  return out;
}

void run_cells(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn) {
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, jobs), n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
}

CellResult run_cell(const ThroughputTrace& trace, const Manifest& manifest,
                    const AlgorithmSpec& algorithm, const SessionConfig& session) {
  CellResult cell;
  cell.trace = trace.name();
  cell.algorithm = algorithm.name;
  try {
    auto algo = algorithm.make();
    cell.session = run_session(trace, manifest, *algo, session);
  } catch (const Error& e) {
    cell.error = e.what();
  }
  return cell;
}

CellResult cmd_run(const ExperimentConfig& config, const std::optional<std::string>& trace_name,
                   const std::optional<std::string>& algorithm_name) {
  const auto traces = load_traces(config);
  const auto manifest = config.manifest.build();
  const auto& algo = algorithm_name ? config.algorithm(*algorithm_name) : config.algorithms.front();
  const ThroughputTrace* trace = &traces.front();
  if (trace_name) {
    auto it = std::find_if(traces.begin(), traces.end(),
                           [&](const auto& t) { return t.name() == *trace_name; });
    if (it == traces.end()) throw config_error("no trace named '" + *trace_name + "'");
    trace = &*it;
  }
  auto cell = run_cell(*trace, manifest, algo, config.session);
  if (!cell.ok()) return cell;

  ensure_dir(config.out);
  const std::string stem = cell.trace + "__" + cell.algorithm;
  write_file(config.out / (stem + ".segments.csv"), records_csv(cell.session->records));
  write_file(config.out / (stem + ".qoe.json"), cell.session->qoe.to_json().dump(2) + "\n");
  write_file(config.out / (stem + ".decisions.jsonl"), decisions_jsonl(cell.session->decisions));
  return cell;
}

std::vector<std::string> sweep_warnings(const SweepSpec& sweep) {
  struct Range {
    double lo, hi;
  };
  static const std::map<std::string, Range> ranges = {
      {"a", {1.0, 1e4}},     {"b", {1.0, 1e4}},     {"c", {1e2, 1e6}},
      {"d", {1.0, 1e4}},     {"n_ite", {1e2, 1e7}}, {"n_run", {32.0, 128.0}},
  };
  std::vector<std::string> warnings;
  auto it = ranges.find(sweep.param);
  if (it == ranges.end()) return warnings;
  for (double v : sweep.values) {
    if (v < it->second.lo || v > it->second.hi) {
      warnings.push_back("value " + format_number(v) + " for '" + sweep.param +
                         "' is outside the usual range [" + format_number(it->second.lo) +
                         ", " + format_number(it->second.hi) + "]");
    }
  }
  return warnings;
}

std::vector<SweepRow> cmd_sweep(const ExperimentConfig& config) {
  if (!config.sweep) throw config_error("sweep requires a 'sweep' block");
  const auto& sweep = *config.sweep;
  if (sweep.param.empty()) throw config_error("sweep needs a 'param'");
  if (sweep.values.empty()) throw config_error("sweep needs at least one value");
  {
    std::set<double> seen;
    for (double v : sweep.values) {
      if (!seen.insert(v).second) {
        throw config_error("duplicate sweep value " + format_number(v));
      }
    }
  }
  const auto& base = config.algorithm(sweep.algorithm);
  std::vector<AlgorithmSpec> variants;
  for (double v : sweep.values) {
    auto spec = base;
    spec.set_param(sweep.param, v);
    variants.push_back(std::move(spec));
  }

  const auto traces = load_traces(config);
  const auto manifest = config.manifest.build();

  std::vector<SweepRow> rows(traces.size() * variants.size());
  run_cells(rows.size(), config.jobs, [&](std::size_t i) {
    const auto& trace = traces[i / variants.size()];
    const std::size_t v = i % variants.size();
    rows[i] = {trace.name(), sweep.param, sweep.values[v],
               run_cell(trace, manifest, variants[v], config.session)};
  });
  std::stable_sort(rows.begin(), rows.end(), [](const SweepRow& x, const SweepRow& y) {
    return std::tie(x.trace, x.value) < std::tie(y.trace, y.value);
  });

  std::ostringstream os;
  os << "trace,param,value,qoe_per_chunk,total_rebuffer_s,avg_bitrate_mbps,num_switches,status\n";
  for (const auto& r : rows) {
    os << r.trace << ',' << r.param << ',' << format_number(r.value) << ',';
    if (r.cell.ok()) {
      const auto& s = *r.cell.session;
      const auto m = session_metrics(s.records);
      os << format_number(s.qoe.qoe_per_chunk) << ',' << format_number(s.qoe.total_rebuffer)
         << ',' << format_number(m.avg_bitrate) << ',' << m.num_switches << ",ok\n";
    } else {
      os << ",,,,error: " << csv_safe(r.cell.error) << '\n';
    }
  }
  ensure_dir(config.out);
  write_file(config.out / "sweep.csv", os.str());
  return rows;
}

json CompareResult::summary_json() const {
  json algos = json::array();
  for (const auto& a : summary) {
    algos.push_back({{"name", a.name},
                     {"mean_qoe_per_chunk", a.mean_qoe_per_chunk},
                     {"sessions_ok", a.sessions_ok},
                     {"wins", a.wins},
                     {"win_fraction", a.win_fraction}});
  }
  return {{"num_traces", num_traces}, {"ties", ties}, {"algorithms", algos}};
}

CompareResult cmd_compare(const ExperimentConfig& config) {
  if (config.algorithms.size() < 2) {
    throw config_error("compare needs at least two algorithms");
  }
  const auto traces = load_traces(config);
  const auto manifest = config.manifest.build();
  const std::size_t n_alg = config.algorithms.size();

  CompareResult result;
  result.num_traces = traces.size();
  result.cells.resize(traces.size() * n_alg);
  run_cells(result.cells.size(), config.jobs, [&](std::size_t i) {
    result.cells[i] =
        run_cell(traces[i / n_alg], manifest, config.algorithms[i % n_alg], config.session);
  });

  result.summary.resize(n_alg);
  std::vector<std::vector<double>> per_alg(n_alg);
  for (std::size_t a = 0; a < n_alg; ++a) result.summary[a].name = config.algorithms[a].name;
  for (std::size_t t = 0; t < traces.size(); ++t) {
    std::optional<double> best;
    std::size_t best_count = 0;
    std::size_t best_alg = 0;
    for (std::size_t a = 0; a < n_alg; ++a) {
      const auto& cell = result.cells[t * n_alg + a];
      if (!cell.ok()) continue;
      const double q = cell.session->qoe.qoe_per_chunk;
      per_alg[a].push_back(q);
      if (!best || q > *best) {
        best = q;
        best_count = 1;
        best_alg = a;
      } else if (q == *best) {
        ++best_count;
      }
    }
    if (best_count == 1) {
      ++result.summary[best_alg].wins;
    } else {
      ++result.ties;
    }
  }
  for (std::size_t a = 0; a < n_alg; ++a) {
    auto& s = result.summary[a];
    s.sessions_ok = per_alg[a].size();
    double sum = 0.0;
    for (double q : per_alg[a]) sum += q;
    s.mean_qoe_per_chunk = s.sessions_ok ? sum / static_cast<double>(s.sessions_ok) : 0.0;
    s.win_fraction =
        traces.empty() ? 0.0 : static_cast<double>(s.wins) / static_cast<double>(traces.size());
  }

  ensure_dir(config.out / "sessions");
  std::ostringstream compare;
  compare << "trace,algorithm,qoe_per_chunk,qoe_total,total_rebuffer_s,avg_bitrate_mbps,"
             "num_switches,status\n";
  for (const auto& cell : result.cells) {
    compare << cell.trace << ',' << cell.algorithm << ',';
    if (cell.ok()) {
      const auto& s = *cell.session;
      const auto m = session_metrics(s.records);
      compare << format_number(s.qoe.qoe_per_chunk) << ',' << format_number(s.qoe.qoe_total)
              << ',' << format_number(s.qoe.total_rebuffer) << ','
              << format_number(m.avg_bitrate) << ',' << m.num_switches << ",ok\n";
      write_file(config.out / "sessions" / (cell.trace + "__" + cell.algorithm + ".segments.csv"),
                 records_csv(s.records));
    } else {
      compare << ",,,,,error: " << csv_safe(cell.error) << '\n';
    }
  }
  write_file(config.out / "compare.csv", compare.str());
  write_file(config.out / "summary.json", result.summary_json().dump(2) + "\n");

  std::ostringstream cdf;
  cdf << "algorithm,rank,qoe_per_chunk,cdf\n";
  for (std::size_t a = 0; a < n_alg; ++a) {
    auto values = per_alg[a];
    std::sort(values.begin(), values.end());
    for (std::size_t k = 0; k < values.size(); ++k) {
      cdf << result.summary[a].name << ',' << (k + 1) << ',' << format_number(values[k]) << ','
          << format_number(static_cast<double>(k + 1) / static_cast<double>(values.size()))
          << '\n';
    }
  }
  write_file(config.out / "cdf.csv", cdf.str());
  return result;
}

ThroughputTrace cmd_synth(const ScenarioProfile& profile, const fs::path& path) {
  auto trace = synth_trace(profile);
  if (path.has_parent_path()) ensure_dir(path.parent_path());
  std::ostringstream os;
  write_csv(os, trace);
  write_file(path, os.str());
  return trace;
}

}  // namespace qudash
