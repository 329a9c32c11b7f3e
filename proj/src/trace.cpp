#include "qudash/trace.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <string_view>

#include "qudash/error.hpp"

namespace qudash {

ThroughputTrace::ThroughputTrace(std::string name, std::vector<double> mbps,
                                 bool wraparound)
    : name_(std::move(name)), mbps_(std::move(mbps)), wraparound_(wraparound) {
  if (mbps_.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "trace '" + name_ + "' has no samples");
  }
  for (std::size_t i = 0; i < mbps_.size(); ++i) {
    if (!(mbps_[i] >= 0.0) || !std::isfinite(mbps_[i])) {
      throw Error(ErrorCode::kInvalidArgument,
                  "trace '" + name_ + "' sample " + std::to_string(i) +
                      " must be finite and non-negative");
    }
  }
}

double ThroughputTrace::sample(std::size_t index) const {
  if (index < mbps_.size()) return mbps_[index];
  if (!wraparound_) {
    throw Error(ErrorCode::kTraceExhausted,
                "trace '" + name_ + "' exhausted at t=" + std::to_string(index) +
                    " s (duration " + std::to_string(mbps_.size()) + " s)");
  }
  return mbps_[index % mbps_.size()];
}

double ThroughputTrace::throughput_at(double t) const {
  if (!(t >= 0.0) || !std::isfinite(t)) {
    throw Error(ErrorCode::kInvalidArgument, "trace time must be >= 0");
  }
  return sample(static_cast<std::size_t>(std::floor(t)));
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) {
    s.remove_suffix(1);
  }
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

Error parse_error(const std::string& name, std::size_t line, const std::string& what) {
  return Error(ErrorCode::kParse,
               name + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

ThroughputTrace load_csv(std::istream& in, std::string name) {
  std::string line;
  if (!std::getline(in, line)) throw parse_error(name, 1, "empty file");
  if (trim(line) != "t,mbps") {
    throw parse_error(name, 1, "expected header 't,mbps'");
  }
  std::vector<double> mbps;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const auto row = trim(line);
    if (row.empty()) continue;
    const auto comma = row.find(',');
    double t = 0.0;
    double value = 0.0;
    if (comma == std::string_view::npos || row.find(',', comma + 1) != std::string_view::npos ||
        !parse_double(row.substr(0, comma), t) ||
        !parse_double(row.substr(comma + 1), value)) {
      throw parse_error(name, lineno, "malformed row '" + std::string(row) + "'");
    }
    if (!std::isfinite(value) || value < 0.0) {
      throw parse_error(name, lineno, "throughput must be finite and non-negative");
    }
    if (t != static_cast<double>(mbps.size())) {
      throw parse_error(name, lineno,
                        "non-uniform spacing: expected t=" + std::to_string(mbps.size()));
    }
    mbps.push_back(value);
  }
  if (mbps.empty()) throw parse_error(name, lineno, "no samples");
  return ThroughputTrace(std::move(name), std::move(mbps));
}

ThroughputTrace load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kIo, "cannot open trace file " + path.string());
  }
  auto trace = load_csv(in, path.string());
  return ThroughputTrace(path.stem().string(), trace.samples());
}

std::string format_mbps(double mbps) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", mbps);
  std::string s(buf);
  while (!s.empty() && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

void write_csv(std::ostream& out, const ThroughputTrace& trace) {
  out << "t,mbps\n";
  for (std::size_t i = 0; i < trace.size(); ++i) {
    out << i << ',' << format_mbps(trace.samples()[i]) << '\n';
  }
}

ScenarioProfile ScenarioProfile::defaults(ScenarioKind kind, std::size_t duration,
                                          std::uint64_t seed) {
  ScenarioProfile p;
  p.kind = kind;
  p.duration = duration;
  p.seed = seed;
  switch (kind) {
    case ScenarioKind::kStatic:
      p.mean = 40.0, p.stddev = 2.0, p.drop_rate = 0.0, p.drop_depth = 1.0;
      break;
    case ScenarioKind::kWalk:
      p.mean = 30.0, p.stddev = 6.0, p.drop_rate = 0.02, p.drop_depth = 0.4;
      break;
    case ScenarioKind::kBus:
      p.mean = 25.0, p.stddev = 12.0, p.drop_rate = 0.05, p.drop_depth = 0.3;
      break;
  }
  return p;
}

void ScenarioProfile::validate() const {
  if (!(mean > 0.0) || !std::isfinite(mean)) {
    throw Error(ErrorCode::kInvalidConfig, "profile mean must be > 0");
  }
  if (!(stddev >= 0.0) || !std::isfinite(stddev)) {
    throw Error(ErrorCode::kInvalidConfig, "profile stddev must be >= 0");
  }
  if (!(drop_rate >= 0.0 && drop_rate <= 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "profile drop_rate must be in [0, 1]");
  }
  if (!(drop_depth >= 0.0) || !std::isfinite(drop_depth)) {
    throw Error(ErrorCode::kInvalidConfig, "profile drop_depth must be >= 0");
  }
  if (duration == 0) {
    throw Error(ErrorCode::kInvalidConfig, "profile duration must be >= 1 s");
  }
}

ScenarioKind parse_scenario_kind(const std::string& text) {
  if (text == "static") return ScenarioKind::kStatic;
  if (text == "walk") return ScenarioKind::kWalk;
  if (text == "bus") return ScenarioKind::kBus;
  throw Error(ErrorCode::kInvalidConfig, "unknown scenario '" + text + "'");
}

std::string to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::kStatic: return "static";
    case ScenarioKind::kWalk: return "walk";
    case ScenarioKind::kBus: return "bus";
  }
  return "static";
}

ThroughputTrace synth_trace(const ScenarioProfile& profile) {
  profile.validate();
  std::mt19937_64 rng(profile.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> burst_len(3, 8);

  std::vector<double> mbps(profile.duration);
  int burst_left = 0;
  for (auto& v : mbps) {
    double x = profile.mean;
    if (profile.stddev > 0.0) x += profile.stddev * noise(rng);
    if (burst_left == 0 && profile.drop_rate > 0.0 && unit(rng) < profile.drop_rate) {
      burst_left = burst_len(rng);
    }
    if (burst_left > 0) {
      x *= profile.drop_depth;
      --burst_left;
    }
    x = std::max(x, kSynthFloorMbps);
    v = std::round(x * 1e6) / 1e6;
  }
  return ThroughputTrace(to_string(profile.kind) + "_" + std::to_string(profile.seed),
                         std::move(mbps));
}

}  // namespace qudash
