#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace qudash {

// Throughput samples in Mbps at 1 s spacing starting at t = 0. The value of
// sample i holds on [i, i + 1).
class ThroughputTrace {
 public:
  ThroughputTrace(std::string name, std::vector<double> mbps, bool wraparound = false);

  const std::string& name() const noexcept { return name_; }
  const std::vector<double>& samples() const noexcept { return mbps_; }
  std::size_t size() const noexcept { return mbps_.size(); }
  double duration() const noexcept { return static_cast<double>(mbps_.size()); }
  bool wraparound() const noexcept { return wraparound_; }
  void set_wraparound(bool on) noexcept { wraparound_ = on; }

  // Sample for second `index`, wrapping modulo size() when enabled.
  double sample(std::size_t index) const;
  double throughput_at(double t) const;

 private:
  std::string name_;
  std::vector<double> mbps_;
  bool wraparound_ = false;
};

// "t,mbps" CSV with integer timestamps 0, 1, 2, ... and at most six
// fractional digits per throughput value.
ThroughputTrace load_csv(std::istream& in, std::string name);
ThroughputTrace load_csv(const std::filesystem::path& path);
void write_csv(std::ostream& out, const ThroughputTrace& trace);
std::string format_mbps(double mbps);

enum class ScenarioKind { kStatic, kWalk, kBus };

struct ScenarioProfile {
  ScenarioKind kind = ScenarioKind::kStatic;
  double mean = 40.0;
  double stddev = 2.0;
  double drop_rate = 0.0;   // per-second probability of starting a dip
  double drop_depth = 1.0;  // throughput multiplier during a dip
  std::size_t duration = 100;
  std::uint64_t seed = 0;

  // Invented stand-ins for the three measured scenarios.
  static ScenarioProfile defaults(ScenarioKind kind, std::size_t duration = 100,
                                  std::uint64_t seed = 0);
  void validate() const;
};

ScenarioKind parse_scenario_kind(const std::string& text);
std::string to_string(ScenarioKind kind);

inline constexpr double kSynthFloorMbps = 0.1;

// Seeded Gaussian fluctuation around the mean with transient 3-8 s dips,
// floored at kSynthFloorMbps and rounded to six fractional digits.
ThroughputTrace synth_trace(const ScenarioProfile& profile);

}  // namespace qudash
