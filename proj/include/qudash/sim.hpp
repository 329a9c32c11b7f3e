#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "qudash/abr.hpp"
#include "qudash/error.hpp"
#include "qudash/trace.hpp"

namespace qudash {

struct SessionConfig {
  double max_buffer = 60.0;  // seconds
  double qoe_w = kDefaultRebufferWeight;

  void validate(double segment_duration) const;
};

struct SessionState {
  double clock = 0.0;
  double buffer = 0.0;
  std::size_t next_segment = 0;
  std::optional<std::size_t> last_level;
};

struct SegmentRecord {
  std::size_t segment = 0;
  std::size_t level = 0;
  double bitrate = 0.0;
  double size = 0.0;           // megabits
  double start_time = 0.0;     // request time, after any wait
  double download_time = 0.0;
  double rebuffer_time = 0.0;
  double wait_time = 0.0;
  double buffer_after = 0.0;
  double throughput_observed = 0.0;
};

struct QoeReport {
  double total_quality = 0.0;
  double total_rebuffer = 0.0;
  double total_smoothness = 0.0;
  double qoe_total = 0.0;
  double qoe_per_chunk = 0.0;
  std::size_t num_chunks = 0;

  nlohmann::json to_json() const;
};

// Smallest dt with integral_{start}^{start+dt} C = size over the
// piecewise-constant trace.
double download_time(double size, const ThroughputTrace& trace, double start);

struct StepResult {
  SessionState state;
  SegmentRecord record;
};

StepResult step(const SessionState& state, std::size_t level, const Manifest& manifest,
                const ThroughputTrace& trace, const SessionConfig& config);

// Smoothness runs over consecutive pairs only.
QoeReport qoe(std::span<const SegmentRecord> records, const BitrateLadder& ladder, double w);

struct SessionResult {
  std::vector<SegmentRecord> records;
  std::vector<DecisionReport> decisions;
  QoeReport qoe;
  SessionState final_state;
};

// Thrown when a step fails mid-session; carries the records completed so far.
class SessionError : public Error {
 public:
  SessionError(const Error& cause, std::vector<SegmentRecord> partial)
      : Error(cause.code(), "segment " + std::to_string(partial.size()) + ": " + cause.what()),
        partial_(std::move(partial)) {}
  const std::vector<SegmentRecord>& partial() const noexcept { return partial_; }

 private:
  std::vector<SegmentRecord> partial_;
};

DecisionContext make_context(const SessionState& state, const Manifest& manifest,
                             std::span<const SegmentRecord> history);

SessionResult run_session(const ThroughputTrace& trace, const Manifest& manifest,
                          AbrAlgorithm& algorithm, const SessionConfig& config);

// Re-runs a session from recorded per-segment levels.
SessionResult replay_session(const ThroughputTrace& trace, const Manifest& manifest,
                             std::span<const std::size_t> levels, const SessionConfig& config);

struct SessionMetrics {
  double avg_bitrate = 0.0;
  std::size_t num_switches = 0;
};
SessionMetrics session_metrics(std::span<const SegmentRecord> records);

// segment,level,bitrate_mbps,size_mb,download_s,wait_s,rebuffer_s,buffer_after_s,observed_mbps
void write_records_csv(std::ostream& out, std::span<const SegmentRecord> records);

// Shortest round-trip decimal representation.
std::string format_number(double v);

}  // namespace qudash
