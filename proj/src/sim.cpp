#include "qudash/sim.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>

namespace qudash {

void SessionConfig::validate(double segment_duration) const {
  if (!(max_buffer >= segment_duration) || !std::isfinite(max_buffer)) {
    throw Error(ErrorCode::kInvalidConfig,
                "max_buffer must be at least one segment duration");
  }
  if (!(qoe_w >= 0.0) || !std::isfinite(qoe_w)) {
    throw Error(ErrorCode::kInvalidConfig, "qoe_w must be >= 0");
  }
}

nlohmann::json QoeReport::to_json() const {
  return {{"total_quality", total_quality},
          {"total_rebuffer_s", total_rebuffer},
          {"total_smoothness", total_smoothness},
          {"qoe_total", qoe_total},
          {"qoe_per_chunk", qoe_per_chunk},
          {"num_chunks", num_chunks}};
}

namespace {

void require_positive_throughput_exists(const ThroughputTrace& trace) {
  if (std::none_of(trace.samples().begin(), trace.samples().end(),
                   [](double v) { return v > 0.0; })) {
    throw Error(ErrorCode::kTraceExhausted,
                "trace '" + trace.name() + "' has no positive throughput");
  }
}

// Latest start s >= floor_time such that integral_{s}^{finish} C = size.
double latest_start(double size, const ThroughputTrace& trace, double finish,
                    double floor_time) {
  double t = finish;
  double remaining = size;
  auto idx = static_cast<std::size_t>(std::ceil(finish));
  while (idx > 0) {
    --idx;
    const double lo = std::max(static_cast<double>(idx), floor_time);
    const double rate = trace.sample(idx);
    const double cap = rate * (t - lo);
    if (rate > 0.0 && cap >= remaining) return t - remaining / rate;
    remaining -= cap;
    t = lo;
    if (t <= floor_time) break;
  }
  return floor_time;
}

}  // namespace

double download_time(double size, const ThroughputTrace& trace, double start) {
  if (!(size > 0.0) || !std::isfinite(size)) {
    throw Error(ErrorCode::kInvalidArgument, "segment size must be positive");
  }
  if (!(start >= 0.0) || !std::isfinite(start)) {
    throw Error(ErrorCode::kInvalidArgument, "download start must be >= 0");
  }
  if (trace.wraparound()) require_positive_throughput_exists(trace);

  double t = start;
  double remaining = size;
  auto idx = static_cast<std::size_t>(std::floor(start));
  while (true) {
    const double rate = trace.sample(idx);
    const double end = static_cast<double>(idx + 1);
    const double cap = rate * (end - t);
    if (rate > 0.0 && cap >= remaining) return (t - start) + remaining / rate;
    remaining -= cap;
    t = end;
    ++idx;
  }
}

StepResult step(const SessionState& state, std::size_t level, const Manifest& manifest,
                const ThroughputTrace& trace, const SessionConfig& config) {
  const double seg_dur = manifest.segment_duration();
  const double size = manifest.size(state.next_segment, level);

  double wait = 0.0;
  double dt = download_time(size, trace, state.clock);
  if (state.buffer - dt + seg_dur > config.max_buffer) {
    // Idle just long enough that the finished download lands at the cap.
    const double finish = state.clock + state.buffer + seg_dur - config.max_buffer;
    wait = latest_start(size, trace, finish, state.clock) - state.clock;
    dt = download_time(size, trace, state.clock + wait);
  }

  SegmentRecord rec;
  rec.segment = state.next_segment;
  rec.level = level;
  rec.bitrate = manifest.ladder().bitrate(level);
  rec.size = size;
  rec.start_time = state.clock + wait;
  rec.download_time = dt;
  rec.wait_time = wait;
  rec.throughput_observed = size / dt;

  const double buffer_before = std::max(0.0, state.buffer - wait);
  double buffer_after;
  if (dt <= buffer_before) {
    buffer_after = buffer_before - dt + seg_dur;
  } else {
    rec.rebuffer_time = dt - buffer_before;
    buffer_after = seg_dur;
  }
  rec.buffer_after = std::min(buffer_after, config.max_buffer);

  SessionState next = state;
  next.clock = state.clock + wait + dt;
  next.buffer = rec.buffer_after;
  next.next_segment = state.next_segment + 1;
  next.last_level = level;
  return {next, rec};
}

QoeReport qoe(std::span<const SegmentRecord> records, const BitrateLadder& ladder, double w) {
  if (records.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "QoE needs at least one segment record");
  }
  QoeReport r;
  r.num_chunks = records.size();
  for (std::size_t n = 0; n < records.size(); ++n) {
    const double q = ladder.quality(records[n].level);
    r.total_quality += q;
    r.total_rebuffer += records[n].rebuffer_time;
    if (n > 0) r.total_smoothness += std::abs(q - ladder.quality(records[n - 1].level));
  }
  r.qoe_total = r.total_quality - w * r.total_rebuffer - r.total_smoothness;
  r.qoe_per_chunk = r.qoe_total / static_cast<double>(r.num_chunks);
  return r;
}

DecisionContext make_context(const SessionState& state, const Manifest& manifest,
                             std::span<const SegmentRecord> history) {
  DecisionContext ctx;
  ctx.next_segment = state.next_segment;
  ctx.buffer = state.buffer;
  ctx.last_level = state.last_level;
  ctx.remaining_segments = manifest.num_segments() - state.next_segment;
  ctx.throughput_history.reserve(history.size());
  for (const auto& r : history) ctx.throughput_history.push_back(r.throughput_observed);
  return ctx;
}

namespace {

template <typename Choose>
SessionResult run_loop(const ThroughputTrace& trace, const Manifest& manifest,
                       const SessionConfig& config, Choose&& choose) {
  config.validate(manifest.segment_duration());
  SessionResult result;
  SessionState state;
  result.records.reserve(manifest.num_segments());
  while (state.next_segment < manifest.num_segments()) {
    std::size_t level;
    try {
      level = choose(state, result);
      if (level >= manifest.num_levels()) {
        throw Error(ErrorCode::kIndexOutOfRange,
                    "algorithm chose level " + std::to_string(level));
      }
      auto [next, rec] = step(state, level, manifest, trace, config);
      state = next;
      result.records.push_back(rec);
    } catch (const SessionError&) {
      throw;
    } catch (const Error& e) {
      throw SessionError(e, result.records);
    }
  }
  result.final_state = state;
  result.qoe = qoe(result.records, manifest.ladder(), config.qoe_w);
  return result;
}

}  // namespace

SessionResult run_session(const ThroughputTrace& trace, const Manifest& manifest,
                          AbrAlgorithm& algorithm, const SessionConfig& config) {
  return run_loop(trace, manifest, config, [&](const SessionState& state, SessionResult& res) {
    const auto ctx = make_context(state, manifest, res.records);
    auto decision = algorithm.decide(ctx, manifest);
    res.decisions.push_back(decision.report);
    return decision.level;
  });
}

SessionResult replay_session(const ThroughputTrace& trace, const Manifest& manifest,
                             std::span<const std::size_t> levels, const SessionConfig& config) {
  if (levels.size() != manifest.num_segments()) {
    throw Error(ErrorCode::kLengthMismatch, "replay needs one level per segment");
  }
  return run_loop(trace, manifest, config, [&](const SessionState& state, SessionResult&) {
    return levels[state.next_segment];
  });
}

SessionMetrics session_metrics(std::span<const SegmentRecord> records) {
  SessionMetrics m;
  if (records.empty()) return m;
  double sum = 0.0;
  for (std::size_t n = 0; n < records.size(); ++n) {
    sum += records[n].bitrate;
    if (n > 0 && records[n].level != records[n - 1].level) ++m.num_switches;
  }
  m.avg_bitrate = sum / static_cast<double>(records.size());
  return m;
}

std::string format_number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ec == std::errc() ? ptr : buf);
}

void write_records_csv(std::ostream& out, std::span<const SegmentRecord> records) {
  out << "segment,level,bitrate_mbps,size_mb,download_s,wait_s,rebuffer_s,"
         "buffer_after_s,observed_mbps\n";
  for (const auto& r : records) {
    out << r.segment << ',' << r.level << ',' << format_number(r.bitrate) << ','
        << format_number(r.size) << ',' << format_number(r.download_time) << ','
        << format_number(r.wait_time) << ',' << format_number(r.rebuffer_time) << ','
        << format_number(r.buffer_after) << ',' << format_number(r.throughput_observed)
        << '\n';
  }
}

}  // namespace qudash
