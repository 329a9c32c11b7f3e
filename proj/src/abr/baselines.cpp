#include <algorithm>
#include <cmath>

#include "qudash/abr.hpp"
#include "qudash/error.hpp"

namespace qudash {

std::size_t rb_decide(const DecisionContext& ctx, const Manifest& manifest,
                      std::size_t window) {
  const auto pred = harmonic_mean_predict(ctx.throughput_history, window);
  if (!pred.mbps) return manifest.ladder().lowest();
  return highest_level_at_most(manifest.ladder(), *pred.mbps);
}

double bb_rate_map(double buffer, const BitrateLadder& ladder, double reservoir,
                   double cushion) {
  const double r_min = ladder.bitrate(ladder.lowest());
  const double r_max = ladder.bitrate(ladder.highest());
  if (buffer <= reservoir) return r_min;
  if (buffer >= reservoir + cushion) return r_max;
  return r_min + (buffer - reservoir) / cushion * (r_max - r_min);
}

std::size_t bb_decide(const DecisionContext& ctx, const Manifest& manifest,
                      double reservoir, double cushion) {
  if (!(reservoir >= 0.0) || !(cushion > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "BB needs reservoir >= 0 and cushion > 0");
  }
  const double rate = bb_rate_map(ctx.buffer, manifest.ladder(), reservoir, cushion);
  return highest_level_at_most(manifest.ladder(), rate);
}

std::vector<std::size_t> mpc_plan(const DecisionContext& ctx, const Manifest& manifest,
                                  const MpcParams& params) {
  const auto pred = harmonic_mean_predict(ctx.throughput_history, params.window);
  const std::size_t h = std::min(params.horizon, ctx.remaining_segments);
  if (!pred.mbps || h == 0) return {};

  const double c_pred = *pred.mbps;
  const double seg_dur = manifest.segment_duration();
  const std::size_t levels = manifest.num_levels();
  const auto& ladder = manifest.ladder();

  // Download time per (step, level) under the constant prediction.
  std::vector<double> dl(h * levels);
  for (std::size_t i = 0; i < h; ++i) {
    for (std::size_t l = 0; l < levels; ++l) {
      dl[i * levels + l] = manifest.size(ctx.next_segment + i, l) / c_pred;
    }
  }

  auto score = [&](const std::vector<std::size_t>& plan) {
    double buffer = ctx.buffer;
    double total = 0.0;
    std::optional<double> prev_q;
    if (ctx.last_level) prev_q = ladder.quality(*ctx.last_level);
    for (std::size_t i = 0; i < h; ++i) {
      const double dt = dl[i * levels + plan[i]];
      const double q = ladder.quality(plan[i]);
      double rebuffer = 0.0;
      if (dt <= buffer) {
        buffer = buffer - dt + seg_dur;
      } else {
        rebuffer = dt - buffer;
        buffer = seg_dur;
      }
      total += q - params.rebuffer_weight * rebuffer;
      if (prev_q) total -= std::abs(q - *prev_q);
      prev_q = q;
    }
    return total;
  };

  std::vector<std::size_t> best;
  double best_score = 0.0;
  std::vector<std::size_t> plan(h, 0);
  // First level descends so equal scores keep the higher first bitrate.
  for (std::size_t first = levels; first-- > 0;) {
    std::fill(plan.begin(), plan.end(), 0);
    plan[0] = first;
    while (true) {
      const double s = score(plan);
      if (best.empty() || s > best_score) {
        best = plan;
        best_score = s;
      }
      std::size_t pos = 1;
      while (pos < h && ++plan[pos] == levels) plan[pos++] = 0;
      if (pos >= h) break;
    }
  }
  return best;
}

std::size_t mpc_decide(const DecisionContext& ctx, const Manifest& manifest,
                       const MpcParams& params) {
  const auto plan = mpc_plan(ctx, manifest, params);
  return plan.empty() ? manifest.ladder().lowest() : plan.front();
}

namespace {

DecisionReport baseline_report(std::string name, const DecisionContext& ctx,
                               std::size_t level, std::size_t window) {
  DecisionReport r;
  r.algorithm = std::move(name);
  r.segment = ctx.next_segment;
  r.level = level;
  if (window > 0) r.c_pred = harmonic_mean_predict(ctx.throughput_history, window).mbps;
  return r;
}

}  // namespace

Decision RbAlgorithm::decide(const DecisionContext& ctx, const Manifest& manifest) {
  const auto level = rb_decide(ctx, manifest, window_);
  return {level, baseline_report(name(), ctx, level, window_)};
}

Decision BbAlgorithm::decide(const DecisionContext& ctx, const Manifest& manifest) {
  const auto level = bb_decide(ctx, manifest, reservoir_, cushion_);
  return {level, baseline_report(name(), ctx, level, 0)};
}

Decision MpcAlgorithm::decide(const DecisionContext& ctx, const Manifest& manifest) {
  const auto level = mpc_decide(ctx, manifest, params_);
  return {level, baseline_report(name(), ctx, level, params_.window)};
}

}  // namespace qudash
