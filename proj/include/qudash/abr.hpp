#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "qudash/annealer.hpp"
#include "qudash/qubo.hpp"

namespace qudash {

struct BitrateLevel {
  double mbps = 0.0;
  std::string label;
};

// Ascending bitrate ladder. Quality q(l) is the level's bitrate in Mbps.
class BitrateLadder {
 public:
  BitrateLadder(std::vector<BitrateLevel> levels, double segment_duration);

  // 1, 2.5, 5, 8, 16, 40 Mbps (360p..2160p), 2 s segments.
  static BitrateLadder standard();

  std::size_t size() const noexcept { return levels_.size(); }
  const BitrateLevel& level(std::size_t l) const { return levels_.at(l); }
  double bitrate(std::size_t l) const { return levels_.at(l).mbps; }
  double quality(std::size_t l) const { return levels_.at(l).mbps; }
  double segment_duration() const noexcept { return segment_duration_; }
  std::size_t lowest() const noexcept { return 0; }
  std::size_t highest() const noexcept { return levels_.size() - 1; }

 private:
  std::vector<BitrateLevel> levels_;
  double segment_duration_;
};

class Manifest {
 public:
  // sizes is row-major [segment][level] in megabits.
  Manifest(BitrateLadder ladder, std::size_t num_segments, std::vector<double> sizes);

  // size(n, l) = bitrate(l) * segment_duration.
  static Manifest constant_bitrate(BitrateLadder ladder, std::size_t num_segments);
  // Per-segment sizes scaled by a seeded factor in [1 - jitter, 1 + jitter],
  // shared across levels of the same segment.
  static Manifest variable_bitrate(BitrateLadder ladder, std::size_t num_segments,
                                   double jitter, std::uint64_t seed);

  const BitrateLadder& ladder() const noexcept { return ladder_; }
  std::size_t num_segments() const noexcept { return num_segments_; }
  std::size_t num_levels() const noexcept { return ladder_.size(); }
  double segment_duration() const noexcept { return ladder_.segment_duration(); }
  double size(std::size_t n, std::size_t l) const;

 private:
  BitrateLadder ladder_;
  std::size_t num_segments_;
  std::vector<double> sizes_;
};

struct DecisionContext {
  std::size_t next_segment = 0;
  double buffer = 0.0;  // seconds, before the next download
  std::optional<std::size_t> last_level;
  std::vector<double> throughput_history;  // observed Mbps per segment
  std::size_t remaining_segments = 0;
};

struct Prediction {
  std::optional<double> mbps;
  std::size_t excluded = 0;  // non-positive samples skipped
};

// Harmonic mean of the last min(window, count) positive samples.
Prediction harmonic_mean_predict(std::span<const double> history, std::size_t window);

// Highest level whose bitrate does not exceed `mbps`; lowest otherwise.
std::size_t highest_level_at_most(const BitrateLadder& ladder, double mbps);

inline constexpr std::size_t kDefaultPredictorWindow = 5;
inline constexpr double kDefaultReservoir = 5.0;
inline constexpr double kDefaultCushion = 55.0;
inline constexpr std::size_t kDefaultMpcHorizon = 5;
inline constexpr double kDefaultRebufferWeight = 40.0;

std::size_t rb_decide(const DecisionContext& ctx, const Manifest& manifest,
                      std::size_t window = kDefaultPredictorWindow);

// Piecewise-linear rate map between reservoir and reservoir + cushion.
double bb_rate_map(double buffer, const BitrateLadder& ladder, double reservoir,
                   double cushion);
std::size_t bb_decide(const DecisionContext& ctx, const Manifest& manifest,
                      double reservoir = kDefaultReservoir,
                      double cushion = kDefaultCushion);

struct MpcParams {
  std::size_t horizon = kDefaultMpcHorizon;
  std::size_t window = kDefaultPredictorWindow;
  double rebuffer_weight = kDefaultRebufferWeight;
};

// Best plan over all L^h level sequences, h = min(horizon, remaining). Empty
// when there is no throughput prediction.
std::vector<std::size_t> mpc_plan(const DecisionContext& ctx, const Manifest& manifest,
                                  const MpcParams& params = {});
std::size_t mpc_decide(const DecisionContext& ctx, const Manifest& manifest,
                       const MpcParams& params = {});

struct QudashParams {
  double a = 1e3;  // quality
  double b = 1.0;  // smoothness
  double c = 1e6;  // one-hot
  double d = 1.0;  // buffer feasibility
  std::size_t horizon = 5;
  std::size_t predictor_window = kDefaultPredictorWindow;
  AnnealConfig anneal;

  void validate() const;
};

nlohmann::json to_json(const QudashParams& params);
QudashParams qudash_params_from_json(const nlohmann::json& j, QudashParams base = {});

// Layout of decision and slack variables in a built objective. Decision
// variable x[n][l] (n relative to the next segment) sits at n * levels + l;
// slack blocks follow in constraint order.
struct VariableMap {
  std::size_t segments = 0;
  std::size_t levels = 0;
  std::vector<SlackEncoding> slack_blocks;

  std::size_t decision(std::size_t n, std::size_t l) const { return n * levels + l; }
  std::size_t num_decision_vars() const noexcept { return segments * levels; }
};

struct QudashObjective {
  QuboProblem problem;
  VariableMap map;
  double c_pred = 0.0;
};

// Builds -a*quality + b*smoothness + c*one-hot + d*buffer over
// min(horizon, remaining) segments. Throws kInvalidArgument for c_pred <= 0
// and kInfeasibleBound when the first buffer bound is not positive.
QudashObjective build_qudash_objective(const DecisionContext& ctx, const Manifest& manifest,
                                       const QudashParams& params, double c_pred);

struct Extraction {
  std::size_t level = 0;
  bool violation = false;
  std::size_t bits_set = 0;
};

Extraction extract_selection(std::span<const std::uint8_t> assignment,
                             const VariableMap& map);

struct DecisionReport {
  std::string algorithm;
  std::size_t segment = 0;
  std::size_t level = 0;
  std::optional<double> c_pred;
  std::size_t qubo_vars = 0;
  std::optional<double> best_energy;
  bool one_hot_violation = false;
  bool bootstrap = false;
  bool fallback = false;
  std::string fallback_reason;
  double wall_ms = 0.0;

  // Wall time is excluded unless requested so logs stay reproducible.
  nlohmann::json to_json(bool include_timing = false) const;
};

struct Decision {
  std::size_t level = 0;
  DecisionReport report;
};

// Seed used for the anneal of one decision; a pure function of the base seed
// and the segment index.
std::uint64_t decision_seed(std::uint64_t base, std::size_t segment);

Decision qudash_decide(const DecisionContext& ctx, const Manifest& manifest,
                       const QudashParams& params);

// Common decision interface used by the simulator.
class AbrAlgorithm {
 public:
  virtual ~AbrAlgorithm() = default;
  virtual std::string name() const = 0;
  virtual Decision decide(const DecisionContext& ctx, const Manifest& manifest) = 0;
};

class RbAlgorithm final : public AbrAlgorithm {
 public:
  explicit RbAlgorithm(std::size_t window = kDefaultPredictorWindow) : window_(window) {}
  std::string name() const override { return "rb"; }
  Decision decide(const DecisionContext& ctx, const Manifest& manifest) override;

 private:
  std::size_t window_;
};

class BbAlgorithm final : public AbrAlgorithm {
 public:
  BbAlgorithm(double reservoir = kDefaultReservoir, double cushion = kDefaultCushion)
      : reservoir_(reservoir), cushion_(cushion) {}
  std::string name() const override { return "bb"; }
  Decision decide(const DecisionContext& ctx, const Manifest& manifest) override;

 private:
  double reservoir_;
  double cushion_;
};

class MpcAlgorithm final : public AbrAlgorithm {
 public:
  explicit MpcAlgorithm(MpcParams params = {}) : params_(params) {}
  std::string name() const override { return "mpc"; }
  Decision decide(const DecisionContext& ctx, const Manifest& manifest) override;

 private:
  MpcParams params_;
};

class QudashAlgorithm final : public AbrAlgorithm {
 public:
  explicit QudashAlgorithm(QudashParams params = {}) : params_(std::move(params)) {
    params_.validate();
  }
  std::string name() const override { return "qudash"; }
  Decision decide(const DecisionContext& ctx, const Manifest& manifest) override {
    return qudash_decide(ctx, manifest, params_);
  }
  const QudashParams& params() const noexcept { return params_; }

 private:
  QudashParams params_;
};

}  // namespace qudash
