#include <chrono>
#include <cmath>
#include <string>

#include "qudash/abr.hpp"
#include "qudash/error.hpp"

namespace qudash {

void QudashParams::validate() const {
  for (double v : {a, b, c, d}) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw Error(ErrorCode::kInvalidConfig, "QUBO coefficients must be finite and >= 0");
    }
  }
  if (!(c > 0.0)) throw Error(ErrorCode::kInvalidConfig, "one-hot coefficient c must be > 0");
  if (horizon < 1) throw Error(ErrorCode::kInvalidConfig, "horizon must be >= 1");
  if (predictor_window < 1) {
    throw Error(ErrorCode::kInvalidConfig, "predictor_window must be >= 1");
  }
  anneal.validate();
}

nlohmann::json to_json(const QudashParams& p) {
  return {{"a", p.a},
          {"b", p.b},
          {"c", p.c},
          {"d", p.d},
          {"horizon", p.horizon},
          {"predictor_window", p.predictor_window},
          {"anneal", to_json(p.anneal)}};
}

QudashParams qudash_params_from_json(const nlohmann::json& j, QudashParams base) {
  if (!j.is_object()) {
    throw Error(ErrorCode::kInvalidConfig, "qudash params must be an object");
  }
  try {
    if (j.contains("a")) base.a = j.at("a").get<double>();
    if (j.contains("b")) base.b = j.at("b").get<double>();
    if (j.contains("c")) base.c = j.at("c").get<double>();
    if (j.contains("d")) base.d = j.at("d").get<double>();
    if (j.contains("horizon")) base.horizon = j.at("horizon").get<std::size_t>();
    if (j.contains("predictor_window")) {
      base.predictor_window = j.at("predictor_window").get<std::size_t>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("qudash params: ") + e.what());
  }
  if (j.contains("anneal")) base.anneal = anneal_config_from_json(j.at("anneal"), base.anneal);
  base.validate();
  return base;
}

QudashObjective build_qudash_objective(const DecisionContext& ctx, const Manifest& manifest,
                                       const QudashParams& params, double c_pred) {
  if (!(c_pred > 0.0) || !std::isfinite(c_pred)) {
    throw Error(ErrorCode::kInvalidArgument,
                "predicted throughput must be positive, got " + std::to_string(c_pred));
  }
  if (!(ctx.buffer > 0.0)) {
    throw Error(ErrorCode::kInfeasibleBound,
                "infeasible first constraint: buffer bound " + std::to_string(ctx.buffer) +
                    " s is not positive");
  }
  const std::size_t horizon = std::min(params.horizon, ctx.remaining_segments);
  if (horizon == 0) {
    throw Error(ErrorCode::kInvalidArgument, "no segments left to decide");
  }
  const auto& ladder = manifest.ladder();
  const std::size_t levels = ladder.size();
  const double seg_dur = manifest.segment_duration();

  QudashObjective obj{QuboProblem(horizon * levels), {}, c_pred};
  obj.map.segments = horizon;
  obj.map.levels = levels;
  auto& qp = obj.problem;
  const auto& map = obj.map;

  if (params.a > 0.0) {
    for (std::size_t n = 0; n < horizon; ++n) {
      for (std::size_t l = 0; l < levels; ++l) {
        const auto v = map.decision(n, l);
        qp.add_term(v, v, -params.a * ladder.quality(l));
      }
    }
  }

  if (params.b > 0.0) {
    std::vector<WeightedVar> expr;
    for (std::size_t n = 0; n < horizon; ++n) {
      expr.clear();
      for (std::size_t l = 0; l < levels; ++l) {
        expr.push_back({map.decision(n, l), ladder.quality(l)});
      }
      double constant = 0.0;
      if (n == 0) {
        // Previous segment is already committed: it enters as a constant.
        if (!ctx.last_level) continue;
        constant = -ladder.quality(*ctx.last_level);
      } else {
        for (std::size_t l = 0; l < levels; ++l) {
          expr.push_back({map.decision(n - 1, l), -ladder.quality(l)});
        }
      }
      add_squared_linear(qp, expr, constant, params.b);
    }
  }

  {
    std::vector<WeightedVar> expr;
    for (std::size_t n = 0; n < horizon; ++n) {
      expr.clear();
      for (std::size_t l = 0; l < levels; ++l) expr.push_back({map.decision(n, l), 1.0});
      add_squared_linear(qp, expr, -1.0, params.c);
    }
  }

  if (params.d > 0.0) {
    // Cumulative download time of segments 0..n must stay below B1 + n * M.
    std::vector<WeightedVar> weights;
    for (std::size_t n = 0; n < horizon; ++n) {
      for (std::size_t l = 0; l < levels; ++l) {
        weights.push_back({map.decision(n, l), manifest.size(ctx.next_segment + n, l) / c_pred});
      }
      const double bound = ctx.buffer + static_cast<double>(n) * seg_dur;
      obj.map.slack_blocks.push_back(encode_less_than(qp, weights, bound, params.d));
    }
  }
  return obj;
}

Extraction extract_selection(std::span<const std::uint8_t> assignment,
                             const VariableMap& map) {
  if (assignment.size() < map.num_decision_vars() || map.levels == 0) {
    throw Error(ErrorCode::kLengthMismatch, "assignment shorter than decision block");
  }
  Extraction ex;
  std::optional<std::size_t> first_set;
  for (std::size_t l = 0; l < map.levels; ++l) {
    if (assignment[map.decision(0, l)]) {
      ++ex.bits_set;
      if (!first_set) first_set = l;
    }
  }
  ex.violation = ex.bits_set != 1;
  ex.level = first_set.value_or(0);
  return ex;
}

nlohmann::json DecisionReport::to_json(bool include_timing) const {
  nlohmann::json j = {{"algorithm", algorithm},
                      {"segment", segment},
                      {"level", level},
                      {"c_pred", c_pred ? nlohmann::json(*c_pred) : nlohmann::json(nullptr)},
                      {"qubo_vars", qubo_vars},
                      {"best_energy",
                       best_energy ? nlohmann::json(*best_energy) : nlohmann::json(nullptr)},
                      {"one_hot_violation", one_hot_violation},
                      {"bootstrap", bootstrap},
                      {"fallback", fallback}};
  if (fallback) j["fallback_reason"] = fallback_reason;
  if (include_timing) j["wall_ms"] = wall_ms;
  return j;
}

std::uint64_t decision_seed(std::uint64_t base, std::size_t segment) {
  return replica_seed(base ^ 0x5851f42d4c957f2dULL, segment);
}

Decision qudash_decide(const DecisionContext& ctx, const Manifest& manifest,
                       const QudashParams& params) {
  const auto start = std::chrono::steady_clock::now();
  Decision out;
  auto& report = out.report;
  report.algorithm = "qudash";
  report.segment = ctx.next_segment;

  auto finish = [&](std::size_t level) {
    out.level = level;
    report.level = level;
    report.wall_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - start)
                         .count();
    return out;
  };
  auto fall_back = [&](std::string reason) {
    report.fallback = true;
    report.fallback_reason = std::move(reason);
    return finish(rb_decide(ctx, manifest, params.predictor_window));
  };

  if (ctx.throughput_history.empty() && ctx.buffer <= 0.0) {
    report.bootstrap = true;
    return finish(manifest.ladder().lowest());
  }

  const auto pred = harmonic_mean_predict(ctx.throughput_history, params.predictor_window);
  report.c_pred = pred.mbps;
  if (!pred.mbps) return fall_back("no positive throughput sample");

  try {
    const auto obj = build_qudash_objective(ctx, manifest, params, *pred.mbps);
    AnnealConfig cfg = params.anneal;
    cfg.seed = decision_seed(params.anneal.seed, ctx.next_segment);
    const auto sol = anneal(obj.problem, cfg);
    const auto ex = extract_selection(sol.assignment, obj.map);
    report.qubo_vars = obj.problem.num_vars();
    report.best_energy = sol.energy;
    report.one_hot_violation = ex.violation;
    return finish(ex.level);
  } catch (const Error& e) {
    return fall_back(e.what());
  }
}

}  // namespace qudash
