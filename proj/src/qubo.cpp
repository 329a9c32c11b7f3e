#include "qudash/qubo.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qudash/error.hpp"

namespace qudash {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIndexOutOfRange: return "index out of range";
    case ErrorCode::kLengthMismatch: return "length mismatch";
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kInfeasibleBound: return "infeasible bound";
    case ErrorCode::kTooManyVariables: return "too many variables";
    case ErrorCode::kInvalidConfig: return "invalid config";
    case ErrorCode::kTraceExhausted: return "trace exhausted";
    case ErrorCode::kParse: return "parse error";
    case ErrorCode::kIo: return "i/o error";
  }
  return "unknown";
}

std::size_t QuboProblem::add_variables(std::size_t count) {
  const std::size_t first = num_vars_;
  num_vars_ += count;
  return first;
}

void QuboProblem::check_index(std::size_t i) const {
  if (i >= num_vars_) {
    throw Error(ErrorCode::kIndexOutOfRange,
                "variable index " + std::to_string(i) + " out of range for " +
                    std::to_string(num_vars_) + " variables");
  }
}

void QuboProblem::check_assignment(std::span<const std::uint8_t> x) const {
  if (x.size() != num_vars_) {
    throw Error(ErrorCode::kLengthMismatch,
                "assignment has " + std::to_string(x.size()) +
                    " entries, problem has " + std::to_string(num_vars_));
  }
}

void QuboProblem::add_term(std::size_t i, std::size_t j, double coeff) {
  check_index(i);
  check_index(j);
  if (!std::isfinite(coeff)) {
    throw Error(ErrorCode::kInvalidArgument, "non-finite coefficient");
  }
  coeffs_[{std::min(i, j), std::max(i, j)}] += coeff;
}

void QuboProblem::add_offset(double value) {
  if (!std::isfinite(value)) {
    throw Error(ErrorCode::kInvalidArgument, "non-finite offset");
  }
  offset_ += value;
}

double QuboProblem::coeff(std::size_t i, std::size_t j) const {
  auto it = coeffs_.find({std::min(i, j), std::max(i, j)});
  return it == coeffs_.end() ? 0.0 : it->second;
}

double QuboProblem::energy(std::span<const std::uint8_t> x) const {
  check_assignment(x);
  double e = offset_;
  for (const auto& [key, c] : coeffs_) {
    if (x[key.first] && x[key.second]) e += c;
  }
  return e;
}

double QuboProblem::delta_energy(std::span<const std::uint8_t> x,
                                 std::size_t k) const {
  check_assignment(x);
  check_index(k);
  double field = 0.0;
  for (const auto& [key, c] : coeffs_) {
    if (key.first == k && key.second == k) {
      field += c;
    } else if (key.first == k) {
      if (x[key.second]) field += c;
    } else if (key.second == k) {
      if (x[key.first]) field += c;
    }
  }
  return x[k] ? -field : field;
}

nlohmann::json QuboProblem::to_json() const {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& [key, c] : coeffs_) {
    terms.push_back({key.first, key.second, c});
  }
  return {{"num_vars", num_vars_}, {"offset", offset_}, {"terms", terms}};
}

double IsingModel::energy(std::span<const std::int8_t> spins) const {
  if (spins.size() != num_spins) {
    throw Error(ErrorCode::kLengthMismatch, "spin vector length mismatch");
  }
  double e = offset;
  for (const auto& [key, j] : couplings) {
    e -= j * spins[key.first] * spins[key.second];
  }
  for (std::size_t i = 0; i < num_spins; ++i) e -= fields[i] * spins[i];
  return e;
}

IsingModel qubo_to_ising(const QuboProblem& problem) {
  IsingModel model;
  model.num_spins = problem.num_vars();
  model.fields.assign(model.num_spins, 0.0);
  model.offset = problem.offset();
  // x = (s + 1) / 2
  for (const auto& [key, c] : problem.terms()) {
    const auto [i, j] = key;
    if (i == j) {
      model.fields[i] -= c / 2.0;
      model.offset += c / 2.0;
    } else {
      model.couplings[key] -= c / 4.0;
      model.fields[i] -= c / 4.0;
      model.fields[j] -= c / 4.0;
      model.offset += c / 4.0;
    }
  }
  return model;
}

std::vector<std::int8_t> to_spins(std::span<const std::uint8_t> x) {
  std::vector<std::int8_t> s(x.size());
  std::transform(x.begin(), x.end(), s.begin(),
                 [](std::uint8_t b) { return static_cast<std::int8_t>(b ? 1 : -1); });
  return s;
}

double WeightForm::energy(std::span<const std::uint8_t> x) const {
  if (x.size() != num_vars) {
    throw Error(ErrorCode::kLengthMismatch, "assignment length mismatch");
  }
  double e = offset;
  for (std::size_t i = 0; i < num_vars; ++i) {
    if (!x[i]) continue;
    e -= bias[i];
    for (std::size_t j = 0; j < num_vars; ++j) {
      if (x[j]) e -= weight(i, j);
    }
  }
  return e;
}

WeightForm to_weight_form(const QuboProblem& problem) {
  WeightForm form;
  const std::size_t n = problem.num_vars();
  form.num_vars = n;
  form.weights.assign(n * n, 0.0);
  form.bias.assign(n, 0.0);
  form.offset = problem.offset();
  for (const auto& [key, c] : problem.terms()) {
    const auto [i, j] = key;
    if (i == j) {
      form.bias[i] = -c;
    } else {
      form.weights[i * n + j] = -c / 2.0;
      form.weights[j * n + i] = -c / 2.0;
    }
  }
  return form;
}

QuboProblem from_weight_form(const WeightForm& form) {
  QuboProblem problem(form.num_vars);
  problem.add_offset(form.offset);
  const std::size_t n = form.num_vars;
  for (std::size_t i = 0; i < n; ++i) {
    const double linear = -form.bias[i] - form.weight(i, i);
    if (linear != 0.0) problem.add_term(i, i, linear);
    for (std::size_t j = i + 1; j < n; ++j) {
      const double c = -(form.weight(i, j) + form.weight(j, i));
      if (c != 0.0) problem.add_term(i, j, c);
    }
  }
  return problem;
}

void add_squared_linear(QuboProblem& problem, std::span<const WeightedVar> terms,
                        double constant, double scale) {
  std::map<std::size_t, double> merged;
  for (const auto& t : terms) merged[t.var] += t.weight;

  problem.add_offset(scale * constant * constant);
  for (auto it = merged.begin(); it != merged.end(); ++it) {
    const auto [u, wu] = *it;
    problem.add_term(u, u, scale * (wu * wu + 2.0 * constant * wu));
    for (auto jt = std::next(it); jt != merged.end(); ++jt) {
      problem.add_term(u, jt->first, scale * 2.0 * wu * jt->second);
    }
  }
}

std::size_t slack_bits_for_bound(double bound) {
  if (!(bound > 0.0) || !std::isfinite(bound)) {
    throw Error(ErrorCode::kInfeasibleBound,
                "slack bound must be positive and finite, got " +
                    std::to_string(bound));
  }
  std::size_t k = 1;
  while (std::ldexp(1.0, static_cast<int>(k)) <= bound) ++k;
  return k;
}

double SlackEncoding::penalty_value(std::span<const std::uint8_t> x) const {
  double r = slack_offset;
  for (std::size_t k = 0; k < num_slack; ++k) {
    if (x[first_slack + k]) r += std::ldexp(1.0, static_cast<int>(k));
  }
  for (const auto& w : weights) {
    if (x[w.var]) r -= w.weight;
  }
  return penalty * r * r;
}

SlackEncoding encode_less_than(QuboProblem& problem,
                               std::span<const WeightedVar> weights,
                               double bound, double penalty) {
  if (!(penalty > 0.0) || !std::isfinite(penalty)) {
    throw Error(ErrorCode::kInvalidArgument, "slack penalty must be positive");
  }
  for (const auto& w : weights) {
    if (!(w.weight >= 0.0) || !std::isfinite(w.weight)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "constraint weight for variable " + std::to_string(w.var) +
                      " must be finite and non-negative");
    }
  }
  SlackEncoding enc;
  enc.num_slack = slack_bits_for_bound(bound);
  enc.bound = bound;
  enc.penalty = penalty;
  enc.weights.assign(weights.begin(), weights.end());
  enc.slack_offset =
      -(std::ldexp(1.0, static_cast<int>(enc.num_slack)) - 1.0) + bound;
  enc.first_slack = problem.add_variables(enc.num_slack);

  std::vector<WeightedVar> expr;
  expr.reserve(enc.num_slack + weights.size());
  for (std::size_t k = 0; k < enc.num_slack; ++k) {
    expr.push_back({enc.first_slack + k, std::ldexp(1.0, static_cast<int>(k))});
  }
  for (const auto& w : weights) expr.push_back({w.var, -w.weight});
  add_squared_linear(problem, expr, enc.slack_offset, penalty);
  return enc;
}

}  // namespace qudash
