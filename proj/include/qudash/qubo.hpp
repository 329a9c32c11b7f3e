#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include <json.hpp>

namespace qudash {

// Binary assignment; every entry is 0 or 1.
using Assignment = std::vector<std::uint8_t>;

// Quadratic unconstrained binary optimisation problem in canonical
// upper-triangular form:
//
//   f(x) = offset + sum_{i <= j} coeffs[i, j] * x_i * x_j
//
// Diagonal entries act as linear terms since x * x == x. Minimisation is the
// convention everywhere. The hardware-style energy
//
//   E(x) = -sum_i sum_j W_ij x_i x_j - sum_i b_i x_i
//
// maps onto this form through W_ij = W_ji = -coeffs[i, j] / 2 (i != j),
// W_ii = 0 and b_i = -coeffs[i, i]; see to_weight_form().
class QuboProblem {
 public:
  using Key = std::pair<std::size_t, std::size_t>;

  explicit QuboProblem(std::size_t num_vars = 0) : num_vars_(num_vars) {}

  std::size_t num_vars() const noexcept { return num_vars_; }

  // Appends `count` fresh variables and returns the index of the first one.
  std::size_t add_variables(std::size_t count);

  // Accumulates `coeff` into (min(i, j), max(i, j)).
  void add_term(std::size_t i, std::size_t j, double coeff);
  void add_offset(double value);

  double offset() const noexcept { return offset_; }
  double coeff(std::size_t i, std::size_t j) const;
  const std::map<Key, double>& terms() const noexcept { return coeffs_; }

  double energy(std::span<const std::uint8_t> x) const;

  // energy(flip(x, k)) - energy(x), evaluated in closed form.
  double delta_energy(std::span<const std::uint8_t> x, std::size_t k) const;

  // {num_vars, offset, terms: [[i, j, coeff], ...]} with keys sorted.
  nlohmann::json to_json() const;

 private:
  void check_index(std::size_t i) const;
  void check_assignment(std::span<const std::uint8_t> x) const;

  std::size_t num_vars_ = 0;
  double offset_ = 0.0;
  std::map<Key, double> coeffs_;
};

// Spin-glass form H(s) = offset - sum_{i<j} J_ij s_i s_j - sum_i h_i s_i,
// s_i in {-1, +1}.
struct IsingModel {
  std::size_t num_spins = 0;
  std::map<QuboProblem::Key, double> couplings;
  std::vector<double> fields;
  double offset = 0.0;

  double energy(std::span<const std::int8_t> spins) const;
};

IsingModel qubo_to_ising(const QuboProblem& problem);

// Spin image of a binary assignment, s = 2x - 1.
std::vector<std::int8_t> to_spins(std::span<const std::uint8_t> x);

// Dense weight/bias form used by Ising-machine style solvers.
struct WeightForm {
  std::size_t num_vars = 0;
  std::vector<double> weights;  // row-major num_vars x num_vars, symmetric
  std::vector<double> bias;
  double offset = 0.0;

  double weight(std::size_t i, std::size_t j) const {
    return weights[i * num_vars + j];
  }
  double energy(std::span<const std::uint8_t> x) const;
};

WeightForm to_weight_form(const QuboProblem& problem);
QuboProblem from_weight_form(const WeightForm& form);

struct WeightedVar {
  std::size_t var = 0;
  double weight = 0.0;
};

// Adds scale * (sum_v weight_v * x_v + constant)^2, expanded with u*u -> u and
// 2*u*v cross terms. Repeated variables in `terms` are merged first.
void add_squared_linear(QuboProblem& problem, std::span<const WeightedVar> terms,
                        double constant, double scale);

// Binary slack block for one constraint sum_v w_v x_v < bound.
struct SlackEncoding {
  std::size_t num_slack = 0;   // K
  std::size_t first_slack = 0; // index of y_0 in the problem
  double slack_offset = 0.0;   // -(2^K - 1) + bound
  std::vector<WeightedVar> weights;
  double bound = 0.0;
  double penalty = 0.0;

  // penalty * (sum_k 2^k y_k + slack_offset - sum_v w_v x_v)^2 for x.
  double penalty_value(std::span<const std::uint8_t> x) const;
};

// Smallest K >= 1 with 2^K > bound.
std::size_t slack_bits_for_bound(double bound);

// Appends K fresh slack variables to `problem` and adds the squared
// penalty term for sum_v w_v x_v < bound. Throws kInfeasibleBound when
// bound <= 0.
SlackEncoding encode_less_than(QuboProblem& problem,
                               std::span<const WeightedVar> weights,
                               double bound, double penalty);

}  // namespace qudash
