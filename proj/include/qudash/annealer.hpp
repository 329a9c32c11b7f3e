#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include <json.hpp>

#include "qudash/qubo.hpp"

namespace qudash {

enum class TrialMode { kSingleFlip, kParallelTrial };

struct AnnealConfig {
  std::size_t n_run = 128;      // independent replicas
  std::size_t n_ite = 10000;    // steps per replica
  // Unset temperatures are derived from the problem: t_init from the largest
  // possible single-flip delta, t_final = 1e-3 * t_init.
  std::optional<double> t_init;
  std::optional<double> t_final;
  std::uint64_t seed = 0;
  TrialMode mode = TrialMode::kParallelTrial;
  // Escape offset added per all-rejected parallel trial, in units of the
  // current temperature.
  double offset_step = 1.0;
  // Worker threads for replicas. Does not affect the result.
  unsigned threads = 1;

  void validate() const;
};

nlohmann::json to_json(const AnnealConfig& cfg);
AnnealConfig anneal_config_from_json(const nlohmann::json& j,
                                     AnnealConfig base = {});

struct Solution {
  Assignment assignment;
  double energy = 0.0;
  std::size_t replica_id = 0;
  std::size_t iterations_used = 0;
};

// min(1, exp(-delta_e / temperature)) > u
bool metropolis_accept(double delta_e, double temperature, double u);

// T(s) = t_init * (t_final / t_init)^(s / (n_ite - 1))
double schedule_temperature(double t_init, double t_final, std::size_t n_ite,
                            std::size_t step);
std::vector<double> geometric_schedule(double t_init, double t_final,
                                       std::size_t n_ite);

// max_k |coeffs[k,k]| + sum_{i != k} |coeffs[i,k]|; 1 for an all-zero problem.
double default_initial_temperature(const QuboProblem& problem);

// Adjacency-list view of a QuboProblem for fast local-field updates.
class CompiledQubo {
 public:
  explicit CompiledQubo(const QuboProblem& problem);

  std::size_t num_vars() const noexcept { return linear_.size(); }
  double linear(std::size_t k) const { return linear_[k]; }

  struct Edge {
    std::size_t var;
    double coeff;
  };
  std::span<const Edge> neighbours(std::size_t k) const {
    return {edges_.data() + row_start_[k], row_start_[k + 1] - row_start_[k]};
  }

 private:
  std::vector<double> linear_;
  std::vector<std::size_t> row_start_;
  std::vector<Edge> edges_;
};

using Rng = std::mt19937_64;

// Uniform double in [0, 1) with 53 random bits.
double uniform01(Rng& rng);
// Uniform integer in [0, n).
std::size_t uniform_index(Rng& rng, std::size_t n);

// Per-replica Markov chain state: assignment plus cached local fields so that
// delta(k) = (1 - 2 x_k) * field(k).
class ReplicaState {
 public:
  ReplicaState(const CompiledQubo& q, Assignment x, double energy);

  const Assignment& assignment() const noexcept { return x_; }
  double energy() const noexcept { return energy_; }
  double escape_offset() const noexcept { return escape_offset_; }
  double delta(std::size_t k) const {
    return x_[k] ? -field_[k] : field_[k];
  }

  void flip(std::size_t k);

  // One single-flip or parallel-trial move at `temperature`. Returns true if
  // the state changed.
  bool step(double temperature, TrialMode mode, double offset_step, Rng& rng);

 private:
  const CompiledQubo* q_;
  Assignment x_;
  std::vector<double> field_;
  double energy_;
  double escape_offset_ = 0.0;
  std::vector<std::size_t> accepted_;
};

// Replica seeds are a pure function of (seed, replica index).
std::uint64_t replica_seed(std::uint64_t seed, std::size_t replica);

Solution anneal(const QuboProblem& problem, const AnnealConfig& cfg);

// Exhaustive minimum; ties go to the smallest integer sum_i x_i 2^i.
Solution brute_force_solve(const QuboProblem& problem);

inline constexpr std::size_t kBruteForceMaxVars = 24;

}  // namespace qudash
