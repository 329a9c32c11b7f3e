#include "qudash/annealer.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <thread>

#include "qudash/error.hpp"

namespace qudash {

namespace {

// exp(-x) < 2^-53 for x > kNegligibleExponent, so a 53-bit uniform u can only
// fall below it when u == 0.
constexpr double kNegligibleExponent = 37.5;

inline bool accept_unchecked(double delta_e, double temperature, double u) {
  if (delta_e <= 0.0) return true;
  const double x = delta_e / temperature;
  if (x > kNegligibleExponent) return u == 0.0 && std::exp(-x) > 0.0;
  return std::exp(-x) > u;
}

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string_view mode_name(TrialMode mode) {
  return mode == TrialMode::kSingleFlip ? "single-flip" : "parallel-trial";
}

}  // namespace

void AnnealConfig::validate() const {
  if (n_run < 1) throw Error(ErrorCode::kInvalidConfig, "n_run must be >= 1");
  if (n_ite < 1) throw Error(ErrorCode::kInvalidConfig, "n_ite must be >= 1");
  if (t_init && !(*t_init > 0.0 && std::isfinite(*t_init))) {
    throw Error(ErrorCode::kInvalidConfig, "t_init must be positive");
  }
  if (t_final && !(*t_final > 0.0 && std::isfinite(*t_final))) {
    throw Error(ErrorCode::kInvalidConfig, "t_final must be positive");
  }
  if (t_init && t_final && *t_final > *t_init) {
    throw Error(ErrorCode::kInvalidConfig, "t_final must not exceed t_init");
  }
  if (!(offset_step >= 0.0) || !std::isfinite(offset_step)) {
    throw Error(ErrorCode::kInvalidConfig, "offset_step must be >= 0");
  }
}

nlohmann::json to_json(const AnnealConfig& cfg) {
  nlohmann::json j = {{"n_run", cfg.n_run},
                      {"n_ite", cfg.n_ite},
                      {"seed", cfg.seed},
                      {"mode", mode_name(cfg.mode)},
                      {"offset_step", cfg.offset_step}};
  if (cfg.t_init) j["t_init"] = *cfg.t_init;
  if (cfg.t_final) j["t_final"] = *cfg.t_final;
  return j;
}

AnnealConfig anneal_config_from_json(const nlohmann::json& j, AnnealConfig base) {
  if (!j.is_object()) {
    throw Error(ErrorCode::kInvalidConfig, "anneal config must be an object");
  }
  try {
    if (j.contains("n_run")) base.n_run = j.at("n_run").get<std::size_t>();
    if (j.contains("n_ite")) base.n_ite = j.at("n_ite").get<std::size_t>();
    if (j.contains("t_init")) base.t_init = j.at("t_init").get<double>();
    if (j.contains("t_final")) base.t_final = j.at("t_final").get<double>();
    if (j.contains("seed")) base.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("offset_step")) base.offset_step = j.at("offset_step").get<double>();
    if (j.contains("threads")) base.threads = j.at("threads").get<unsigned>();
    if (j.contains("mode")) {
      const auto mode = j.at("mode").get<std::string>();
      if (mode == "single-flip") {
        base.mode = TrialMode::kSingleFlip;
      } else if (mode == "parallel-trial") {
        base.mode = TrialMode::kParallelTrial;
      } else {
        throw Error(ErrorCode::kInvalidConfig, "unknown anneal mode '" + mode + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("anneal config: ") + e.what());
  }
  base.validate();
  return base;
}

bool metropolis_accept(double delta_e, double temperature, double u) {
  if (!(temperature > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "temperature must be positive, got " + std::to_string(temperature));
  }
  return accept_unchecked(delta_e, temperature, u);
}

double schedule_temperature(double t_init, double t_final, std::size_t n_ite,
                            std::size_t step) {
  if (n_ite <= 1 || step == 0) return t_init;
  if (step >= n_ite - 1) return t_final;
  const double frac = static_cast<double>(step) / static_cast<double>(n_ite - 1);
  return t_init * std::pow(t_final / t_init, frac);
}

std::vector<double> geometric_schedule(double t_init, double t_final,
                                       std::size_t n_ite) {
  AnnealConfig probe;
  probe.n_ite = n_ite;
  probe.t_init = t_init;
  probe.t_final = t_final;
  probe.validate();
  std::vector<double> temps(n_ite);
  for (std::size_t s = 0; s < n_ite; ++s) {
    temps[s] = schedule_temperature(t_init, t_final, n_ite, s);
  }
  return temps;
}

double default_initial_temperature(const QuboProblem& problem) {
  std::vector<double> spread(problem.num_vars(), 0.0);
  for (const auto& [key, c] : problem.terms()) {
    spread[key.first] += std::abs(c);
    if (key.first != key.second) spread[key.second] += std::abs(c);
  }
  double t = 0.0;
  for (double s : spread) t = std::max(t, s);
  return t > 0.0 ? t : 1.0;
}

CompiledQubo::CompiledQubo(const QuboProblem& problem)
    : linear_(problem.num_vars(), 0.0), row_start_(problem.num_vars() + 1, 0) {
  const std::size_t n = problem.num_vars();
  std::vector<std::size_t> degree(n, 0);
  for (const auto& [key, c] : problem.terms()) {
    if (key.first == key.second) {
      linear_[key.first] += c;
    } else {
      ++degree[key.first];
      ++degree[key.second];
    }
  }
  for (std::size_t k = 0; k < n; ++k) row_start_[k + 1] = row_start_[k] + degree[k];
  edges_.resize(row_start_[n]);
  std::vector<std::size_t> fill(row_start_.begin(), row_start_.end() - 1);
  for (const auto& [key, c] : problem.terms()) {
    if (key.first == key.second) continue;
    edges_[fill[key.first]++] = {key.second, c};
    edges_[fill[key.second]++] = {key.first, c};
  }
}

double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::size_t uniform_index(Rng& rng, std::size_t n) {
  const std::uint64_t bound = n;
  const std::uint64_t limit =
      std::numeric_limits<std::uint64_t>::max() -
      std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return static_cast<std::size_t>(v % bound);
}

ReplicaState::ReplicaState(const CompiledQubo& q, Assignment x, double energy)
    : q_(&q), x_(std::move(x)), field_(q.num_vars()), energy_(energy) {
  for (std::size_t k = 0; k < x_.size(); ++k) {
    double f = q.linear(k);
    for (const auto& e : q.neighbours(k)) {
      if (x_[e.var]) f += e.coeff;
    }
    field_[k] = f;
  }
  accepted_.reserve(x_.size());
}

void ReplicaState::flip(std::size_t k) {
  energy_ += delta(k);
  const double sign = x_[k] ? -1.0 : 1.0;
  x_[k] ^= 1;
  for (const auto& e : q_->neighbours(k)) field_[e.var] += sign * e.coeff;
}

bool ReplicaState::step(double temperature, TrialMode mode, double offset_step,
                        Rng& rng) {
  const std::size_t n = x_.size();
  if (n == 0) return false;
  if (mode == TrialMode::kSingleFlip) {
    const std::size_t k = uniform_index(rng, n);
    if (accept_unchecked(delta(k), temperature, uniform01(rng))) {
      flip(k);
      return true;
    }
    return false;
  }

  accepted_.clear();
  for (std::size_t k = 0; k < n; ++k) {
    if (accept_unchecked(delta(k) - escape_offset_, temperature, uniform01(rng))) {
      accepted_.push_back(k);
    }
  }
  if (accepted_.empty()) {
    escape_offset_ += offset_step * temperature;
    return false;
  }
  flip(accepted_[uniform_index(rng, accepted_.size())]);
  escape_offset_ = 0.0;
  return true;
}

std::uint64_t replica_seed(std::uint64_t seed, std::size_t replica) {
  return splitmix64(splitmix64(seed) ^ (0xd1b54a32d192ed03ULL * (replica + 1)));
}

namespace {

struct ReplicaResult {
  Assignment best;
  double energy = 0.0;
};

ReplicaResult run_replica(const QuboProblem& problem, const CompiledQubo& q,
                          const AnnealConfig& cfg,
                          const std::vector<double>& temps, std::size_t replica) {
  Rng rng(replica_seed(cfg.seed, replica));
  Assignment x(problem.num_vars());
  for (auto& bit : x) bit = static_cast<std::uint8_t>(rng() >> 63);

  ReplicaState state(q, x, problem.energy(x));
  ReplicaResult result{x, state.energy()};
  for (double t : temps) {
    if (state.step(t, cfg.mode, cfg.offset_step, rng) &&
        state.energy() < result.energy) {
      result.best = state.assignment();
      result.energy = state.energy();
    }
  }
  result.energy = problem.energy(result.best);
  return result;
}

}  // namespace

Solution anneal(const QuboProblem& problem, const AnnealConfig& cfg) {
  cfg.validate();
  const double t_init = cfg.t_init.value_or(default_initial_temperature(problem));
  const double t_final = cfg.t_final.value_or(1e-3 * t_init);
  const auto temps = geometric_schedule(t_init, t_final, cfg.n_ite);
  const CompiledQubo q(problem);

  std::vector<ReplicaResult> results(cfg.n_run);
  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(std::max(1u, cfg.threads), cfg.n_run));
  if (workers == 1) {
    for (std::size_t r = 0; r < cfg.n_run; ++r) {
      results[r] = run_replica(problem, q, cfg, temps, r);
    }
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t r = w; r < cfg.n_run; r += workers) {
          results[r] = run_replica(problem, q, cfg, temps, r);
        }
      });
    }
  }

  std::size_t winner = 0;
  for (std::size_t r = 1; r < results.size(); ++r) {
    if (results[r].energy < results[winner].energy) winner = r;
  }
  Solution sol;
  sol.assignment = std::move(results[winner].best);
  sol.energy = results[winner].energy;
  sol.replica_id = winner;
  sol.iterations_used = cfg.n_ite;
  return sol;
}

Solution brute_force_solve(const QuboProblem& problem) {
  const std::size_t n = problem.num_vars();
  if (n > kBruteForceMaxVars) {
    throw Error(ErrorCode::kTooManyVariables,
                "brute force limited to " + std::to_string(kBruteForceMaxVars) +
                    " variables, problem has " + std::to_string(n));
  }
  double scale = 1.0 + std::abs(problem.offset());
  for (const auto& [key, c] : problem.terms()) scale += std::abs(c);
  const double tol = 1e-9 * scale;

  const CompiledQubo q(problem);
  ReplicaState state(q, Assignment(n, 0), problem.offset());
  Solution best;
  best.assignment = state.assignment();
  best.energy = problem.offset();

  const std::uint64_t total = std::uint64_t{1} << n;
  for (std::uint64_t v = 1; v < total; ++v) {
    // Increment the little-endian binary counter held in the assignment.
    std::size_t k = 0;
    while (state.assignment()[k]) state.flip(k++);
    state.flip(k);
    if (state.energy() <= best.energy + tol) {
      const double fresh = problem.energy(state.assignment());
      if (fresh < best.energy) {
        best.energy = fresh;
        best.assignment = state.assignment();
      }
    }
  }
  best.iterations_used = static_cast<std::size_t>(total);
  return best;
}

}  // namespace qudash
