#include <cmath>
#include <random>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "qudash/annealer.hpp"
#include "qudash/error.hpp"

using namespace qudash;

namespace {

QuboProblem two_var() {
  QuboProblem p(2);
  p.add_term(0, 0, -1.0);
  p.add_term(1, 1, -1.0);
  p.add_term(0, 1, 3.0);
  return p;
}

QuboProblem single(double c) {
  QuboProblem p(1);
  p.add_term(0, 0, c);
  return p;
}

}  // namespace

TEST(Metropolis, Examples) {
  for (double t : {1e-6, 0.3, 1.0, 100.0}) {
    for (double u : {0.0, 0.5, 0.999999}) EXPECT_TRUE(metropolis_accept(-1.0, t, u));
  }
  EXPECT_TRUE(metropolis_accept(0.0, 1.0, 0.999));
  const double t = 2.0;
  const double d = t * std::log(2.0);
  EXPECT_TRUE(metropolis_accept(d, t, 0.49));
  EXPECT_FALSE(metropolis_accept(d, t, 0.51));
  EXPECT_THROW(metropolis_accept(1.0, 0.0, 0.5), Error);
  EXPECT_THROW(metropolis_accept(1.0, -1.0, 0.5), Error);
}

TEST(Metropolis, LargeUphillOnlyAtZeroUniform) {
  EXPECT_FALSE(metropolis_accept(1000.0, 1.0, 1e-300));
  EXPECT_TRUE(metropolis_accept(100.0, 1.0, 0.0));
  EXPECT_FALSE(metropolis_accept(1000.0, 1.0, 0.0));
  EXPECT_TRUE(metropolis_accept(30.0, 1.0, 1e-14));
  EXPECT_FALSE(metropolis_accept(30.0, 1.0, 1e-13));
}

TEST(Schedule, Examples) {
  const auto flat = geometric_schedule(10.0, 10.0, 7);
  ASSERT_EQ(flat.size(), 7u);
  for (double t : flat) EXPECT_EQ(t, 10.0);

  const auto g = geometric_schedule(8.0, 1.0, 4);
  ASSERT_EQ(g.size(), 4u);
  EXPECT_DOUBLE_EQ(g[0], 8.0);
  EXPECT_DOUBLE_EQ(g[1], 4.0);
  EXPECT_DOUBLE_EQ(g[2], 2.0);
  EXPECT_DOUBLE_EQ(g[3], 1.0);

  const auto one = geometric_schedule(5.0, 0.1, 1);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0], 5.0);
}

TEST(Schedule, MonotoneAndEndpoints) {
  const auto s = geometric_schedule(37.0, 0.037, 1000);
  EXPECT_EQ(s.front(), 37.0);
  EXPECT_DOUBLE_EQ(s.back(), 0.037);
  for (std::size_t i = 1; i < s.size(); ++i) EXPECT_LE(s[i], s[i - 1]);
}

TEST(Schedule, DefaultInitialTemperature) {
  EXPECT_EQ(default_initial_temperature(two_var()), 4.0);
  EXPECT_EQ(default_initial_temperature(QuboProblem(3)), 1.0);
  QuboProblem p(3);
  p.add_term(0, 0, -2.0);
  p.add_term(0, 1, 1.0);
  p.add_term(1, 2, -5.0);
  p.add_term(2, 2, 0.5);
  EXPECT_EQ(default_initial_temperature(p), 6.0);
}

TEST(Config, Validation) {
  AnnealConfig c;
  EXPECT_NO_THROW(c.validate());
  c.n_run = 0;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.n_ite = 0;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.t_init = 1.0;
  c.t_final = 2.0;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.t_init = -1.0;
  EXPECT_THROW(c.validate(), Error);
}

TEST(Config, JsonRoundTrip) {
  AnnealConfig c;
  c.n_run = 32;
  c.n_ite = 500;
  c.t_init = 3.5;
  c.seed = 99;
  c.mode = TrialMode::kSingleFlip;
  const auto back = anneal_config_from_json(to_json(c));
  EXPECT_EQ(back.n_run, 32u);
  EXPECT_EQ(back.n_ite, 500u);
  EXPECT_EQ(back.t_init, 3.5);
  EXPECT_FALSE(back.t_final.has_value());
  EXPECT_EQ(back.seed, 99u);
  EXPECT_EQ(back.mode, TrialMode::kSingleFlip);
  EXPECT_THROW(anneal_config_from_json(nlohmann::json{{"mode", "sideways"}}), Error);
}

TEST(ReplicaStep, DownhillSingleVariable) {
  const auto p = single(-5.0);
  const CompiledQubo q(p);
  for (auto mode : {TrialMode::kSingleFlip, TrialMode::kParallelTrial}) {
    for (double t : {1e-3, 1.0, 1e3}) {
      ReplicaState s(q, Assignment{0}, 0.0);
      Rng rng(1);
      EXPECT_TRUE(s.step(t, mode, 1.0, rng));
      EXPECT_EQ(s.assignment(), (Assignment{1}));
      EXPECT_EQ(s.energy(), -5.0);
    }
  }
}

TEST(ReplicaStep, StaysAtMinimumWhenCold) {
  QuboProblem p(3);
  p.add_term(0, 0, -3.0);
  p.add_term(1, 1, 2.0);
  p.add_term(2, 2, -1.0);
  p.add_term(0, 2, -1.0);
  const CompiledQubo q(p);
  ReplicaState s(q, Assignment{1, 0, 1}, p.energy(Assignment{1, 0, 1}));
  Rng rng(2);
  for (int i = 0; i < 10000; ++i) s.step(1e-6, TrialMode::kSingleFlip, 1.0, rng);
  EXPECT_EQ(s.assignment(), (Assignment{1, 0, 1}));
}

TEST(ReplicaStep, ParallelTrialFlipsExactlyOne) {
  const auto p = two_var();
  const CompiledQubo q(p);
  std::set<Assignment> seen;
  for (std::uint64_t seed = 0; seed < 64; ++seed) {
    ReplicaState s(q, Assignment{1, 1}, 1.0);
    EXPECT_EQ(s.delta(0), -2.0);
    EXPECT_EQ(s.delta(1), -2.0);
    Rng rng(seed);
    EXPECT_TRUE(s.step(1e-3, TrialMode::kParallelTrial, 1.0, rng));
    const auto& x = s.assignment();
    EXPECT_EQ(x[0] + x[1], 1);
    EXPECT_EQ(s.energy(), -1.0);
    seen.insert(x);
  }
  EXPECT_EQ(seen.size(), 2u);
}

TEST(ReplicaStep, EscapeOffsetGrowsAndResets) {
  // From [1, 0] every flip is uphill by at least 1.
  const auto p = two_var();
  const CompiledQubo q(p);
  ReplicaState s(q, Assignment{1, 0}, -1.0);
  Rng rng(3);
  const double t = 0.05;
  double last = 0.0;
  bool moved = false;
  for (int i = 0; i < 200 && !moved; ++i) {
    moved = s.step(t, TrialMode::kParallelTrial, 1.0, rng);
    if (!moved) {
      EXPECT_NEAR(s.escape_offset(), last + t, 1e-12);
      last = s.escape_offset();
    }
  }
  EXPECT_TRUE(moved);
  EXPECT_EQ(s.escape_offset(), 0.0);
}

TEST(ReplicaStep, CachedFieldsTrackEnergy) {
  std::mt19937_64 gen(4);
  const auto p = oracle::random_uniform_problem(15, gen);
  const CompiledQubo q(p);
  Assignment x(15, 0);
  ReplicaState s(q, x, p.energy(x));
  Rng rng(5);
  for (int i = 0; i < 2000; ++i) {
    s.step(2.0, i % 2 ? TrialMode::kSingleFlip : TrialMode::kParallelTrial, 1.0, rng);
    if (i % 100 == 0) {
      ASSERT_NEAR(s.energy(), p.energy(s.assignment()), 1e-9);
      for (std::size_t k = 0; k < 15; ++k) {
        ASSERT_NEAR(s.delta(k), p.delta_energy(s.assignment(), k), 1e-9);
      }
    }
  }
}

TEST(Anneal, Examples) {
  AnnealConfig cfg;
  cfg.n_run = 4;
  cfg.n_ite = 2;
  const auto a = anneal(single(-5.0), cfg);
  EXPECT_EQ(a.assignment, (Assignment{1}));
  EXPECT_EQ(a.energy, -5.0);

  cfg.n_run = 8;
  cfg.n_ite = 1000;
  const auto b = anneal(two_var(), cfg);
  EXPECT_EQ(b.energy, -1.0);

  const auto c = anneal(QuboProblem(0), cfg);
  EXPECT_EQ(c.energy, 0.0);
  EXPECT_TRUE(c.assignment.empty());
}

TEST(Anneal, SingleFlipModeSolves) {
  AnnealConfig cfg;
  cfg.n_run = 8;
  cfg.n_ite = 2000;
  cfg.mode = TrialMode::kSingleFlip;
  EXPECT_EQ(anneal(two_var(), cfg).energy, -1.0);
}

TEST(Anneal, DeterministicAcrossThreadCounts) {
  std::mt19937_64 gen(6);
  const auto p = oracle::random_uniform_problem(18, gen);
  AnnealConfig cfg;
  cfg.n_run = 12;
  cfg.n_ite = 3000;
  cfg.seed = 1234;
  cfg.threads = 1;
  const auto ref = anneal(p, cfg);
  for (unsigned t : {2u, 3u, 8u}) {
    cfg.threads = t;
    const auto s = anneal(p, cfg);
    EXPECT_EQ(s.assignment, ref.assignment);
    EXPECT_EQ(s.energy, ref.energy);
    EXPECT_EQ(s.replica_id, ref.replica_id);
  }
  cfg.threads = 1;
  const auto again = anneal(p, cfg);
  EXPECT_EQ(again.assignment, ref.assignment);
}

TEST(Anneal, ReturnedEnergyIsFresh) {
  std::mt19937_64 gen(7);
  for (int rep = 0; rep < 10; ++rep) {
    const auto p = oracle::random_uniform_problem(12, gen);
    AnnealConfig cfg;
    cfg.n_run = 4;
    cfg.n_ite = 300;
    cfg.seed = rep;
    const auto s = anneal(p, cfg);
    EXPECT_EQ(s.energy, p.energy(s.assignment));
  }
}

TEST(Anneal, ReplicaSeedsDiffer) {
  std::set<std::uint64_t> seeds;
  for (std::size_t r = 0; r < 128; ++r) seeds.insert(replica_seed(0, r));
  EXPECT_EQ(seeds.size(), 128u);
  EXPECT_NE(replica_seed(1, 0), replica_seed(0, 1));
}

TEST(BruteForce, Examples) {
  const auto a = brute_force_solve(two_var());
  EXPECT_EQ(a.energy, -1.0);
  EXPECT_EQ(a.assignment, (Assignment{1, 0}));
  EXPECT_EQ(brute_force_solve(QuboProblem(0)).energy, 0.0);
  const auto c = brute_force_solve(single(3.0));
  EXPECT_EQ(c.assignment, (Assignment{0}));
  EXPECT_EQ(c.energy, 0.0);
  EXPECT_THROW(brute_force_solve(QuboProblem(25)), Error);
}

TEST(BruteForce, MatchesEnumeration) {
  std::mt19937_64 gen(8);
  for (std::size_t n = 1; n <= 14; ++n) {
    const auto p = oracle::random_uniform_problem(n, gen);
    const auto s = brute_force_solve(p);
    EXPECT_DOUBLE_EQ(s.energy, oracle::enumerate_min(p));
    EXPECT_EQ(s.energy, p.energy(s.assignment));
  }
}

TEST(Anneal, OracleEquivalenceSmall) {
  std::mt19937_64 gen(2024);
  std::uniform_int_distribution<std::size_t> nv(8, 16);
  int matched = 0;
  const int total = 20;
  for (int i = 0; i < total; ++i) {
    const auto p = oracle::random_uniform_problem(nv(gen), gen);
    AnnealConfig cfg;
    cfg.n_run = 8;
    cfg.n_ite = 20000;
    cfg.seed = i;
    const double exact = brute_force_solve(p).energy;
    if (anneal(p, cfg).energy <= exact + 1e-9 * std::max(1.0, std::abs(exact))) ++matched;
  }
  EXPECT_GE(matched, 19);
}

TEST(Anneal, BudgetMonotonicity) {
  std::mt19937_64 gen(77);
  const auto p = oracle::random_uniform_problem(20, gen);
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t n_ite : {100u, 1000u, 10000u, 100000u}) {
    std::vector<double> best;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      AnnealConfig cfg;
      cfg.n_run = 1;
      cfg.n_ite = n_ite;
      cfg.seed = seed;
      best.push_back(anneal(p, cfg).energy);
    }
    const double med = oracle::median(best);
    EXPECT_LE(med, prev) << "n_ite=" << n_ite;
    prev = med;
  }
}
