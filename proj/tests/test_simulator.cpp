#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cmath>
#include <cstring>

#include "asmsleep/simulator.hpp"
#include "oracles.hpp"

using namespace asmsleep;
using namespace std::chrono_literals;

namespace {

ValidConfig nsa_config() { return validate(default_nsa_config()); }

struct Fixture {
  ValidConfig config = nsa_config();
  CostNormalization norm = make_normalization(config);

  Policy optimal(const CostWeights& w) const {
    const StateSpace space = build_state_space(config, w);
    return extract_policy(space, value_iteration(space, w, norm), w, norm);
  }
  Policy constant(LevelId level) const {
    const CostWeights w = CostWeights::make(0.7, 0.3);
    return constant_policy(build_state_space(config, w), level, w, norm);
  }
};

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

bool same_bits(const Estimate& a, const Estimate& b) {
  return same_bits(a.value, b.value) && same_bits(a.std_error, b.std_error);
}

bool same_bits(const SimMetrics& a, const SimMetrics& b) {
  bool eq = a.n_periods == b.n_periods && same_bits(a.energy_reduction, b.energy_reduction) &&
            same_bits(a.mean_delay_s, b.mean_delay_s) &&
            same_bits(a.mean_wake_time_s, b.mean_wake_time_s) &&
            same_bits(a.mean_energy_j, b.mean_energy_j) &&
            same_bits(a.mean_switches, b.mean_switches) &&
            a.mean_cost.has_value() == b.mean_cost.has_value();
  for (std::size_t l = 0; l < 4; ++l) eq = eq && same_bits(a.level_shares[l], b.level_shares[l]);
  if (a.mean_cost && b.mean_cost) eq = eq && same_bits(*a.mean_cost, *b.mean_cost);
  return eq;
}

}  // namespace

TEST_CASE("idle period inside the first block") {
  const Fixture f;
  const Policy p = f.optimal(CostWeights::make(0.3, 0.7));
  const BlockSchedule schedule(p, f.config);
  const double b1 = to_seconds(off_duration(f.config.level(p.blocks.front().level)));
  const IdleTrace t = schedule.trace(0.25 * b1);
  REQUIRE(t.blocks.size() == 1);
  CHECK(t.blocks[0].start_s == 0.0);
  CHECK(t.wake_time_s() == b1);
  CHECK(t.added_delay_s == doctest::Approx(0.75 * b1).epsilon(1e-15));
  CHECK(t.switches == 0);
  CHECK(t.energy_j ==
        doctest::Approx(f.config.level(p.blocks.front().level).power() * b1).epsilon(1e-15));
}

TEST_CASE("arrival exactly on a wake-up check ends the period there") {
  const Fixture f;
  const BlockSchedule schedule(f.constant(LevelId::SM2), f.config);
  const IdleTrace t = schedule.trace(0.004);
  CHECK(t.blocks.size() == 2);
  CHECK(t.added_delay_s == 0.0);
}

TEST_CASE("traces past the policy horizon repeat the last level") {
  const Fixture f;
  const Policy p = f.optimal(CostWeights::make(0.7, 0.3));
  const BlockSchedule schedule(p, f.config);
  const IdleTrace t = schedule.trace(5.0);
  CHECK(t.blocks.size() > p.blocks.size());
  CHECK(t.blocks.back().level == p.blocks.back().level);
  CHECK(t.wake_time_s() >= 5.0);
  for (std::size_t i = 1; i < t.blocks.size(); ++i) {
    CHECK(t.blocks[i].start_s == doctest::Approx(t.blocks[i - 1].end_s).epsilon(1e-15));
  }
  // settle() agrees with the explicit trace.
  const BlockSchedule::Outcome o = schedule.settle(5.0);
  CHECK(o.blocks == t.blocks.size());
  CHECK(o.switches == t.switches);
  CHECK(o.energy_j == doctest::Approx(t.energy_j).epsilon(1e-12));
  CHECK(o.wake_time_s == doctest::Approx(t.wake_time_s()).epsilon(1e-15));
}

TEST_CASE("added delay is below the final block's duration") {
  const Fixture f;
  for (const CostWeights& w : {CostWeights::make(0.3, 0.7), CostWeights::make(0.7, 0.3),
                               CostWeights::make(0.7, 0.2, 0.1)}) {
    const Policy p = f.optimal(w);
    RandomStream rng(42);
    for (int i = 0; i < 20000; ++i) {
      const IdleTrace t = simulate_idle_period(p, f.config, rng);
      REQUIRE_FALSE(t.blocks.empty());
      const TraceBlock& last = t.blocks.back();
      CHECK(t.added_delay_s >= 0.0);
      CHECK(t.added_delay_s < to_seconds(off_duration(f.config.level(last.level))));
      CHECK(last.start_s < t.tau_s);
      CHECK(t.tau_s <= last.end_s);
    }
  }
}

TEST_CASE("same seed gives the same trace") {
  const Fixture f;
  const Policy p = f.optimal(CostWeights::make(0.7, 0.3));
  RandomStream a(7), b(7);
  for (int i = 0; i < 100; ++i) {
    const IdleTrace x = simulate_idle_period(p, f.config, a);
    const IdleTrace y = simulate_idle_period(p, f.config, b);
    CHECK(same_bits(x.tau_s, y.tau_s));
    CHECK(x.blocks.size() == y.blocks.size());
    CHECK(same_bits(x.energy_j, y.energy_j));
  }
}

TEST_CASE("single-level policies have a deterministic energy ratio") {
  const Fixture f;
  const SimMetrics sm2 = run_experiment(f.constant(LevelId::SM2), f.config, 100000, 1);
  CHECK(sm2.energy_reduction.value == doctest::Approx(0.8688073394495413).epsilon(1e-12));
  CHECK(sm2.energy_reduction.std_error < 1e-9);  // rounding only
  CHECK(sm2.level_shares[level_index(LevelId::SM2)] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sm2.mean_switches.value == 0.0);

  const SimMetrics sm3 = run_experiment(f.constant(LevelId::SM3), f.config, 100000, 1);
  CHECK(sm3.energy_reduction.value == doctest::Approx(0.9127522935779817).epsilon(1e-12));
}

TEST_CASE("one period reproduces its trace") {
  const Fixture f;
  const Policy p = f.optimal(CostWeights::make(0.7, 0.2, 0.1));
  const std::uint64_t seed = 99;
  RandomStream stream = RandomStream::substream(seed, 0);
  const IdleTrace t = simulate_idle_period(p, f.config, stream);
  const SimMetrics m = run_experiment(p, f.config, 1, seed);
  CHECK(m.n_periods == 1);
  CHECK(m.mean_delay_s.value == doctest::Approx(t.added_delay_s).epsilon(1e-15));
  CHECK(m.mean_wake_time_s.value == doctest::Approx(t.wake_time_s()).epsilon(1e-15));
  CHECK(m.mean_energy_j.value == doctest::Approx(t.energy_j).epsilon(1e-12));
  CHECK(m.mean_switches.value == static_cast<double>(t.switches));
  CHECK(m.energy_reduction.value ==
        doctest::Approx(1.0 - t.energy_j / (109.0 * t.wake_time_s())).epsilon(1e-12));
  CHECK(m.mean_delay_s.std_error == 0.0);
}

TEST_CASE("zero periods is rejected") {
  const Fixture f;
  CHECK_THROWS_AS(run_experiment(f.constant(LevelId::SM2), f.config, 0, 1), std::invalid_argument);
}

TEST_CASE("simulated wake time matches the analytic series") {
  const Fixture f;
  const std::vector<double> rates{10.0, 500.0}, weights{0.5, 0.5};
  for (LevelId level : {LevelId::SM2, LevelId::SM3}) {
    const SimMetrics m = run_experiment(f.constant(level), f.config, 1'000'000, 2024, {4, {}});
    const double b = to_seconds(off_duration(f.config.level(level)));
    const double exact = oracle::repeated_block_wake_time(rates, weights, b);
    CHECK(std::abs(m.mean_wake_time_s.value - exact) < 3.0 * m.mean_wake_time_s.std_error);
    CHECK(std::abs(m.mean_delay_s.value - (exact - 0.051)) < 3.0 * m.mean_delay_s.std_error);
  }
}

TEST_CASE("simulated cost matches the dynamic programme") {
  const Fixture f;
  for (const CostWeights& w : {CostWeights::make(0.3, 0.7), CostWeights::make(0.7, 0.2, 0.1)}) {
    const StateSpace space = build_state_space(f.config, w);
    const Policy p = extract_policy(space, value_iteration(space, w, f.norm), w, f.norm);
    const double dp = evaluate_policy(space, p, w, f.norm)[StateSpace::kRoot];
    ExperimentOptions opts{4, CostProbe{w, f.norm}};
    const SimMetrics m = run_experiment(p, f.config, 1'000'000, 77, opts);
    REQUIRE(m.mean_cost.has_value());
    CHECK(std::abs(m.mean_cost->value - dp) < 3.0 * m.mean_cost->std_error);

    const AnalyticSummary a = analytic_cost(p, f.config, w, f.norm);
    CHECK(std::abs(m.mean_wake_time_s.value - a.expected_wake_time_s) <
          3.0 * m.mean_wake_time_s.std_error);
  }
}

TEST_CASE("metrics do not depend on the thread count") {
  const Fixture f;
  const CostWeights w = CostWeights::make(0.7, 0.2, 0.1);
  const Policy p = f.optimal(w);
  const SimMetrics one = run_experiment(p, f.config, 50'000, 5, {1, CostProbe{w, f.norm}});
  const SimMetrics four = run_experiment(p, f.config, 50'000, 5, {4, CostProbe{w, f.norm}});
  const SimMetrics again = run_experiment(p, f.config, 50'000, 5, {3, CostProbe{w, f.norm}});
  CHECK(same_bits(one, four));
  CHECK(same_bits(one, again));
  const SimMetrics other = run_experiment(p, f.config, 50'000, 6, {1, CostProbe{w, f.norm}});
  CHECK_FALSE(same_bits(one, other));
}

TEST_CASE("policy summary") {
  const Fixture f;
  const PolicySummary s = summarize(f.optimal(CostWeights::make(0.7, 0.3)));
  CHECK(s.runs == "SM2x5 SM3x65 SM2x2");
  CHECK(s.switches == 2);
  CHECK(s.blocks == 72);
  CHECK(s.digest.size() == 16);
  CHECK(summarize(f.constant(LevelId::SM2)).runs == "SM2x657");
}

TEST_CASE("sweep") {
  const Fixture f;
  SUBCASE("one point equals a direct experiment") {
    const CostWeights w = CostWeights::make(0.7, 0.3);
    const std::vector<CostWeights> grid{w};
    const std::vector<SweepRow> rows = sweep(f.config, grid, 20'000, 3);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].status == "ok");
    const Policy p = f.optimal(w);
    ExperimentOptions opts{1, CostProbe{w, f.norm}};
    CHECK(same_bits(*rows[0].metrics, run_experiment(p, f.config, 20'000, 3, opts)));
    CHECK(rows[0].policy->digest == summarize(p).digest);
  }

  SUBCASE("delay falls and switches group along coarse grids") {
    std::vector<CostWeights> eps1_grid;
    for (double e : {0.3, 0.7, 1.0}) eps1_grid.push_back(CostWeights::make(e, 1.0 - e));
    const auto rows = sweep(f.config, eps1_grid, 200'000, 11, {{}, {}, 4});
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const Estimate& a = rows[i - 1].metrics->mean_delay_s;
      const Estimate& b = rows[i].metrics->mean_delay_s;
      CHECK(b.value <= a.value + std::hypot(a.std_error, b.std_error));
    }

    std::vector<CostWeights> eps3_grid;
    for (double e : {0.0, 0.1, 0.2}) eps3_grid.push_back(CostWeights::make(0.7, 0.3 - e, e));
    const auto rows3 = sweep(f.config, eps3_grid, 1'000, 11);
    for (std::size_t i = 1; i < rows3.size(); ++i) {
      CHECK(rows3[i].policy->switches <= rows3[i - 1].policy->switches);
    }
  }

  SUBCASE("a failing point is reported, not thrown") {
    SystemConfig cfg = default_nsa_config();
    cfg.limits.max_states = 50;
    const ValidConfig small = validate(cfg);
    const std::vector<CostWeights> grid{CostWeights::make(1, 0)};
    const auto rows = sweep(small, grid, 100, 1);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].status != "ok");
    CHECK_FALSE(rows[0].metrics.has_value());
  }
}
