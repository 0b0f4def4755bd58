#include <doctest.h>

#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "csan/error.hpp"
#include "csan/stoch.hpp"
#include "generators.hpp"
#include "plants.hpp"
#include "stats.hpp"

using namespace csan;
using csan::testing::Rng;

namespace {

Cpa skeleton(std::size_t n, std::size_t acts = 1, std::size_t ctrls = 1) {
  Cpa u;
  for (std::size_t q = 0; q < n; ++q) u.states.push_back("s" + std::to_string(q));
  for (std::size_t a = 0; a < acts; ++a) u.activities.push_back(std::string(1, static_cast<char>('a' + a)));
  for (std::size_t c = 0; c < ctrls; ++c) u.controls.push_back("c" + std::to_string(c + 1));
  u.initial.assign(n, 0.0);
  u.initial[0] = 1.0;
  return u;
}

PolicySpec constant(const Cpa& u, ControlId c = 0) {
  return MemorylessPolicy::constant({u.num_states(), u.activities.size(), u.controls.size()}, c);
}

// Timing tables with every enabled pair set to d and rho 1.
Csa with_timing(Cpa u, DistributionSpec d) {
  Csa v;
  v.base = std::move(u);
  const std::size_t Q = v.base.num_states(), A = v.base.activities.size();
  v.distribution.assign(Q, std::vector<std::optional<DistributionSpec>>(A));
  v.rho.assign(Q, std::vector<double>(A, 1.0));
  v.reactivation.assign(Q, std::vector<bool>(A, false));
  auto en = v.enabled();
  for (StateId q = 0; q < Q; ++q)
    for (SymbolId a = 0; a < A; ++a)
      if (en[q][a]) v.distribution[q][a] = d;
  return v;
}

// One state, activity a loops back with the given distribution.
Csa single_loop(DistributionSpec d, double rho = 1.0) {
  Cpa u = skeleton(1);
  u.transitions = {{0, 0, 0, 0, 1.0}};
  Csa v = with_timing(u, d);
  v.rho[0][0] = rho;
  return v;
}

// s0 races a (rate 1) to s1 against b (rate 3) to s2; both come back on a.
Cma racer() {
  Cma w;
  w.base = skeleton(3, 2, 1);
  w.base.transitions = {{0, 0, 0, 1, 1.0}, {0, 1, 0, 2, 1.0}, {1, 0, 0, 0, 1.0}, {2, 0, 0, 0, 1.0}};
  w.sigma = {{1.0, 3.0}, {2.0, 0.0}, {2.0, 0.0}};
  return w;
}

std::vector<double> gaps(const Trajectory& t) {
  std::vector<double> g;
  for (std::size_t i = 1; i < t.entries.size(); ++i) g.push_back(t.entries[i].time - t.entries[i - 1].time);
  return g;
}

// Sojourn lengths in state q, closed by a completion.
std::vector<double> sojourns(const Trajectory& t, StateId q) {
  std::vector<double> s;
  for (std::size_t i = 0; i + 1 < t.entries.size(); ++i)
    if (t.entries[i].state == q) s.push_back(t.entries[i + 1].time - t.entries[i].time);
  return s;
}

// Step-function integral by fine midpoint sampling.
double midpoint_integral(const Trajectory& t, const RewardStructure& r, std::size_t steps) {
  double h = t.horizon / static_cast<double>(steps), total = 0;
  std::size_t i = 0;
  for (std::size_t k = 0; k < steps; ++k) {
    double x = (static_cast<double>(k) + 0.5) * h;
    while (i + 1 < t.entries.size() && t.entries[i + 1].time <= x) ++i;
    total += h * r.rate_of(t.entries[i].state, t.entries[i].control);
  }
  return total;
}

}  // namespace

TEST_CASE("distribution parameters, means and cdfs") {
  CHECK_THROWS_AS(DistributionSpec::exponential(0).check(), DomainError);
  CHECK_THROWS_AS(DistributionSpec::deterministic(-1).check(), DomainError);
  CHECK_THROWS_AS(DistributionSpec::uniform(2, 1).check(), DomainError);
  CHECK_THROWS_AS(DistributionSpec::erlang(0, 1).check(), DomainError);
  CHECK_THROWS_AS(DistributionSpec::weibull(1, 0).check(), DomainError);
  CHECK_NOTHROW(DistributionSpec::deterministic(0).check());

  CHECK(DistributionSpec::exponential(4).mean() == doctest::Approx(0.25));
  CHECK(DistributionSpec::deterministic(1.5).mean() == 1.5);
  CHECK(DistributionSpec::uniform(1, 3).mean() == doctest::Approx(2));
  CHECK(DistributionSpec::erlang(3, 2).mean() == doctest::Approx(1.5));
  CHECK(DistributionSpec::weibull(1, 2).mean() == doctest::Approx(2));
  CHECK(DistributionSpec::weibull(2, 1).mean() == doctest::Approx(std::sqrt(M_PI) / 2));

  CHECK(DistributionSpec::exponential(2).cdf(1) == doctest::Approx(1 - std::exp(-2.0)));
  CHECK(DistributionSpec::deterministic(1).cdf(0.999) == 0.0);
  CHECK(DistributionSpec::deterministic(1).cdf(1) == 1.0);
  CHECK(DistributionSpec::uniform(1, 3).cdf(1.5) == doctest::Approx(0.25));
  CHECK(DistributionSpec::erlang(2, 1).cdf(1) == doctest::Approx(1 - 2 * std::exp(-1.0)));
  CHECK(DistributionSpec::weibull(2, 1).cdf(1) == doctest::Approx(1 - std::exp(-1.0)));
  CHECK(DistributionSpec::erlang(2, 1).cdf(-1) == 0.0);
}

TEST_CASE("inversion samples follow their distributions") {
  std::mt19937_64 g(101);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto uniform = [&] { return u01(g); };
  const std::size_t n = 4000;
  for (auto d : {DistributionSpec::exponential(2.5), DistributionSpec::uniform(0.5, 2), DistributionSpec::erlang(3, 1.5),
                 DistributionSpec::weibull(1.7, 0.8)}) {
    std::vector<double> x;
    for (std::size_t i = 0; i < n; ++i) x.push_back(d.sample(uniform));
    INFO(d.to_string());
    CHECK(testing::ks_statistic(x, [&](double y) { return d.cdf(y); }) < testing::ks_critical(0.01, n));
  }
  CHECK(DistributionSpec::deterministic(0.7).sample(uniform) == 0.7);
}

TEST_CASE("timing tables of the fig1 net") {
  Net net = testing::fig1_net();
  Cpan l{net, {}};
  Csan n{l, {}};
  for (ActivityId a : net.timed_activities()) n.timing.push_back({MarkingPattern::any(), a, DistributionSpec::exponential(1), {}, {}});
  Marking m0 = testing::fig1_initial();
  ActivityId t1 = net.timed_activities()[0];
  n.timing.push_back({MarkingPattern::exact(m0), t1, {}, 2.0, true});

  auto r = realize_csa(n, m0);
  auto p = realize_cpa(l, m0);
  CHECK(r.csa.base.states == p.cpa.states);
  CHECK(r.markings == p.markings);
  auto en = r.csa.enabled();
  for (StateId q = 0; q < r.csa.base.num_states(); ++q)
    for (SymbolId a = 0; a < r.csa.base.activities.size(); ++a) {
      if (en[q][a]) CHECK(r.csa.distribution[q][a] == DistributionSpec::exponential(1));
      bool special = r.markings[q] == m0 && a == 0;
      CHECK(r.csa.rho[q][a] == (special ? 2.0 : 1.0));
      CHECK(r.csa.reactivation[q][a] == special);
    }

  Csan missing{l, {}};
  CHECK_THROWS_AS(realize_csa(missing, m0), ModelError);
}

TEST_CASE("net without timed activities realizes a CSA with no activities") {
  NetBuilder b;
  PlaceId p = b.place("P"), q = b.place("Q");
  ActivityId i = b.instantaneous("I");
  b.input_arc(p, i).output_arc(i, q);
  Csan n{Cpan{b.build(), {}}, {}};
  auto r = realize_csa(n, {1, 0});
  CHECK(r.csa.base.activities.empty());
  CHECK(r.csa.base.num_states() == 1);
  auto t = simulate_csa(r.csa, constant(r.csa.base), 5.0, 1);
  CHECK(t.entries.size() == 1);
}

TEST_CASE("deterministic work at speed 2 completes at half the delay") {
  Csa v = single_loop(DistributionSpec::deterministic(1), 2.0);
  auto t = simulate_csa(v, constant(v.base), 2.0, 9);
  REQUIRE(t.entries.size() == 5);
  CHECK(t.entries[0].time == 0.0);
  CHECK_FALSE(t.entries[0].activity.has_value());
  CHECK(t.entries[1].time == 0.5);
  CHECK(t.entries[1].activity == SymbolId{0});
  CHECK(t.entries[1].control == ControlId{0});
  CHECK(t.entries[4].time == 2.0);
  CHECK(t.entries[0].residual[0] == 1.0);
}

TEST_CASE("speed zero freezes the clock") {
  Csa v = single_loop(DistributionSpec::exponential(1), 0.0);
  RewardStructure r;
  r.rate.push_back({{}, {}, 2.0});
  auto t = simulate_csa(v, constant(v.base), 7.0, 3, &r);
  CHECK(t.entries.size() == 1);
  CHECK(t.reward == doctest::Approx(14.0));
}

TEST_CASE("exponential completions have the right mean") {
  Csa v = single_loop(DistributionSpec::exponential(2));
  auto g = gaps(simulate_csa(v, constant(v.base), 6000.0, 17));
  REQUIRE(g.size() > 10000);
  g.resize(10000);
  auto m = testing::moments(g);
  CHECK(std::abs(m.mean - 0.5) < 3 * m.stderr_mean);
  CHECK(testing::ks_statistic(g, [](double x) { return 1 - std::exp(-2 * x); }) < testing::ks_critical(0.01, g.size()));
}

TEST_CASE("disabled activities keep their residual work") {
  // s0: a Det(1) loops, b Det(0.3) leaves to s1; s1: b Det(0.5) returns.
  Cpa u = skeleton(2, 2, 1);
  u.transitions = {{0, 0, 0, 0, 1.0}, {0, 1, 0, 1, 1.0}, {1, 1, 0, 0, 1.0}};
  Csa v = with_timing(u, DistributionSpec::deterministic(1));
  v.distribution[0][1] = DistributionSpec::deterministic(0.3);
  v.distribution[1][1] = DistributionSpec::deterministic(0.5);
  auto t = simulate_csa(v, constant(u), 2.55, 1);
  // a gets 0.3 of work per visit to s0 and finishes on the fourth visit.
  std::vector<StateId> states;
  for (const auto& e : t.entries) states.push_back(e.state);
  CHECK(states == std::vector<StateId>{0, 1, 0, 1, 0, 1, 0, 0});
  CHECK(t.entries.back().activity == SymbolId{0});
  CHECK(t.entries.back().time == doctest::Approx(2.5));
  CHECK(t.entries[1].residual[0] == doctest::Approx(0.7));
}

TEST_CASE("reactivation restarts the clock on every entry") {
  // s0: a Det(1) and b Det(0.4) both loop.
  Cpa u = skeleton(1, 2, 1);
  u.transitions = {{0, 0, 0, 0, 1.0}, {0, 1, 0, 0, 1.0}};
  Csa v = with_timing(u, DistributionSpec::deterministic(1));
  v.distribution[0][1] = DistributionSpec::deterministic(0.4);
  auto count_a = [](const Trajectory& t) {
    std::size_t n = 0;
    for (const auto& e : t.entries) n += e.activity == SymbolId{0};
    return n;
  };
  CHECK(count_a(simulate_csa(v, constant(u), 3.1, 1)) == 3);
  v.reactivation[0][0] = true;
  CHECK(count_a(simulate_csa(v, constant(u), 3.1, 1)) == 0);
}

TEST_CASE("simulation errors") {
  Csa v = single_loop(DistributionSpec::exponential(1));
  CHECK_THROWS_AS(simulate_csa(v, constant(v.base), 0.0, 1), DomainError);
  CHECK_THROWS_AS(simulate_csa(v, constant(v.base), INFINITY, 1), DomainError);

  Csa zeno = single_loop(DistributionSpec::deterministic(0));
  SimOptions opt;
  opt.zeno_events_per_unit = 1000;
  CHECK_THROWS_AS(simulate_csa(zeno, constant(zeno.base), 1.0, 1, nullptr, opt), ZenoError);

  Cpa u = skeleton(1, 1, 2);
  u.transitions = {{0, 0, 0, 0, 1.0}};
  Csa w = with_timing(u, DistributionSpec::exponential(1));
  CHECK_THROWS_AS(simulate_csa(w, constant(u, 1), 10.0, 1), ModelError);

  Csa gap = single_loop(DistributionSpec::exponential(1));
  gap.distribution[0][0].reset();
  CHECK_THROWS_AS(simulate_csa(gap, constant(gap.base), 1.0, 1), ModelError);
}

TEST_CASE("identical seeds give byte-identical CSV") {
  Rng rng(31);
  for (int i = 0; i < 10; ++i) {
    // With one control every enabled activity has a row under it.
    Csa v = csa_of_cma(testing::random_cma(rng, 4, 2, 1));
    auto pi = constant(v.base);
    auto csv = [&](std::uint64_t seed) {
      std::ostringstream os;
      std::vector<Trajectory> runs;
      for (std::uint64_t k = 0; k < 3; ++k) runs.push_back(simulate_csa(v, pi, 20.0, seed + k));
      write_trajectory_csv(os, v, runs);
      return os.str();
    };
    std::string a = csv(5), b = csv(5);
    CHECK(a == b);
    CHECK(a != csv(6));
    CHECK(a.rfind("rep,time,state,activity,control,reward_running\n", 0) == 0);
  }
  Csa one = single_loop(DistributionSpec::exponential(1));
  std::ostringstream os;
  write_trajectory_csv(os, one, {simulate_csa(one, constant(one.base), 1.0, 1)});
  CHECK(os.str().rfind("time,state,activity,control,reward_running\n0,s0,,,0\n", 0) == 0);
}

TEST_CASE("time stamps are nondecreasing and stay within the horizon") {
  Rng rng(37);
  for (int i = 0; i < 20; ++i) {
    Cma w = testing::random_cma(rng, 5, 2, 1);
    auto t = simulate_cma(w, constant(w.base), 30.0, i);
    CHECK(t.entries.front().time == 0.0);
    for (std::size_t k = 1; k < t.entries.size(); ++k) {
      CHECK(t.entries[k].time >= t.entries[k - 1].time);
      CHECK(t.entries[k].activity.has_value());
    }
    CHECK(t.entries.back().time <= 30.0);
  }
}

TEST_CASE("accumulated reward") {
  RewardStructure unit_rate;
  unit_rate.rate.push_back({{}, {}, 1.0});
  RewardStructure unit_impulse;
  unit_impulse.impulse.push_back({{}, {}, {}, {}, 1.0});

  Csa v = single_loop(DistributionSpec::deterministic(0.75));
  auto t = simulate_csa(v, constant(v.base), 3.0, 1, &unit_rate);
  CHECK(accumulated_reward(t, unit_rate, 0, 3) == doctest::Approx(3.0));
  CHECK(t.reward == doctest::Approx(3.0));
  CHECK(accumulated_reward(t, unit_impulse, 0, 3) == 4.0);
  CHECK(accumulated_reward(t, unit_impulse, 0.75, 3) == 3.0);
  CHECK(discounted_reward(t, unit_rate, 0.5) == doctest::Approx((1 - std::exp(-1.5)) / 0.5));
  CHECK_THROWS_AS(accumulated_reward(t, unit_rate, 0, 3.5), DomainError);
  CHECK_THROWS_AS(accumulated_reward(t, unit_rate, 2, 1), DomainError);
  CHECK_THROWS_AS(discounted_reward(t, unit_rate, 0), DomainError);

  Rng rng(41);
  for (int i = 0; i < 15; ++i) {
    Cma w = testing::random_cma(rng, 4, 2, 1);
    RewardStructure r;
    for (StateId q = 0; q < 4; ++q) r.rate.push_back({q, {}, static_cast<double>(q + 1)});
    r.rate.push_back({{}, ControlId{0}, 0.5});
    r.impulse.push_back({{}, SymbolId{0}, {}, {}, 2.0});
    auto tr = simulate_cma(w, constant(w.base), 10.0, i, &r);
    double total = accumulated_reward(tr, r, 0, 10);
    CHECK(total == doctest::Approx(tr.reward).epsilon(1e-9));
    CHECK(total == doctest::Approx(accumulated_reward(tr, r, 0, 4.3) + accumulated_reward(tr, r, 4.3, 10)).epsilon(1e-9));
    RewardStructure rate_only{r.rate, {}};
    CHECK(accumulated_reward(tr, rate_only, 0, 10) == doctest::Approx(midpoint_integral(tr, rate_only, 200000)).epsilon(1e-3));
    CHECK(tr.entries.back().reward <= tr.reward + 1e-9);
  }
}

TEST_CASE("Markovian reduction") {
  Csa v = single_loop(DistributionSpec::exponential(3), 2.0);
  Cma w = to_cma(v);
  CHECK(w.sigma[0][0] == 6.0);
  CHECK_THROWS_AS(to_cma(single_loop(DistributionSpec::deterministic(1))), ModelError);

  Rng rng(43);
  for (int i = 0; i < 30; ++i) {
    Cma x = testing::random_cma(rng, 4, 2, 2);
    Cma y = to_cma(csa_of_cma(x));
    CHECK(y.sigma == x.sigma);
  }

  // Exp(3) at speed 2 and its CMA rate 6 produce the same sojourn law.
  auto a = gaps(simulate_csa(v, constant(v.base), 1000.0, 1));
  auto b = gaps(simulate_cma(w, constant(w.base), 1000.0, 2));
  CHECK(testing::ks_two_sample(a, b) < testing::ks_critical(0.01, a.size(), b.size()));
  // Inversion sampling makes the same seed give the same times.
  auto c = simulate_csa(v, constant(v.base), 50.0, 3);
  auto d = simulate_cma(w, constant(w.base), 50.0, 3);
  REQUIRE(c.entries.size() == d.entries.size());
  for (std::size_t k = 0; k < c.entries.size(); ++k) CHECK(c.entries[k].time == doctest::Approx(d.entries[k].time));
}

TEST_CASE("CTMDP exit rates and jump chains") {
  Cma one;
  one.base = skeleton(2);
  one.base.transitions = {{0, 0, 0, 1, 1.0}};
  one.sigma = {{5.0}, {0.0}};
  auto m = ctmdp_of_cma(one);
  CHECK(m.exit_rates()[0][0] == 5.0);
  CHECK(m.exit_rates()[1][0] == 0.0);
  CHECK(m.jump_rows()[0][0] == std::vector<std::pair<StateId, double>>{{1, 1.0}});
  CHECK(m.jump_rows()[1][0].empty());
  CHECK(m.available()[0][0]);
  CHECK_FALSE(m.available()[1][0]);

  auto r = ctmdp_of_cma(racer());
  CHECK(r.exit_rates()[0][0] == 4.0);
  auto row = r.jump_rows()[0][0];
  REQUIRE(row.size() == 2);
  CHECK(row[0] == std::pair<StateId, double>{1, 0.25});
  CHECK(row[1] == std::pair<StateId, double>{2, 0.75});
  CHECK(r.max_exit_rate() == 4.0);

  Cma bad = one;
  bad.sigma[0][0] = 0.0;
  CHECK_THROWS_AS(ctmdp_of_cma(bad), ModelError);

  Rng rng(47);
  for (int i = 0; i < 50; ++i) {
    Cma w = testing::random_cma(rng, 4, 3, 2);
    auto c = ctmdp_of_cma(w);
    auto lambda = c.exit_rates();
    auto jumps = c.jump_rows();
    auto rows = w.base.rows();
    for (StateId q = 0; q < 4; ++q)
      for (ControlId u = 0; u < 2; ++u) {
        double want = 0;
        for (SymbolId a = 0; a < 3; ++a)
          for (auto [to, p] : rows[q][a][u]) want += w.sigma[q][a] * p;
        CHECK(lambda[q][u] == doctest::Approx(want));
        double sum = 0;
        for (auto [to, p] : jumps[q][u]) sum += p;
        if (want > 0) CHECK(sum == doctest::Approx(1.0));
      }
  }
}

TEST_CASE("simulated jumps and sojourns match the CTMDP") {
  Cma w = racer();
  auto t = simulate_cma(w, constant(w.base), 9000.0, 59);
  std::vector<std::size_t> counts(2, 0);
  std::size_t jumps = 0;
  for (std::size_t k = 0; k + 1 < t.entries.size() && jumps < 10000; ++k)
    if (t.entries[k].state == 0) {
      ++counts[t.entries[k + 1].state - 1];
      ++jumps;
    }
  REQUIRE(jumps == 10000);
  CHECK(testing::chi_square_statistic(counts, {0.25, 0.75}) < testing::chi_square_critical(1, 0.01));

  auto s = sojourns(t, 0);
  CHECK(testing::ks_statistic(s, [](double x) { return 1 - std::exp(-4 * x); }) < testing::ks_critical(0.01, s.size()));
}
