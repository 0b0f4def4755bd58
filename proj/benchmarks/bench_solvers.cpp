#include <benchmark/benchmark.h>

#include <random>

#include "csan/solvers.hpp"

using namespace csan;
using Rng = std::mt19937_64;

namespace {

RewardStructure random_rates(Rng& rng, std::size_t states, std::size_t controls) {
  std::uniform_real_distribution<double> u(0.0, 2.0);
  RewardStructure r;
  for (StateId q = 0; q < states; ++q)
    for (ControlId c = 0; c < controls; ++c) r.rate.push_back({q, c, u(rng)});
  return r;
}

// Sparse random model: every (q,a,c) row moves to `fanout` random states, so
// work per sweep is linear in the state count. One activity gives a DTMDP.
Cpa sparse_cpa(Rng& rng, std::size_t n, std::size_t acts, std::size_t ctrls, std::size_t fanout = 3) {
  Cpa u;
  for (std::size_t q = 0; q < n; ++q) u.states.push_back("s" + std::to_string(q));
  for (std::size_t a = 0; a < acts; ++a) u.activities.push_back(std::string(1, char('a' + a)));
  for (std::size_t c = 0; c < ctrls; ++c) u.controls.push_back("c" + std::to_string(c));
  u.initial.assign(n, 0.0);
  u.initial[0] = 1.0;
  std::uniform_int_distribution<StateId> pick(0, n - 1);
  std::uniform_real_distribution<double> w(0.1, 1.0);
  for (StateId q = 0; q < n; ++q)
    for (SymbolId a = 0; a < acts; ++a)
      for (ControlId c = 0; c < ctrls; ++c) {
        std::vector<double> ws(fanout);
        double total = 0.0;
        for (double& x : ws) total += (x = w(rng));
        for (double x : ws) u.transitions.push_back({q, a, c, pick(rng), x / total});
      }
  return u;
}

Cma sparse_cma(Rng& rng, std::size_t n) {
  Cma w;
  w.base = sparse_cpa(rng, n, 2, 2);
  std::uniform_real_distribution<double> rate(0.5, 3.0);
  w.sigma.assign(n, std::vector<double>(2));
  for (auto& row : w.sigma)
    for (double& x : row) x = rate(rng);
  return w;
}

PolicySpec constant(const Cpa& u) {
  return MemorylessPolicy::constant({u.num_states(), u.activities.size(), u.controls.size()}, 0);
}

}  // namespace

static void BM_ValueIteration(benchmark::State& state) {
  Rng rng(3);
  const std::size_t n = state.range(0);
  Dtmdp d = dtmdp_of_cpa(sparse_cpa(rng, n, 1, 2));
  auto r = random_rates(rng, n, 2);
  SolveConfig cfg;
  cfg.gamma = 0.95;
  cfg.epsilon = 1e-8;
  for (auto _ : state) benchmark::DoNotOptimize(value_iteration_dtmdp(d, r, cfg));
  state.SetComplexityN(n);
}
BENCHMARK(BM_ValueIteration)->RangeMultiplier(4)->Range(16, 4096)->Complexity(benchmark::oN);

static void BM_PolicyIteration(benchmark::State& state) {
  Rng rng(3);
  const std::size_t n = state.range(0);
  Dtmdp d = dtmdp_of_cpa(sparse_cpa(rng, n, 1, 2));
  auto r = random_rates(rng, n, 2);
  SolveConfig cfg;
  cfg.gamma = 0.95;
  for (auto _ : state) benchmark::DoNotOptimize(policy_iteration_dtmdp(d, r, cfg));
}
BENCHMARK(BM_PolicyIteration)->RangeMultiplier(4)->Range(16, 1024);

static void BM_CtmdpDiscounted(benchmark::State& state) {
  Rng rng(5);
  const std::size_t n = state.range(0);
  Ctmdp m = ctmdp_of_cma(sparse_cma(rng, n));
  auto r = random_rates(rng, n, 2);
  SolveConfig cfg;
  cfg.beta = 0.1;
  for (auto _ : state) benchmark::DoNotOptimize(solve_ctmdp_discounted(m, r, cfg));
}
BENCHMARK(BM_CtmdpDiscounted)->Arg(16)->Arg(256)->Arg(4096);

static void BM_TimeBoundedReachability(benchmark::State& state) {
  Rng rng(5);
  const std::size_t n = 256;
  Ctmdp m = ctmdp_of_cma(sparse_cma(rng, n));
  std::vector<bool> goal(n, false);
  goal[n - 1] = true;
  auto policy = MemorylessPolicy::constant({n, m.activities.size(), m.controls.size()}, 0);
  const double horizon = double(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(time_bounded_reachability(m, goal, policy, horizon, SolveConfig{}));
}
BENCHMARK(BM_TimeBoundedReachability)->Arg(1)->Arg(10)->Arg(100);

static void BM_SimulateCma(benchmark::State& state) {
  Rng rng(9);
  Cma w = sparse_cma(rng, 32);
  auto spec = constant(w.base);
  std::uint64_t seed = 0;
  std::size_t events = 0;
  for (auto _ : state) events += simulate_cma(w, spec, double(state.range(0)), ++seed).entries.size();
  state.counters["events"] = benchmark::Counter(double(events), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_SimulateCma)->Arg(100)->Arg(1000);

static void BM_MonteCarlo(benchmark::State& state) {
  Rng rng(9);
  Cma w = sparse_cma(rng, 16);
  Csa v = csa_of_cma(w);
  auto spec = constant(w.base);
  auto r = random_rates(rng, 16, 2);
  MonteCarloOptions opt;
  opt.threads = state.range(0);
  for (auto _ : state) benchmark::DoNotOptimize(monte_carlo_eval(v, spec, r, 10.0, 0.5, 0.05, opt));
}
BENCHMARK(BM_MonteCarlo)->Arg(1)->Arg(4)->UseRealTime();
