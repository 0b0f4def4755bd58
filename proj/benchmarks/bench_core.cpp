#include <benchmark/benchmark.h>

#include "csan/automata.hpp"
#include "csan/reachability.hpp"
#include "generators.hpp"
#include "plants.hpp"

using namespace csan;
using csan::testing::Rng;

static void BM_RealizeFig1(benchmark::State& state) {
  Net n = testing::fig1_net();
  Marking m0 = testing::fig1_initial();
  for (auto _ : state) benchmark::DoNotOptimize(realize_controlled_automaton(n, m0));
}
BENCHMARK(BM_RealizeFig1);

// Random conservative nets; range(0) is the token bound.
static void BM_RealizeRandomNets(benchmark::State& state) {
  Rng rng(7);
  std::vector<testing::StandardNet> nets;
  for (int i = 0; i < 32; ++i) nets.push_back(testing::random_standard_net(rng, 6, state.range(0)));
  std::vector<Net> built;
  for (const auto& sn : nets) built.push_back(sn.build());
  std::size_t states = 0;
  for (auto _ : state) {
    for (std::size_t i = 0; i < nets.size(); ++i) {
      auto r = realize_controlled_automaton(built[i], nets[i].initial, ExplorationBudget{1000000, 1000000});
      states += r.automaton.num_states();
    }
  }
  state.counters["states/net"] = benchmark::Counter(double(states) / double(nets.size()),
                                                    benchmark::Counter::kAvgIterations);
}
BENCHMARK(BM_RealizeRandomNets)->Arg(3)->Arg(5)->Arg(8);

static void BM_CoarsestBisimulation(benchmark::State& state) {
  Rng rng(11);
  auto s = testing::random_automaton(rng, state.range(0), 3, 2, 0.3, true);
  auto t = testing::bisimilar_variant(rng, s).automaton;
  for (auto _ : state) benchmark::DoNotOptimize(coarsest_bisimulation(s, t));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_CoarsestBisimulation)->RangeMultiplier(4)->Range(16, 1024)->Complexity();

static void BM_SynchronousProduct(benchmark::State& state) {
  Rng rng(13);
  auto s1 = testing::random_automaton(rng, state.range(0), 2, 2, 0.5, true);
  auto s2 = testing::random_automaton(rng, state.range(0), 2, 2, 0.5, true);
  for (auto _ : state) benchmark::DoNotOptimize(synchronous_product(s1, s2));
}
BENCHMARK(BM_SynchronousProduct)->Arg(8)->Arg(32)->Arg(64);
