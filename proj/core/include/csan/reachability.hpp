#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "csan/automata.hpp"
#include "csan/net.hpp"

namespace csan {

struct ExplorationBudget {
  std::size_t max_states = 100000;
  std::size_t max_closure_steps = 100000;
};

struct ClosureResult {
  std::vector<Marking> stable;  // in discovery order
  bool divergent = false;
  bool truncated = false;
};

// Graph of instantaneous firings reachable from a marking. Node 0 is the
// start. Stable nodes have no outgoing edges.
struct ClosureGraph {
  struct Edge {
    std::size_t from = 0;
    ActivityId activity = 0;
    std::size_t to = 0;
  };
  std::vector<Marking> nodes;
  std::vector<bool> stable;
  std::vector<Edge> edges;
  bool divergent = false;  // some cycle of instantaneous firings is reachable
  bool truncated = false;
};

ClosureGraph explore_closure(const Net& net, const Marking& mu, const ExplorationBudget& budget = {});

ClosureResult instantaneous_closure(const Net& net, const Marking& mu, const ExplorationBudget& budget = {});

// Name used for the divergence state in realized automata.
inline constexpr const char* kDivergenceState = "Delta";

struct Realization {
  ControlledAutomaton automaton;
  std::vector<Marking> markings;  // per state; empty vector for Delta
  std::optional<StateId> delta;

  std::optional<StateId> find(const Marking& m) const;
};

// Throws BudgetExceeded when max_states or a closure budget is exhausted.
Realization realize_controlled_automaton(const Net& net, const Marking& mu0, const ExplorationBudget& budget = {});

}  // namespace csan
