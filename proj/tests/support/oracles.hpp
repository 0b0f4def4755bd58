#pragma once

#include <map>
#include <optional>
#include <set>
#include <tuple>
#include <vector>

#include "csan/automata.hpp"
#include "csan/policy.hpp"
#include "csan/prob.hpp"
#include "csan/reachability.hpp"
#include "generators.hpp"

namespace csan::testing {

// Realization keyed by markings; the divergence state is the empty marking.
struct MarkingAutomaton {
  std::set<Marking> states;
  std::set<Marking> initial;
  std::set<std::tuple<Marking, SymbolId, ControlId, Marking>> transitions;
  bool operator==(const MarkingAutomaton&) const = default;
};

// Fire-then-close enumeration with token arithmetic on a standard net.
MarkingAutomaton brute_force_realization(const StandardNet& n);
MarkingAutomaton as_marking_automaton(const Realization& r);

// Deterministic memoryless policies as control vectors.
std::vector<std::vector<ControlId>> all_memoryless(std::size_t states, std::size_t controls);

// Some accepted word under the fixed memoryless policy (edges (q,a,pi(q),q')).
bool memoryless_nonempty_finite(const ControlledAutomaton& s, const std::vector<ControlId>& pi);
// Some accepting cycle reachable under the fixed memoryless policy.
bool memoryless_nonempty_buchi(const ControlledAutomaton& s, const std::vector<ControlId>& pi);

// Reachability closure of the plant graph with free labels (Warshall).
std::vector<std::vector<bool>> transitive_closure(const ControlledAutomaton& s);
bool plant_reaches_accepting(const ControlledAutomaton& s);
bool plant_has_reachable_accepting_cycle(const ControlledAutomaton& s);

// Sum over every state and control sequence of the run weight, with the
// finite-memory update and output read straight from the tables.
double enumerate_word_probability(const Cpa& u, const FiniteMemoryPolicy& p, const std::vector<SymbolId>& w);

// Exhaustive search over deterministic finite-memory policies with at most
// `memory` states (initial 0) on a deterministic complete plant, for one that
// accepts exactly the words in `positive` among `sample`. Unassigned table
// entries are branched on only when a sample word reaches them, so every
// policy is covered. Returns the number of search nodes, or nullopt if a
// policy was found.
std::optional<std::size_t> no_finite_memory_policy_matches(const ControlledAutomaton& plant, std::size_t memory,
                                                          const std::vector<std::vector<SymbolId>>& sample,
                                                          const std::vector<bool>& positive);

}  // namespace csan::testing
