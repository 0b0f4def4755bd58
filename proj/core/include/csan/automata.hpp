#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace csan {

using StateId = std::size_t;
using SymbolId = std::size_t;

struct Transition {
  StateId from = 0;
  SymbolId activity = 0;
  SymbolId control = 0;
  StateId to = 0;

  auto operator<=>(const Transition&) const = default;
};

// Controlled automaton (Q, A, C, ->, Q0) with an optional accepting set.
// The Buchi variant is the same value with `accepting` present; operations
// that need Buchi acceptance check for it.
struct ControlledAutomaton {
  std::vector<std::string> states;
  std::vector<std::string> activities;
  std::vector<std::string> controls;
  std::vector<Transition> transitions;
  std::vector<StateId> initial;
  std::optional<std::vector<StateId>> accepting;

  std::size_t num_states() const { return states.size(); }
  std::optional<StateId> find_state(std::string_view name) const;
  std::optional<SymbolId> find_activity(std::string_view name) const;
  std::optional<SymbolId> find_control(std::string_view name) const;

  bool is_accepting(StateId q) const;
  bool is_initial(StateId q) const;
  std::vector<bool> accepting_mask() const;

  // Outgoing transitions grouped by source state, sorted.
  std::vector<std::vector<Transition>> adjacency() const;

  // Sorts and deduplicates transitions, initial and accepting lists.
  void normalize();

  // Throws ModelError on out-of-range references.
  void check() const;
};

using ControlledBuchiAutomaton = ControlledAutomaton;

// Throws AlphabetMismatch unless both automata use the same activity and
// control name sets. Returns a copy of `b` with symbols re-indexed to `a`'s order.
ControlledAutomaton align_alphabets(const ControlledAutomaton& a, const ControlledAutomaton& b);

// A relation between the states of a left and a right automaton.
struct Bisimulation {
  std::size_t left_size = 0;
  std::size_t right_size = 0;
  std::vector<std::vector<bool>> related;  // [left][right]

  bool contains(StateId l, StateId r) const { return related[l][r]; }
  std::vector<std::pair<StateId, StateId>> pairs() const;
  static Bisimulation from_pairs(std::size_t nl, std::size_t nr, const std::vector<std::pair<StateId, StateId>>& ps);
};

// Coarsest relation satisfying the transfer, totality, initial-state and
// (when both carry F) accepting-state clauses, or nullopt if none does.
std::optional<Bisimulation> coarsest_bisimulation(const ControlledAutomaton& s, const ControlledAutomaton& t);

// Checks every clause for a given relation.
bool is_bisimulation(const ControlledAutomaton& s, const ControlledAutomaton& t, const Bisimulation& rel);

bool is_isomorphic(const ControlledAutomaton& s, const ControlledAutomaton& t);

// Isomorphism as a state map left -> right, if one exists.
std::optional<std::vector<StateId>> find_isomorphism(const ControlledAutomaton& s, const ControlledAutomaton& t);

struct UnionResult {
  ControlledAutomaton automaton;
  std::vector<StateId> left_map;   // state of s1 -> union state
  std::vector<StateId> right_map;  // state of s2 -> union state
};

UnionResult disjoint_union(const ControlledAutomaton& s1, const ControlledAutomaton& s2);

enum class ProductMode { finite, buchi };

struct ProductResult {
  ControlledAutomaton automaton;
  std::size_t left_states = 0;
  std::size_t right_states = 0;
  std::size_t right_controls = 0;
  // Product state for (q1, q2, phase); phase is always 0 in finite mode.
  StateId state_of(StateId q1, StateId q2, int phase = 0) const {
    return ((q1 * right_states) + q2) * (phase_count) + static_cast<std::size_t>(phase);
  }
  SymbolId control_of(SymbolId c1, SymbolId c2) const { return c1 * right_controls + c2; }
  std::size_t phase_count = 1;
};

// State space Q1 x Q2 (x {0,1} in Buchi mode), controls C1 x C2. In Buchi
// mode the phase flips 0->1 when leaving an F1 state and 1->0 when leaving an
// F2 state; accepting states are the phase-0 copies of F1 x Q2.
ProductResult synchronous_product(const ControlledAutomaton& s1, const ControlledAutomaton& s2,
                                  ProductMode mode = ProductMode::finite);

bool is_deterministic(const ControlledAutomaton& s);

struct ComplementResult {
  ControlledAutomaton automaton;
  std::optional<StateId> sink;  // present if completion added one
};

ComplementResult complement_deterministic(const ControlledAutomaton& s);

}  // namespace csan
