#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "csan/automata.hpp"
#include "csan/policy.hpp"

namespace csan {

struct UltimatelyPeriodicWord {
  std::vector<SymbolId> prefix;
  std::vector<SymbolId> period;  // nonempty
};

bool accepts_finite(const ControlledAutomaton& s, const PolicySpec& spec, std::span<const SymbolId> word);

// Memoryless or finite-memory policies only; probabilistic outputs count
// through their support.
bool accepts_ultimately_periodic(const ControlledBuchiAutomaton& s, const PolicySpec& spec,
                                 const UltimatelyPeriodicWord& w);

enum class Verdict { empty, nonempty, unknown };
const char* to_string(Verdict v);

// A run: states[i] --word[i]/controls[i]--> states[i+1]. For lassos the
// cycle part starts where the stem ends and returns there.
struct Witness {
  std::vector<StateId> states;
  std::vector<SymbolId> word;
  std::vector<ControlId> controls;
  std::vector<StateId> cycle_states;
  std::vector<SymbolId> cycle_word;
  std::vector<ControlId> cycle_controls;
  std::optional<PolicySpec> policy;
};

struct EmptinessResult {
  Verdict verdict = Verdict::unknown;
  std::optional<Witness> witness;
  std::optional<std::size_t> bound;  // set for bounded semi-decisions
  std::string note;
};

struct EmptinessOptions {
  std::size_t bound = 64;
  const StackPolicy* stack_policy = nullptr;  // required for the stack class
  ExplorationBudget budget{};
};

EmptinessResult emptiness_finite(const ControlledAutomaton& s, PolicyClass cls, const EmptinessOptions& opt = {});
EmptinessResult emptiness_buchi(const ControlledBuchiAutomaton& s, PolicyClass cls, const EmptinessOptions& opt = {});

// Nested depth-first search on an explicit graph. out[v] lists (edge id, target).
struct Lasso {
  std::size_t root = 0;
  std::size_t anchor = 0;  // accepting node the cycle returns to
  std::vector<std::size_t> stem_edges;
  std::vector<std::size_t> cycle_edges;
};

std::optional<Lasso> find_accepting_lasso(const std::vector<std::vector<std::pair<std::size_t, std::size_t>>>& out,
                                          const std::vector<std::size_t>& roots, const std::vector<bool>& accepting);

// Replays a stack-policy lasso witness for the given number of periods and
// checks that each period returns to the same location and top symbol after
// visiting F.
bool verify_stack_lasso(const ControlledBuchiAutomaton& s, const StackPolicy& spec, const Witness& w,
                        std::size_t periods = 3);

}  // namespace csan
