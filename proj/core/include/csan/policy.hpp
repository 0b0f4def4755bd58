#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "csan/automata.hpp"
#include "csan/net.hpp"
#include "csan/pushdown.hpp"
#include "csan/reachability.hpp"

namespace csan {

using MemoryId = std::size_t;
using TapeSymbol = std::size_t;

// Distribution over controls; deterministic outputs are point masses.
struct ControlDist {
  std::vector<std::pair<ControlId, double>> weights;  // sorted by control, positive weights only

  static ControlDist point(ControlId c) { return {{{c, 1.0}}}; }
  static ControlDist from(std::vector<std::pair<ControlId, double>> w);
  bool is_point() const { return weights.size() == 1; }
  double weight(ControlId c) const;
  auto operator<=>(const ControlDist&) const = default;
};

bool approx_equal(const ControlDist& a, const ControlDist& b, double tol = 1e-12);

struct PolicyDims {
  std::size_t states = 0;
  std::size_t activities = 0;
  std::size_t controls = 0;

  static PolicyDims of(const ControlledAutomaton& s) {
    return {s.num_states(), s.activities.size(), s.controls.size()};
  }
};

struct Observation {
  StateId state = 0;
  SymbolId activity = 0;
  auto operator<=>(const Observation&) const = default;
};

struct MemorylessPolicy {
  PolicyDims dims;
  std::vector<ControlDist> output;  // [q]

  static MemorylessPolicy constant(PolicyDims d, ControlId c);
};

struct FiniteMemoryPolicy {
  PolicyDims dims;
  std::size_t memory = 1;
  MemoryId initial = 0;
  std::vector<MemoryId> next;       // [(m * states + q) * activities + a]
  std::vector<ControlDist> output;  // [q * memory + m]
  bool reads_state = true;          // false: output depends on m only

  // Memory stays put and the output is control 0 until set.
  static FiniteMemoryPolicy make(PolicyDims d, std::size_t memory, MemoryId initial = 0);
  MemoryId& next_of(MemoryId m, StateId q, SymbolId a) { return next[(m * dims.states + q) * dims.activities + a]; }
  MemoryId next_of(MemoryId m, StateId q, SymbolId a) const {
    return next[(m * dims.states + q) * dims.activities + a];
  }
  ControlDist& output_of(StateId q, MemoryId m) { return output[q * memory + m]; }
  const ControlDist& output_of(StateId q, MemoryId m) const { return output[q * memory + m]; }
  // Same update for every plant state / same output for every plant state.
  void set_next_all_states(MemoryId m, SymbolId a, MemoryId to);
  void set_output_all_states(MemoryId m, const ControlDist& d);
};

// Stack contents are stored bottom first. Update rules replace the top by a
// word written top first; the empty word pops.
struct StackPolicy {
  PolicyDims dims;
  std::vector<std::string> symbols;
  TapeSymbol bottom = 0;
  std::vector<std::vector<TapeSymbol>> update;  // [(top * states + q) * activities + a]
  std::vector<ControlDist> output;              // [q * |symbols| + top]

  // Every rule keeps the top unchanged, output control 0.
  static StackPolicy make(PolicyDims d, std::vector<std::string> symbols, TapeSymbol bottom = 0);
  std::vector<TapeSymbol>& update_of(TapeSymbol top, StateId q, SymbolId a) {
    return update[(top * dims.states + q) * dims.activities + a];
  }
  const std::vector<TapeSymbol>& update_of(TapeSymbol top, StateId q, SymbolId a) const {
    return update[(top * dims.states + q) * dims.activities + a];
  }
  ControlDist& output_of(StateId q, TapeSymbol top) { return output[q * symbols.size() + top]; }
  const ControlDist& output_of(StateId q, TapeSymbol top) const { return output[q * symbols.size() + top]; }
};

enum class HeadMove { left, right, stay };

struct TapeAction {
  TapeSymbol write = 0;
  HeadMove move = HeadMove::stay;
};

struct TapePolicy {
  PolicyDims dims;
  std::vector<std::string> symbols;
  TapeSymbol blank = 0;
  std::vector<TapeAction> update;   // [(scanned * states + q) * activities + a]
  std::vector<ControlDist> output;  // [q * |symbols| + scanned]

  // Every rule rewrites the scanned symbol in place without moving, output control 0.
  static TapePolicy make(PolicyDims d, std::vector<std::string> symbols, TapeSymbol blank = 0);
  TapeAction& update_of(TapeSymbol s, StateId q, SymbolId a) {
    return update[(s * dims.states + q) * dims.activities + a];
  }
  const TapeAction& update_of(TapeSymbol s, StateId q, SymbolId a) const {
    return update[(s * dims.states + q) * dims.activities + a];
  }
  ControlDist& output_of(StateId q, TapeSymbol s) { return output[q * symbols.size() + s]; }
  const ControlDist& output_of(StateId q, TapeSymbol s) const { return output[q * symbols.size() + s]; }
};

struct HistoryPolicy {
  PolicyDims dims;
  std::function<ControlDist(std::span<const Observation>)> decide;
};

using PolicySpec = std::variant<MemorylessPolicy, FiniteMemoryPolicy, StackPolicy, TapePolicy, HistoryPolicy>;

enum class PolicyClass { memoryless, finite_memory, stack, tape, history };

PolicyClass policy_class(const PolicySpec& spec);
const char* to_string(PolicyClass c);
std::optional<PolicyClass> parse_policy_class(std::string_view s);
const PolicyDims& dims_of(const PolicySpec& spec);
bool is_deterministic(const PolicySpec& spec);

// Throws ModelError on malformed tables (sizes, distributions, stack bottom).
void validate_policy(const PolicySpec& spec);

struct TapeState {
  std::map<long long, TapeSymbol> cells;  // blank cells are not stored
  long long head = 0;
  auto operator<=>(const TapeState&) const = default;
};

using PolicyState =
    std::variant<std::monostate, MemoryId, std::vector<TapeSymbol>, TapeState, std::vector<Observation>>;

struct PolicyStateHash {
  std::size_t operator()(const PolicyState& s) const noexcept;
};

PolicyState initial_policy_state(const PolicySpec& spec);

struct PolicyStep {
  PolicyState state;
  ControlDist output;
};

// The update consumes (q, a) first; the output is then read from q and the
// updated internal state.
PolicyStep policy_step(const PolicySpec& spec, const PolicyState& state, Observation obs);

// Product of a plant with a policy. Node 0.. are (plant state, policy state)
// pairs; edges carry the policy's weight for the chosen control.
struct ClosedLoop {
  struct Edge {
    std::size_t from = 0;
    SymbolId activity = 0;
    ControlId control = 0;
    double weight = 1.0;
    std::size_t to = 0;
  };
  std::vector<StateId> plant_state;
  std::vector<PolicyState> policy_state;
  std::vector<Edge> edges;
  std::vector<std::size_t> initial;
};

// Explicit product; finite for memoryless and finite-memory specs, bounded by
// budget.max_states otherwise. History specs are rejected.
ClosedLoop closed_loop(const ControlledAutomaton& s, const PolicySpec& spec, const ExplorationBudget& budget = {});

// Closed loop of a plant with a stack policy as a pushdown system over
// control locations Q (plus internal helper locations) and stack alphabet Γ.
PushdownSystem closed_loop_pushdown(const ControlledAutomaton& s, const StackPolicy& spec);

struct EquivalenceVerdict {
  bool equivalent = true;
  std::size_t depth = 0;
  std::vector<Observation> history_left;
  std::vector<Observation> history_right;
};

EquivalenceVerdict policies_equivalent_bounded(const ControlledAutomaton& s, const ControlledAutomaton& t,
                                               const Bisimulation& gamma, const PolicySpec& pi, const PolicySpec& rho,
                                               std::size_t depth = 8);

// Memoryless specs as one-state finite-memory specs; finite-memory unchanged.
FiniteMemoryPolicy as_finite_memory(const PolicySpec& spec);

// Re-indexes a memoryless or finite-memory policy onto a plant whose state q'
// behaves like old state state_map[q'].
PolicySpec transport_policy(const PolicySpec& spec, const std::vector<StateId>& state_map, PolicyDims new_dims);

// Policy on a disjoint union that runs pi1 on the left part and pi2 on the right.
FiniteMemoryPolicy union_policy(const UnionResult& u, const PolicySpec& pi1, const PolicySpec& pi2);

// Policy on a synchronous product emitting the pair of component controls.
FiniteMemoryPolicy product_policy(const ProductResult& p, const PolicySpec& pi1, const PolicySpec& pi2);

}  // namespace csan
