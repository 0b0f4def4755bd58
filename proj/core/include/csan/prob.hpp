#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "csan/automata.hpp"
#include "csan/lang_analysis.hpp"
#include "csan/net.hpp"
#include "csan/policy.hpp"
#include "csan/reachability.hpp"

namespace csan {

// Exact count or wildcard per place. An empty pattern matches everything.
struct MarkingPattern {
  std::vector<std::optional<Nat>> places;

  bool matches(const Marking& m) const;
  std::size_t specificity() const;
  static MarkingPattern any() { return {}; }
  static MarkingPattern exact(const Marking& m);
};

struct WeightEntry {
  MarkingPattern pattern;
  ActivityId activity = 0;
  double weight = 1.0;
};

// Net plus instantaneous-activity weights. The most specific matching entry
// wins (later entries break ties); unmatched activities weigh 1.
struct Cpan {
  Net net;
  std::vector<WeightEntry> weights;

  double weight(const Marking& m, ActivityId a) const;
};

// Throws DomainError if mu is stable, a is not enabled, or all weights are 0.
double instantaneous_choice_prob(const Cpan& l, const Marking& mu, ActivityId a);

struct ProbTransition {
  StateId from = 0;
  SymbolId activity = 0;
  ControlId control = 0;
  StateId to = 0;
  double p = 0.0;
};

struct Cpa {
  std::vector<std::string> states;
  std::vector<std::string> activities;
  std::vector<std::string> controls;
  std::vector<ProbTransition> transitions;
  std::vector<double> initial;  // per state, sums to 1
  std::optional<std::vector<StateId>> accepting;

  std::size_t num_states() const { return states.size(); }
  std::optional<StateId> find_state(std::string_view name) const;
  std::vector<bool> accepting_mask() const;

  // [q][a][c] -> list of (target, probability); empty means absent.
  using Rows = std::vector<std::vector<std::vector<std::vector<std::pair<StateId, double>>>>>;
  Rows rows() const;

  // Sort, merge duplicates, drop zero entries.
  void normalize();

  // Underlying controlled automaton keeping positive-probability edges.
  ControlledAutomaton support() const;
};

// Codes: bad-reference, negative-probability, non-stochastic-row, initial-mass.
ValidationReport validate_cpa(const Cpa& u, double tol = 1e-9);

struct CpaRealization {
  Cpa cpa;
  std::vector<Marking> markings;  // empty for Delta
  std::optional<StateId> delta;
};

// Throws BudgetExceeded on truncation and ModelError for a singular closure system.
CpaRealization realize_cpa(const Cpan& l, const Marking& mu0, const ExplorationBudget& budget = {});

// Closure distribution from one marking: stable markings with their
// absorption probabilities plus the mass of runs that never stabilize.
struct ClosureDistribution {
  std::vector<std::pair<Marking, double>> stable;
  double divergent = 0.0;
};
ClosureDistribution closure_distribution(const Cpan& l, const Marking& mu, const ExplorationBudget& budget = {});

// Coarsest probabilistic bisimulation, as related pairs, or nullopt.
// Throws AlphabetMismatch when activity or control names differ.
std::optional<Bisimulation> prob_bisimulation(const Cpa& u, const Cpa& v, double tol = 1e-9);

// Memoryless or finite-memory specs.
double word_acceptance_probability(const Cpa& u, const PolicySpec& spec, std::span<const SymbolId> word);
bool in_threshold_language(const Cpa& u, const PolicySpec& spec, std::span<const SymbolId> word, double theta);

struct BuchiProbability {
  double probability = 0.0;
  bool almost_sure = false;
  bool positive = false;
  std::size_t chain_states = 0;
  std::size_t bottom_components = 0;
  std::size_t accepting_components = 0;
};

// Closed loop as a Markov chain: from (q,m), every activity a contributes
// sum_c gamma(c) P(q,a,c,.) after the memory update on (q,a). Row mass
// below 1 goes to a rejecting sink; above 1 is a ModelError.
BuchiProbability buchi_acceptance_probability(const Cpa& u, const PolicySpec& spec,
                                              const ExplorationBudget& budget = {});

// Discrete-time MDP. Transitions keep the activity they came from so that
// activity-dependent rewards stay exact; the decision process itself only
// sees P'(q,c,q') = sum_a P(q,a,c,q').
struct Dtmdp {
  std::vector<std::string> states;
  std::vector<std::string> controls;
  std::vector<std::string> activities;
  std::vector<ProbTransition> transitions;
  std::vector<double> initial;

  std::size_t num_states() const { return states.size(); }
  // [q][c] -> merged (target, probability); empty rows mean c unavailable at q.
  std::vector<std::vector<std::vector<std::pair<StateId, double>>>> rows() const;
};

// Throws ModelError naming each (q,c) whose mass differs from 1.
Dtmdp dtmdp_of_cpa(const Cpa& u, double tol = 1e-9);

// Reward tables shared by the discrete and continuous models. nullopt fields
// are wildcards; the most specific matching entry wins, later entries break
// ties, and no match means 0.
struct RateReward {
  std::optional<StateId> state;
  std::optional<ControlId> control;
  double value = 0.0;
};

struct ImpulseReward {
  std::optional<StateId> state;
  std::optional<SymbolId> activity;
  std::optional<ControlId> control;
  std::optional<StateId> target;
  double value = 0.0;
};

struct RewardStructure {
  std::vector<RateReward> rate;
  std::vector<ImpulseReward> impulse;

  // c = nullopt asks for the rate before any control is chosen; only
  // control-wildcard entries match then.
  double rate_of(StateId q, std::optional<ControlId> c) const;
  double impulse_of(StateId q, SymbolId a, ControlId c, StateId to) const;
  bool has_impulses() const;
  double max_rate() const;
  double max_impulse() const;
  // Throws DomainError on negative or non-finite values.
  void check() const;

  static RewardStructure zero() { return {}; }
};

// X(i) = states[i], Z(i) = activities[i], Y(i) = controls[i].
struct DiscreteTrajectory {
  std::vector<StateId> states;
  std::vector<SymbolId> activities;
  std::vector<ControlId> controls;
};

// Sum over i in [from, to) of r'(X(i),Y(i)) + r''(X(i),Z(i),Y(i),X(i+1)).
double discrete_reward(const RewardStructure& r, const DiscreteTrajectory& t, std::size_t from, std::size_t to);

}  // namespace csan
