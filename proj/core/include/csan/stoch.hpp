#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "csan/policy.hpp"
#include "csan/prob.hpp"

namespace csan {

enum class DistKind { exponential, deterministic, uniform, erlang, weibull };

const char* to_string(DistKind k);

// exponential(rate) deterministic(d) uniform(lo, hi) erlang(k, rate) weibull(shape, scale)
struct DistributionSpec {
  DistKind kind = DistKind::exponential;
  double p1 = 1.0;
  double p2 = 0.0;
  unsigned k = 1;

  static DistributionSpec exponential(double rate);
  static DistributionSpec deterministic(double d);
  static DistributionSpec uniform(double lo, double hi);
  static DistributionSpec erlang(unsigned k, double rate);
  static DistributionSpec weibull(double shape, double scale);

  // Throws DomainError on bad parameters.
  void check() const;
  double mean() const;
  double cdf(double x) const;
  // Inversion sampling; Erlang consumes k uniforms.
  double sample(const std::function<double()>& uniform01) const;
  std::string to_string() const;

  bool operator==(const DistributionSpec&) const = default;
};

// Timing tables keyed by marking pattern and timed activity. Each field is
// resolved on its own by the most specific matching entry that sets it.
struct TimingEntry {
  MarkingPattern pattern;
  ActivityId activity = 0;
  std::optional<DistributionSpec> distribution;
  std::optional<double> rho;          // default 1
  std::optional<bool> reactivation;   // default false
};

struct Csan {
  Cpan cpan;
  std::vector<TimingEntry> timing;
};

// CPA plus F, rho and Pi per (state, activity). Entries for activities not
// enabled in a state are unset.
struct Csa {
  Cpa base;
  std::vector<std::vector<std::optional<DistributionSpec>>> distribution;  // [q][a]
  std::vector<std::vector<double>> rho;
  std::vector<std::vector<bool>> reactivation;

  // a is enabled in q when some P(q,a,c,.) row exists.
  std::vector<std::vector<bool>> enabled() const;
  // Throws ModelError when an enabled pair lacks a distribution or rho < 0.
  void check() const;
};

struct CsaRealization {
  Csa csa;
  std::vector<Marking> markings;
  std::optional<StateId> delta;
};

CsaRealization realize_csa(const Csan& n, const Marking& mu0, const ExplorationBudget& budget = {});

struct TrajectoryEntry {
  double time = 0.0;
  StateId state = 0;
  std::optional<SymbolId> activity;  // completed activity that led here
  std::optional<ControlId> control;  // control chosen at that completion
  std::vector<std::optional<double>> residual;  // per activity, remaining work when active
  double reward = 0.0;                          // running reward at this instant
};

struct Trajectory {
  std::vector<TrajectoryEntry> entries;  // first at t = 0
  double horizon = 0.0;
  double reward = 0.0;  // accumulated over [0, horizon]
};

struct SimOptions {
  double zeno_events_per_unit = 1e6;
  bool record_residuals = true;
};

// Splitmix64-derived seed for an independent substream.
std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t tag, std::uint64_t a, std::uint64_t b);
// 53-bit uniform in [0, 1) from a 64-bit word.
double to_unit(std::uint64_t x);

// Throws DomainError for horizon <= 0, ZenoError on too many events per
// unit time, ModelError when the policy picks a control with no transition.
Trajectory simulate_csa(const Csa& v, const PolicySpec& spec, double horizon, std::uint64_t seed,
                        const RewardStructure* r = nullptr, const SimOptions& opt = {});

// Rate reward integrated over the window plus impulses at completions in (from, to].
double accumulated_reward(const Trajectory& t, const RewardStructure& r, double from, double to);

// Same with continuous discount exp(-beta t).
double discounted_reward(const Trajectory& t, const RewardStructure& r, double beta);

struct Cma {
  Cpa base;
  std::vector<std::vector<double>> sigma;  // [q][a], 0 where undefined
};

// Throws ModelError naming the first non-exponential (q,a).
Cma to_cma(const Csa& v);

Csa csa_of_cma(const Cma& w);
Trajectory simulate_cma(const Cma& w, const PolicySpec& spec, double horizon, std::uint64_t seed,
                        const RewardStructure* r = nullptr, const SimOptions& opt = {});

struct RateTerm {
  StateId from = 0;
  SymbolId activity = 0;
  ControlId control = 0;
  StateId to = 0;
  double rate = 0.0;
};

// Continuous-time MDP kept as activity-resolved rate terms, so that lambda
// and P' are derived and impulse rewards stay exact.
struct Ctmdp {
  std::vector<std::string> states;
  std::vector<std::string> controls;
  std::vector<std::string> activities;
  std::vector<RateTerm> terms;
  std::vector<double> initial;

  std::size_t num_states() const { return states.size(); }
  // [q][c] -> lambda(q,c)
  std::vector<std::vector<double>> exit_rates() const;
  // [q][c] -> merged (target, P'(q,c,target)); empty if lambda = 0.
  std::vector<std::vector<std::vector<std::pair<StateId, double>>>> jump_rows() const;
  // Controls available at q: those with some term from q.
  std::vector<std::vector<bool>> available() const;
  double max_exit_rate() const;
};

// Throws ModelError when a (q,c) has transitions but zero total rate.
Ctmdp ctmdp_of_cma(const Cma& w);

// CSV with columns time,state,activity,control,reward_running; a leading
// rep column is added when more than one trajectory is written.
void write_trajectory_csv(std::ostream& os, const Csa& v, const std::vector<Trajectory>& runs);

}  // namespace csan
