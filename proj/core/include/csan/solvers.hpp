#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "csan/policy.hpp"
#include "csan/prob.hpp"
#include "csan/stoch.hpp"

namespace csan {

struct SolveConfig {
  double gamma = 0.9;                   // discrete discount in (0,1)
  double beta = 0.1;                    // continuous discount > 0
  double epsilon = 1e-8;                // value tolerance
  std::size_t max_iterations = 1000000;
  std::optional<double> uniformization;  // defaults to 1.05 * max exit rate
  double delta = 0.1;                   // SMDP step
  std::size_t max_augmented_states = 200000;

  // Throws DomainError when a field used by the caller is out of range.
  void check_discrete() const;
  void check_continuous() const;
};

struct ValueFunction {
  std::vector<double> values;
  std::vector<std::optional<ControlId>> policy;  // nullopt where no control is available
  std::size_t iterations = 0;
  double contraction = 0.0;  // largest measured ratio of successive sup-norm changes
  double residual = 0.0;     // last sup-norm change
  bool converged = false;
};

// V <- max_c [r(q,c) + gamma sum P'(q,c,q') V(q')] with r(q,c) the expected
// one-step reward; stops once the change drops below eps (1-gamma) / (2 gamma).
// Ties go to the lowest control index. States without controls are worth 0.
ValueFunction value_iteration_dtmdp(const Dtmdp& d, const RewardStructure& r, const SolveConfig& cfg);

// Undiscounted expected total reward; converges only on models whose runs
// stop collecting reward. `converged` is false when max_iterations ran out.
ValueFunction total_reward_dtmdp(const Dtmdp& d, const RewardStructure& r, const SolveConfig& cfg);

// Exact evaluation by a sparse linear solve per round.
ValueFunction policy_iteration_dtmdp(const Dtmdp& d, const RewardStructure& r, const SolveConfig& cfg);

// Expected one-step reward r'(q,c) + sum_a,q' P(q,a,c,q') r''(q,a,c,q').
std::vector<std::vector<double>> expected_step_reward(const Dtmdp& d, const RewardStructure& r);

struct CtmdpSolution {
  Dtmdp uniformized;  // includes a self-loop activity "tau"
  std::vector<std::vector<double>> step_reward;
  double lambda = 0.0;
  double discount = 0.0;  // Lambda / (Lambda + beta)
  ValueFunction value;
  double value_at_initial = 0.0;
};

// A state without any transition keeps every control at exit rate 0.
CtmdpSolution solve_ctmdp_discounted(const Ctmdp& m, const RewardStructure& r, const SolveConfig& cfg);

struct ReachabilityResult {
  std::vector<double> probability;  // per state
  double lambda = 0.0;
  std::size_t truncation = 0;  // number of Poisson terms kept
};

// Probability of reaching the goal within T under a memoryless policy.
ReachabilityResult time_bounded_reachability(const Ctmdp& m, const std::vector<bool>& goal,
                                             const MemorylessPolicy& policy, double T, const SolveConfig& cfg);

struct SmdpState {
  StateId state = 0;
  std::optional<ControlId> last_control;
  std::vector<long> residual;  // per activity, work in units of delta; -1 when inactive or exponential
  bool operator==(const SmdpState&) const = default;
};

struct SmdpResult {
  std::vector<SmdpState> states;
  ValueFunction value;
  double modulus = 0.0;  // exp(-beta delta)
  double value_at_initial = 0.0;
  // decisions[i][a]: greedy control when activity a completes in states[i]
  std::vector<std::vector<std::optional<ControlId>>> decisions;
};

// Residual-clock augmented discrete-time process with step delta. Throws
// BudgetExceeded above cfg.max_augmented_states.
SmdpResult smdp_discretized_vi(const Csa& v, const RewardStructure& r, const SolveConfig& cfg);

struct MonteCarloOptions {
  std::uint64_t seed = 1;
  std::optional<double> beta;          // discount the reward when set
  std::optional<double> reward_bound;  // required when impulses are present
  std::size_t threads = 0;             // 0: hardware concurrency
  std::size_t max_samples = 10000000;
};

struct MonteCarloResult {
  double mean = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double half_width = 0.0;
  std::size_t samples = 0;
  double reward_bound = 0.0;
};

// Hoeffding sample count ceil(R^2 ln(2/delta) / (2 eps^2)) for reward range [0,R].
std::size_t hoeffding_samples(double range, double eps, double delta);

MonteCarloResult monte_carlo_eval(const Csa& v, const PolicySpec& spec, const RewardStructure& r, double horizon,
                                  double eps, double delta, const MonteCarloOptions& opt = {});

}  // namespace csan
