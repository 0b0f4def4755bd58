#include "csan/solvers.hpp"

#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <thread>
#include <unordered_map>

#include "csan/error.hpp"

namespace csan {

void SolveConfig::check_discrete() const {
  if (!(gamma > 0 && gamma < 1)) throw DomainError("discount gamma must lie in (0,1)");
  if (!(epsilon > 0)) throw DomainError("tolerance must be positive");
}

void SolveConfig::check_continuous() const {
  if (!(beta > 0) || !std::isfinite(beta)) throw DomainError("discount rate beta must be positive");
  if (!(epsilon > 0)) throw DomainError("tolerance must be positive");
  if (uniformization && !(*uniformization > 0)) throw DomainError("uniformization constant must be positive");
}

namespace {

using Row = std::vector<std::pair<StateId, double>>;
using Rows = std::vector<std::vector<Row>>;  // [q][c]

void check_rows(const Rows& rows, const std::vector<std::string>& states, const std::vector<std::string>& controls) {
  for (StateId q = 0; q < rows.size(); ++q)
    for (ControlId c = 0; c < rows[q].size(); ++c) {
      if (rows[q][c].empty()) continue;
      double s = 0;
      for (auto [to, p] : rows[q][c]) s += p;
      if (std::abs(s - 1.0) > 1e-9)
        throw ModelError("row (" + states[q] + "," + controls[c] + ") sums to " + std::to_string(s));
    }
}

// Ratios of successive sup-norm changes are only sampled while the previous
// change is well above round-off in the values.
void note_contraction(ValueFunction& vf, double change, double prev_change) {
  double scale = 1.0;
  for (double v : vf.values) scale = std::max(scale, std::abs(v));
  if (prev_change > 1e-6 * scale) vf.contraction = std::max(vf.contraction, change / prev_change);
}

bool better(double x, double best) { return x > best + 1e-12 * std::max(1.0, std::abs(best)); }

// Generic discounted value iteration over explicit rows and per-(q,c) rewards.
ValueFunction vi_core(const Rows& rows, const std::vector<std::vector<double>>& rew, double gamma, double eps,
                      std::size_t max_iter) {
  const std::size_t n = rows.size();
  ValueFunction vf;
  vf.values.assign(n, 0.0);
  vf.policy.assign(n, std::nullopt);
  const double stop = gamma < 1 ? eps * (1 - gamma) / (2 * gamma) : eps;
  std::vector<double> next(n);
  double prev_change = -1;
  for (std::size_t it = 1; it <= max_iter; ++it) {
    double change = 0;
    for (StateId q = 0; q < n; ++q) {
      double best = 0;
      bool any = false;
      for (ControlId c = 0; c < rows[q].size(); ++c) {
        if (rows[q][c].empty()) continue;
        double x = rew[q][c];
        for (auto [to, p] : rows[q][c]) x += gamma * p * vf.values[to];
        if (!any || x > best) {
          best = x;
          any = true;
        }
      }
      next[q] = any ? best : 0.0;
      change = std::max(change, std::abs(next[q] - vf.values[q]));
    }
    vf.values.swap(next);
    note_contraction(vf, change, prev_change);
    prev_change = change;
    vf.iterations = it;
    vf.residual = change;
    if (change < stop) {
      vf.converged = true;
      break;
    }
  }
  for (StateId q = 0; q < n; ++q) {
    double best = 0;
    for (ControlId c = 0; c < rows[q].size(); ++c) {
      if (rows[q][c].empty()) continue;
      double x = rew[q][c];
      for (auto [to, p] : rows[q][c]) x += gamma * p * vf.values[to];
      if (!vf.policy[q] || better(x, best)) {
        best = x;
        vf.policy[q] = c;
      }
    }
  }
  return vf;
}

}  // namespace

std::vector<std::vector<double>> expected_step_reward(const Dtmdp& d, const RewardStructure& r) {
  std::vector<std::vector<double>> rew(d.num_states(), std::vector<double>(d.controls.size(), 0.0));
  std::vector<std::vector<bool>> avail(d.num_states(), std::vector<bool>(d.controls.size(), false));
  for (const auto& t : d.transitions) {
    if (t.p <= 0) continue;
    avail[t.from][t.control] = true;
    rew[t.from][t.control] += t.p * r.impulse_of(t.from, t.activity, t.control, t.to);
  }
  for (StateId q = 0; q < d.num_states(); ++q)
    for (ControlId c = 0; c < d.controls.size(); ++c)
      if (avail[q][c]) rew[q][c] += r.rate_of(q, c);
  return rew;
}

ValueFunction value_iteration_dtmdp(const Dtmdp& d, const RewardStructure& r, const SolveConfig& cfg) {
  cfg.check_discrete();
  r.check();
  auto rows = d.rows();
  check_rows(rows, d.states, d.controls);
  return vi_core(rows, expected_step_reward(d, r), cfg.gamma, cfg.epsilon, cfg.max_iterations);
}

ValueFunction total_reward_dtmdp(const Dtmdp& d, const RewardStructure& r, const SolveConfig& cfg) {
  if (!(cfg.epsilon > 0)) throw DomainError("tolerance must be positive");
  r.check();
  auto rows = d.rows();
  check_rows(rows, d.states, d.controls);
  return vi_core(rows, expected_step_reward(d, r), 1.0, cfg.epsilon, cfg.max_iterations);
}

ValueFunction policy_iteration_dtmdp(const Dtmdp& d, const RewardStructure& r, const SolveConfig& cfg) {
  cfg.check_discrete();
  r.check();
  auto rows = d.rows();
  check_rows(rows, d.states, d.controls);
  auto rew = expected_step_reward(d, r);
  const std::size_t n = d.num_states();
  ValueFunction vf;
  vf.policy.assign(n, std::nullopt);
  for (StateId q = 0; q < n; ++q)
    for (ControlId c = 0; c < d.controls.size() && !vf.policy[q]; ++c)
      if (!rows[q][c].empty()) vf.policy[q] = c;
  vf.values.assign(n, 0.0);
  for (std::size_t it = 1; it <= cfg.max_iterations; ++it) {
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    for (StateId q = 0; q < n; ++q) {
      trip.emplace_back(q, q, 1.0);
      if (!vf.policy[q]) continue;
      ControlId c = *vf.policy[q];
      b[q] = rew[q][c];
      for (auto [to, p] : rows[q][c]) trip.emplace_back(q, to, -cfg.gamma * p);
    }
    Eigen::SparseMatrix<double> A(n, n);
    A.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success) throw ModelError("singular policy evaluation system");
    Eigen::VectorXd v = lu.solve(b);
    double change = 0;
    for (StateId q = 0; q < n; ++q) {
      change = std::max(change, std::abs(v[q] - vf.values[q]));
      vf.values[q] = v[q];
    }
    vf.iterations = it;
    vf.residual = change;
    bool stable = true;
    for (StateId q = 0; q < n; ++q) {
      if (!vf.policy[q]) continue;
      auto qval = [&](ControlId c) {
        double x = rew[q][c];
        for (auto [to, p] : rows[q][c]) x += cfg.gamma * p * vf.values[to];
        return x;
      };
      double cur = qval(*vf.policy[q]);
      ControlId pick = *vf.policy[q];
      double best = cur;
      for (ControlId c = 0; c < d.controls.size(); ++c) {
        if (rows[q][c].empty() || c == *vf.policy[q]) continue;
        double x = qval(c);
        if (better(x, best)) {
          best = x;
          pick = c;
        }
      }
      if (pick != *vf.policy[q]) {
        vf.policy[q] = pick;
        stable = false;
      }
    }
    if (stable) {
      vf.converged = true;
      break;
    }
  }
  // Report the lowest-index maximizer, as value iteration does.
  for (StateId q = 0; q < n; ++q) {
    if (!vf.policy[q]) continue;
    double best = 0;
    std::optional<ControlId> pick;
    for (ControlId c = 0; c < d.controls.size(); ++c) {
      if (rows[q][c].empty()) continue;
      double x = rew[q][c];
      for (auto [to, p] : rows[q][c]) x += cfg.gamma * p * vf.values[to];
      if (!pick || better(x, best)) {
        best = x;
        pick = c;
      }
    }
    vf.policy[q] = pick;
  }
  return vf;
}

CtmdpSolution solve_ctmdp_discounted(const Ctmdp& m, const RewardStructure& r, const SolveConfig& cfg) {
  cfg.check_continuous();
  r.check();
  const std::size_t n = m.num_states(), C = m.controls.size();
  if (C == 0) throw ModelError("CTMDP has no controls");
  auto rates = m.exit_rates();
  auto avail = m.available();
  double maxrate = m.max_exit_rate();
  double L = cfg.uniformization ? *cfg.uniformization : (maxrate > 0 ? 1.05 * maxrate : 1.0);
  if (L < maxrate * (1 - 1e-12))
    throw DomainError("uniformization constant " + std::to_string(L) + " is below the largest exit rate " +
                      std::to_string(maxrate));
  CtmdpSolution sol;
  sol.lambda = L;
  sol.discount = L / (L + cfg.beta);
  Dtmdp& u = sol.uniformized;
  u.states = m.states;
  u.controls = m.controls;
  u.activities = m.activities;
  u.activities.push_back("tau");
  const SymbolId tau = u.activities.size() - 1;
  u.initial = m.initial;
  sol.step_reward.assign(n, std::vector<double>(C, 0.0));
  for (StateId q = 0; q < n; ++q) {
    bool any = false;
    for (ControlId c = 0; c < C; ++c) any = any || avail[q][c];
    for (ControlId c = 0; c < C; ++c) {
      if (any && !avail[q][c]) continue;
      double stay = (L - rates[q][c]) / L;
      if (stay > 0) u.transitions.push_back({q, tau, c, q, stay});
      sol.step_reward[q][c] = r.rate_of(q, c);
    }
  }
  for (const auto& t : m.terms) {
    if (t.rate <= 0) continue;
    u.transitions.push_back({t.from, t.activity, t.control, t.to, t.rate / L});
    sol.step_reward[t.from][t.control] += t.rate * r.impulse_of(t.from, t.activity, t.control, t.to);
  }
  for (auto& row : sol.step_reward)
    for (double& x : row) x /= (L + cfg.beta);
  auto rows = u.rows();
  sol.value = vi_core(rows, sol.step_reward, sol.discount, cfg.epsilon, cfg.max_iterations);
  for (StateId q = 0; q < n && q < m.initial.size(); ++q) sol.value_at_initial += m.initial[q] * sol.value.values[q];
  return sol;
}

ReachabilityResult time_bounded_reachability(const Ctmdp& m, const std::vector<bool>& goal,
                                             const MemorylessPolicy& policy, double T, const SolveConfig& cfg) {
  if (!(T >= 0) || !std::isfinite(T)) throw DomainError("time bound must be nonnegative");
  if (!(cfg.epsilon > 0)) throw DomainError("tolerance must be positive");
  const std::size_t n = m.num_states();
  if (goal.size() != n) throw DomainError("goal mask size differs from the state count");
  if (policy.output.size() != n) throw DomainError("policy does not cover every state");
  // Generator rows under the policy.
  std::vector<std::map<StateId, double>> gen(n);
  std::vector<double> exit(n, 0.0);
  for (const auto& t : m.terms) {
    if (goal[t.from] || t.rate <= 0) continue;
    double w = policy.output[t.from].weight(t.control);
    if (w <= 0) continue;
    gen[t.from][t.to] += w * t.rate;
    exit[t.from] += w * t.rate;
  }
  double maxrate = 0;
  for (double x : exit) maxrate = std::max(maxrate, x);
  double L = cfg.uniformization ? *cfg.uniformization : (maxrate > 0 ? 1.05 * maxrate : 1.0);
  if (L < maxrate * (1 - 1e-12)) throw DomainError("uniformization constant is below the largest exit rate");

  ReachabilityResult res;
  res.lambda = L;
  std::vector<double> x(n), y(n), acc(n, 0.0);
  for (StateId q = 0; q < n; ++q) x[q] = goal[q] ? 1.0 : 0.0;
  const double lt = L * T;
  if (lt == 0) {
    res.probability = x;
    res.truncation = 1;
    return res;
  }
  const std::size_t cap = static_cast<std::size_t>(lt + 20 * std::sqrt(lt) + 200);
  double mass = 0;
  for (std::size_t k = 0; k <= cap; ++k) {
    double w = std::exp(-lt + k * std::log(lt) - std::lgamma(k + 1.0));
    for (StateId q = 0; q < n; ++q) acc[q] += w * x[q];
    mass += w;
    res.truncation = k + 1;
    if (1.0 - mass < cfg.epsilon && k >= lt) break;
    // x <- P x with P = I + Q / L.
    for (StateId q = 0; q < n; ++q) {
      if (goal[q]) {
        y[q] = 1.0;
        continue;
      }
      double s = (1.0 - exit[q] / L) * x[q];
      for (auto [to, rate] : gen[q]) s += rate / L * x[to];
      y[q] = s;
    }
    x.swap(y);
  }
  for (StateId q = 0; q < n; ++q) acc[q] = goal[q] ? 1.0 : std::clamp(acc[q], 0.0, 1.0);
  res.probability = std::move(acc);
  return res;
}

namespace {

struct SmdpStateHash {
  std::size_t operator()(const SmdpState& s) const {
    std::size_t h = s.state * 1315423911u + (s.last_control ? *s.last_control + 1 : 0);
    for (long r : s.residual) h = h * 1000003u + static_cast<std::size_t>(r + 2);
    return h;
  }
};

// Grid distribution of a residual in units of delta: P(k) = F(k d) - F((k-1) d).
std::vector<std::pair<long, double>> grid(const DistributionSpec& f, double d) {
  std::vector<std::pair<long, double>> out;
  double f0 = f.cdf(0.0);
  if (f.kind == DistKind::deterministic) {
    long k = static_cast<long>(std::ceil(f.p1 / d - 1e-9));
    return {{std::max(0L, k), 1.0}};
  }
  if (f0 > 0) out.push_back({0, f0});
  double prev = f0;
  const long cap = 1000000;
  for (long k = 1; k <= cap; ++k) {
    double cur = f.cdf(k * d);
    if (1.0 - cur < 1e-12 || k == cap) {
      out.push_back({k, 1.0 - prev});
      break;
    }
    if (cur > prev) out.push_back({k, cur - prev});
    prev = cur;
  }
  return out;
}

}  // namespace

SmdpResult smdp_discretized_vi(const Csa& v, const RewardStructure& r, const SolveConfig& cfg) {
  cfg.check_continuous();
  if (!(cfg.delta > 0)) throw DomainError("discretization step must be positive");
  r.check();
  v.check();
  const Cpa& u = v.base;
  const std::size_t A = u.activities.size(), C = u.controls.size();
  const double D = cfg.delta;
  const double disc = std::exp(-cfg.beta * D);
  const double rate_factor = -std::expm1(-cfg.beta * D) / cfg.beta;
  auto rows = u.rows();
  auto en = v.enabled();
  auto is_exp = [&](StateId q, SymbolId a) {
    return v.distribution[q][a] && v.distribution[q][a]->kind == DistKind::exponential;
  };

  SmdpResult res;
  res.modulus = disc;
  std::unordered_map<SmdpState, std::size_t, SmdpStateHash> index;
  auto intern = [&](SmdpState s) {
    auto [it, fresh] = index.emplace(s, res.states.size());
    if (fresh) {
      if (res.states.size() >= cfg.max_augmented_states)
        throw BudgetExceeded("augmented state space exceeded " + std::to_string(cfg.max_augmented_states),
                             res.states.size());
      res.states.push_back(std::move(s));
    }
    return it->second;
  };

  // Entering q' with residual vector r0 after activity `done` (if any) and control c.
  auto enter = [&](StateId q, std::vector<long> r0, std::optional<SymbolId> done, std::optional<ControlId> c) {
    std::vector<std::pair<SmdpState, double>> out;
    std::vector<SymbolId> resample;
    for (SymbolId a = 0; a < A; ++a) {
      if (done && *done == a) r0[a] = -1;
      if (!en[q][a] || is_exp(q, a)) continue;
      if (r0[a] < 0 || v.reactivation[q][a]) resample.push_back(a);
    }
    // Exponential clocks carry no residual.
    for (SymbolId a = 0; a < A; ++a)
      if (en[q][a] && is_exp(q, a)) r0[a] = -1;
    std::vector<std::pair<std::vector<long>, double>> acc{{r0, 1.0}};
    for (SymbolId a : resample) {
      auto g = grid(*v.distribution[q][a], D);
      std::vector<std::pair<std::vector<long>, double>> nx;
      for (auto& [vec, p] : acc)
        for (auto [k, pk] : g) {
          auto w = vec;
          w[a] = k;
          nx.push_back({std::move(w), p * pk});
        }
      acc = std::move(nx);
    }
    for (auto& [vec, p] : acc) out.push_back({SmdpState{q, c, std::move(vec)}, p});
    return out;
  };

  struct Branch {
    double p;
    std::size_t to;
  };
  struct Completion {
    SymbolId a;
    double p;
    std::vector<long> residual;  // clocks after the step, before entering the next state
  };
  struct Node {
    double rate_reward = 0;                 // r' accrued during the step
    std::vector<Branch> idle;               // no completion
    std::vector<Completion> completions;    // one activity completes
    // per completion, per control: impulse-weighted branches
    std::vector<std::vector<std::vector<std::pair<double, std::size_t>>>> targets;
    std::vector<std::vector<double>> impulse;  // [completion][c] expected impulse
    std::vector<std::vector<bool>> allowed;    // [completion][c]
  };
  std::vector<Node> nodes;

  std::vector<std::pair<std::size_t, double>> init;
  for (StateId q = 0; q < u.num_states() && q < u.initial.size(); ++q) {
    if (u.initial[q] <= 0) continue;
    for (auto& [s, p] : enter(q, std::vector<long>(A, -1), std::nullopt, std::nullopt))
      init.push_back({intern(std::move(s)), u.initial[q] * p});
  }

  for (std::size_t i = 0; i < res.states.size(); ++i) {
    SmdpState s = res.states[i];
    Node nd;
    const StateId q = s.state;
    nd.rate_reward = r.rate_of(q, s.last_control) * rate_factor;
    // Exponential race within the step.
    double h = 0;
    for (SymbolId a = 0; a < A; ++a)
      if (en[q][a] && is_exp(q, a)) h += v.rho[q][a] * v.distribution[q][a]->p1;
    double p_exp = h > 0 ? -std::expm1(-h * D) : 0.0;

    // Consumption by non-exponential enabled clocks, with stochastic rounding.
    std::vector<std::pair<std::vector<long>, double>> after{{s.residual, 1.0}};
    for (SymbolId a = 0; a < A; ++a) {
      if (!en[q][a] || is_exp(q, a) || s.residual[a] < 0 || !(v.rho[q][a] > 0)) continue;
      double rho = v.rho[q][a];
      long lo = static_cast<long>(std::floor(rho));
      double frac = rho - lo;
      std::vector<std::pair<std::vector<long>, double>> nx;
      for (auto& [vec, p] : after) {
        for (int bump = 0; bump <= 1; ++bump) {
          double pb = bump ? frac : 1.0 - frac;
          if (pb <= 0) continue;
          auto w = vec;
          w[a] = vec[a] - (lo + bump);
          nx.push_back({std::move(w), p * pb});
        }
      }
      after = std::move(nx);
    }
    // Deterministic part: lowest-index clock at or below zero completes.
    std::map<std::vector<long>, double> idle_vecs;
    std::map<std::pair<SymbolId, std::vector<long>>, double> comp;
    for (auto& [vec, p] : after) {
      std::optional<SymbolId> hit;
      for (SymbolId a = 0; a < A; ++a)
        if (en[q][a] && !is_exp(q, a) && s.residual[a] >= 0 && v.rho[q][a] > 0 && vec[a] <= 0) {
          hit = a;
          break;
        }
      // Clocks that ran out keep 0 and complete on a later step.
      auto clamp = vec;
      for (SymbolId a = 0; a < A; ++a)
        if (s.residual[a] >= 0 && clamp[a] < 0) clamp[a] = 0;
      if (p_exp > 0) {
        for (SymbolId a = 0; a < A; ++a) {
          if (!en[q][a] || !is_exp(q, a)) continue;
          double share = v.rho[q][a] * v.distribution[q][a]->p1 / h;
          if (share > 0) comp[{a, clamp}] += p * p_exp * share;
        }
      }
      double rest = p * (1.0 - p_exp);
      if (rest <= 0) continue;
      if (hit)
        comp[{*hit, clamp}] += rest;
      else
        idle_vecs[clamp] += rest;
    }
    for (auto& [vec, p] : idle_vecs) nd.idle.push_back({p, intern(SmdpState{q, s.last_control, vec})});
    for (auto& [key, p] : comp) nd.completions.push_back({key.first, p, key.second});
    nd.targets.resize(nd.completions.size(), std::vector<std::vector<std::pair<double, std::size_t>>>(C));
    nd.impulse.assign(nd.completions.size(), std::vector<double>(C, 0.0));
    nd.allowed.assign(nd.completions.size(), std::vector<bool>(C, false));
    for (std::size_t k = 0; k < nd.completions.size(); ++k) {
      const auto& cp = nd.completions[k];
      for (ControlId c = 0; c < C; ++c) {
        const auto& row = rows[q][cp.a][c];
        if (row.empty()) continue;
        nd.allowed[k][c] = true;
        for (auto [to, pt] : row) {
          nd.impulse[k][c] += pt * r.impulse_of(q, cp.a, c, to);
          for (auto& [ns, pe] : enter(to, cp.residual, cp.a, c))
            nd.targets[k][c].push_back({pt * pe, intern(std::move(ns))});
        }
      }
    }
    nodes.push_back(std::move(nd));
  }

  const std::size_t n = res.states.size();
  ValueFunction& vf = res.value;
  vf.values.assign(n, 0.0);
  vf.policy.assign(n, std::nullopt);
  res.decisions.assign(n, std::vector<std::optional<ControlId>>(A));
  const double stop = cfg.epsilon * (1 - disc) / (2 * disc);
  std::vector<double> next(n);
  auto completion_value = [&](const Node& nd, std::size_t k, const std::vector<double>& V,
                              std::optional<ControlId>* pick) {
    double best = 0;
    bool any = false;
    for (ControlId c = 0; c < C; ++c) {
      if (!nd.allowed[k][c]) continue;
      double x = nd.impulse[k][c];
      for (auto [p, to] : nd.targets[k][c]) x += p * V[to];
      if (!any || better(x, best)) {
        best = x;
        any = true;
        if (pick) *pick = c;
      }
    }
    return any ? best : 0.0;
  };
  double prev_change = -1;
  for (std::size_t it = 1; it <= cfg.max_iterations; ++it) {
    double change = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const Node& nd = nodes[i];
      double x = 0;
      for (auto [p, to] : nd.idle) x += p * vf.values[to];
      for (std::size_t k = 0; k < nd.completions.size(); ++k)
        x += nd.completions[k].p * completion_value(nd, k, vf.values, nullptr);
      next[i] = nd.rate_reward + disc * x;
      change = std::max(change, std::abs(next[i] - vf.values[i]));
    }
    vf.values.swap(next);
    note_contraction(vf, change, prev_change);
    prev_change = change;
    vf.iterations = it;
    vf.residual = change;
    if (change < stop) {
      vf.converged = true;
      break;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const Node& nd = nodes[i];
    for (std::size_t k = 0; k < nd.completions.size(); ++k) {
      std::optional<ControlId> pick;
      completion_value(nd, k, vf.values, &pick);
      res.decisions[i][nd.completions[k].a] = pick;
      if (!vf.policy[i]) vf.policy[i] = pick;
    }
  }
  for (auto [i, p] : init) res.value_at_initial += p * vf.values[i];
  return res;
}

std::size_t hoeffding_samples(double range, double eps, double delta) {
  if (!(eps > 0)) throw DomainError("epsilon must be positive");
  if (!(delta > 0 && delta < 1)) throw DomainError("delta must lie in (0,1)");
  if (!(range >= 0) || !std::isfinite(range)) throw DomainError("reward range must be finite");
  if (range == 0) return 1;
  double n = std::ceil(range * range * std::log(2.0 / delta) / (2.0 * eps * eps));
  return static_cast<std::size_t>(std::max(1.0, n));
}

MonteCarloResult monte_carlo_eval(const Csa& v, const PolicySpec& spec, const RewardStructure& r, double horizon,
                                  double eps, double delta, const MonteCarloOptions& opt) {
  if (!(horizon > 0) || !std::isfinite(horizon)) throw DomainError("horizon must be positive and finite");
  r.check();
  double bound;
  if (opt.reward_bound) {
    bound = *opt.reward_bound;
  } else if (r.has_impulses()) {
    throw DomainError("unbounded reward range: impulse rewards need an explicit reward bound");
  } else {
    double span = opt.beta ? -std::expm1(-*opt.beta * horizon) / *opt.beta : horizon;
    bound = r.max_rate() * span;
  }
  std::size_t n = hoeffding_samples(bound, eps, delta);
  if (n > opt.max_samples)
    throw BudgetExceeded("Hoeffding bound needs " + std::to_string(n) + " samples, above max_samples=" +
                             std::to_string(opt.max_samples),
                         n);
  std::vector<double> vals(n, 0.0);
  std::size_t threads = opt.threads ? opt.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, n);
  std::vector<std::exception_ptr> errors(threads);
  auto worker = [&](std::size_t k) {
    try {
      SimOptions so;
      so.record_residuals = false;
      for (std::size_t i = k; i < n; i += threads) {
        Trajectory t = simulate_csa(v, spec, horizon, substream_seed(opt.seed, 5, i, 0), &r, so);
        vals[i] = opt.beta ? discounted_reward(t, r, *opt.beta) : t.reward;
      }
    } catch (...) {
      errors[k] = std::current_exception();
    }
  };
  if (threads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < threads; ++k) pool.emplace_back(worker, k);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  double sum = 0;
  for (double x : vals) sum += x;  // fixed order, independent of thread count
  MonteCarloResult res;
  res.samples = n;
  res.reward_bound = bound;
  res.mean = sum / static_cast<double>(n);
  res.half_width = bound == 0 ? 0.0 : bound * std::sqrt(std::log(2.0 / delta) / (2.0 * static_cast<double>(n)));
  res.lower = std::max(0.0, res.mean - res.half_width);
  res.upper = std::min(bound, res.mean + res.half_width);
  return res;
}

}  // namespace csan
