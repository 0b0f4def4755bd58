#include "csan/prob.hpp"

#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <map>
#include <set>
#include <unordered_map>

#include "csan/error.hpp"

namespace csan {

bool MarkingPattern::matches(const Marking& m) const {
  if (places.empty()) return true;
  if (places.size() != m.size()) return false;
  for (std::size_t i = 0; i < m.size(); ++i)
    if (places[i] && *places[i] != m[i]) return false;
  return true;
}

std::size_t MarkingPattern::specificity() const {
  return static_cast<std::size_t>(std::count_if(places.begin(), places.end(), [](auto& x) { return x.has_value(); }));
}

MarkingPattern MarkingPattern::exact(const Marking& m) {
  MarkingPattern p;
  for (Nat x : m) p.places.emplace_back(x);
  return p;
}

double Cpan::weight(const Marking& m, ActivityId a) const {
  const WeightEntry* best = nullptr;
  for (const auto& e : weights)
    if (e.activity == a && e.pattern.matches(m) && (!best || e.pattern.specificity() >= best->pattern.specificity()))
      best = &e;
  return best ? best->weight : 1.0;
}

double instantaneous_choice_prob(const Cpan& l, const Marking& mu, ActivityId a) {
  EnabledSet en = enabled_activities(l.net, mu);
  if (en.stable) throw DomainError("marking " + to_string(mu) + " is stable");
  if (std::find(en.instantaneous.begin(), en.instantaneous.end(), a) == en.instantaneous.end())
    throw DomainError("activity " + l.net.activity(a).name + " is not enabled in " + to_string(mu));
  double total = 0.0;
  for (ActivityId b : en.instantaneous) total += l.weight(mu, b);
  if (!(total > 0.0)) throw DomainError("all enabled instantaneous weights are zero in " + to_string(mu));
  return l.weight(mu, a) / total;
}

std::optional<StateId> Cpa::find_state(std::string_view name) const {
  for (StateId i = 0; i < states.size(); ++i)
    if (states[i] == name) return i;
  return std::nullopt;
}

std::vector<bool> Cpa::accepting_mask() const {
  std::vector<bool> f(states.size(), false);
  if (accepting)
    for (StateId q : *accepting)
      if (q < f.size()) f[q] = true;
  return f;
}

Cpa::Rows Cpa::rows() const {
  Rows r(states.size(), std::vector<std::vector<std::vector<std::pair<StateId, double>>>>(
                            activities.size(), std::vector<std::vector<std::pair<StateId, double>>>(controls.size())));
  for (const auto& t : transitions) r[t.from][t.activity][t.control].push_back({t.to, t.p});
  return r;
}

void Cpa::normalize() {
  std::map<std::tuple<StateId, SymbolId, ControlId, StateId>, double> merged;
  for (const auto& t : transitions) merged[{t.from, t.activity, t.control, t.to}] += t.p;
  transitions.clear();
  for (const auto& [k, p] : merged)
    if (p != 0.0) transitions.push_back({std::get<0>(k), std::get<1>(k), std::get<2>(k), std::get<3>(k), p});
  if (accepting) {
    std::sort(accepting->begin(), accepting->end());
    accepting->erase(std::unique(accepting->begin(), accepting->end()), accepting->end());
  }
}

ControlledAutomaton Cpa::support() const {
  ControlledAutomaton s;
  s.states = states;
  s.activities = activities;
  s.controls = controls;
  for (const auto& t : transitions)
    if (t.p > 0) s.transitions.push_back({t.from, t.activity, t.control, t.to});
  for (StateId q = 0; q < initial.size(); ++q)
    if (initial[q] > 0) s.initial.push_back(q);
  s.accepting = accepting;
  s.normalize();
  return s;
}

ValidationReport validate_cpa(const Cpa& u, double tol) {
  ValidationReport rep;
  auto add = [&](const char* code, std::string msg) { rep.violations.push_back({code, std::move(msg)}); };
  const std::size_t n = u.num_states();
  bool refs_ok = true;
  for (const auto& t : u.transitions) {
    if (t.from >= n || t.to >= n || t.activity >= u.activities.size() || t.control >= u.controls.size()) {
      add("bad-reference", "transition refers to an undeclared state, activity or control");
      refs_ok = false;
    } else if (!(t.p >= 0.0) || !std::isfinite(t.p)) {
      add("negative-probability", "P(" + u.states[t.from] + "," + u.activities[t.activity] + "," +
                                      u.controls[t.control] + "," + u.states[t.to] + ") is not a probability");
    }
  }
  if (u.accepting)
    for (StateId q : *u.accepting)
      if (q >= n) add("bad-reference", "accepting state index out of range");
  if (u.initial.size() != n) {
    add("initial-mass", "initial distribution has " + std::to_string(u.initial.size()) + " entries for " +
                            std::to_string(n) + " states");
  } else {
    double s = 0;
    for (double x : u.initial) {
      if (!(x >= 0.0)) add("negative-probability", "negative initial mass");
      s += x;
    }
    if (std::abs(s - 1.0) > tol) add("initial-mass", "initial distribution sums to " + std::to_string(s));
  }
  if (!refs_ok) return rep;
  std::map<std::tuple<StateId, SymbolId, ControlId>, double> mass;
  for (const auto& t : u.transitions) mass[{t.from, t.activity, t.control}] += t.p;
  for (const auto& [k, s] : mass)
    if (s > 0 && std::abs(s - 1.0) > tol) {
      auto [q, a, c] = k;
      add("non-stochastic-row", "row (" + u.states[q] + "," + u.activities[a] + "," + u.controls[c] + ") sums to " +
                                    std::to_string(s));
    }
  return rep;
}

ClosureDistribution closure_distribution(const Cpan& l, const Marking& mu, const ExplorationBudget& budget) {
  ClosureGraph g = explore_closure(l.net, mu, budget);
  if (g.truncated)
    throw BudgetExceeded("instantaneous closure of " + to_string(mu) + " exceeded max_closure_steps=" +
                             std::to_string(budget.max_closure_steps),
                         g.nodes.size());
  ClosureDistribution out;
  const std::size_t n = g.nodes.size();
  if (g.stable[0]) {
    out.stable.push_back({g.nodes[0], 1.0});
    return out;
  }
  struct WEdge {
    std::size_t to;
    double p;
  };
  std::vector<std::vector<WEdge>> adj(n);
  std::vector<std::vector<std::size_t>> rev(n);
  for (const auto& e : g.edges) {
    double p = instantaneous_choice_prob(l, g.nodes[e.from], e.activity);
    if (p <= 0) continue;
    adj[e.from].push_back({e.to, p});
    rev[e.to].push_back(e.from);
  }
  // Nodes that can reach a stable node with positive probability.
  std::vector<bool> live(n, false);
  std::deque<std::size_t> dq;
  for (std::size_t i = 0; i < n; ++i)
    if (g.stable[i]) {
      live[i] = true;
      dq.push_back(i);
    }
  while (!dq.empty()) {
    std::size_t v = dq.front();
    dq.pop_front();
    for (std::size_t u : rev[v])
      if (!live[u]) {
        live[u] = true;
        dq.push_back(u);
      }
  }
  if (!live[0]) {
    out.divergent = 1.0;
    return out;
  }
  std::vector<std::size_t> tidx(n, static_cast<std::size_t>(-1)), sidx(n, static_cast<std::size_t>(-1));
  std::vector<std::size_t> transient, stable;
  for (std::size_t i = 0; i < n; ++i) {
    if (g.stable[i]) {
      sidx[i] = stable.size();
      stable.push_back(i);
    } else if (live[i]) {
      tidx[i] = transient.size();
      transient.push_back(i);
    }
  }
  const std::size_t T = transient.size(), S = stable.size();
  // Columns 0..S-1: stable targets; column S: the non-escaping region.
  std::vector<Eigen::Triplet<double>> a_trip, b_trip;
  for (std::size_t k = 0; k < T; ++k) {
    a_trip.emplace_back(k, k, 1.0);
    for (const auto& e : adj[transient[k]]) {
      if (tidx[e.to] != static_cast<std::size_t>(-1))
        a_trip.emplace_back(k, tidx[e.to], -e.p);
      else if (sidx[e.to] != static_cast<std::size_t>(-1))
        b_trip.emplace_back(k, sidx[e.to], e.p);
      else
        b_trip.emplace_back(k, S, e.p);
    }
  }
  Eigen::SparseMatrix<double> A(T, T), B(T, S + 1);
  A.setFromTriplets(a_trip.begin(), a_trip.end());
  B.setFromTriplets(b_trip.begin(), b_trip.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success)
    throw ModelError("singular closure system for the component of " + to_string(mu) + " (" + std::to_string(T) +
                     " unstable markings)");
  Eigen::MatrixXd X = lu.solve(Eigen::MatrixXd(B));
  if (lu.info() != Eigen::Success)
    throw ModelError("closure system for " + to_string(mu) + " could not be solved");
  std::size_t row = tidx[0];
  for (std::size_t s = 0; s < S; ++s) {
    double p = X(row, s);
    if (p > 1e-15) out.stable.push_back({g.nodes[stable[s]], std::min(p, 1.0)});
  }
  out.divergent = X(row, S) > 1e-15 ? X(row, S) : 0.0;
  return out;
}

CpaRealization realize_cpa(const Cpan& l, const Marking& mu0, const ExplorationBudget& budget) {
  const Net& net = l.net;
  CpaRealization r;
  Cpa& u = r.cpa;
  for (ActivityId a : net.timed_activities()) u.activities.push_back(net.activity(a).name);
  u.controls = net.definition().controls;

  std::unordered_map<Marking, StateId, MarkingHash> index;
  std::deque<StateId> frontier;
  auto delta_state = [&]() {
    if (!r.delta) {
      r.delta = u.states.size();
      u.states.push_back(kDivergenceState);
      r.markings.push_back({});
    }
    return *r.delta;
  };
  auto intern = [&](const Marking& m) {
    auto [it, fresh] = index.emplace(m, u.states.size());
    if (fresh) {
      u.states.push_back(to_string(m));
      r.markings.push_back(m);
      frontier.push_back(it->second);
      if (index.size() > budget.max_states)
        throw BudgetExceeded("realization exceeded max_states=" + std::to_string(budget.max_states),
                             frontier.size());
    }
    return it->second;
  };

  std::vector<std::pair<StateId, double>> init;
  ClosureDistribution d0 = closure_distribution(l, mu0, budget);
  for (const auto& [m, p] : d0.stable) init.push_back({intern(m), p});
  if (d0.divergent > 0) init.push_back({delta_state(), d0.divergent});

  while (!frontier.empty()) {
    StateId q = frontier.front();
    frontier.pop_front();
    Marking mu = r.markings[q];
    const auto& timed = net.timed_activities();
    for (SymbolId ai = 0; ai < timed.size(); ++ai) {
      ActivityId a = timed[ai];
      if (!is_enabled(net, mu, a)) continue;
      for (ControlId c : net.admissible_controls(a)) {
        ClosureDistribution d = closure_distribution(l, fire_activity(net, mu, a, c), budget);
        for (const auto& [m, p] : d.stable) u.transitions.push_back({q, ai, c, intern(m), p});
        if (d.divergent > 0) u.transitions.push_back({q, ai, c, delta_state(), d.divergent});
      }
    }
  }
  u.initial.assign(u.states.size(), 0.0);
  for (auto [q, p] : init) u.initial[q] += p;
  u.normalize();
  return r;
}

namespace {

// Re-indexes v's activities and controls to u's order.
Cpa align(const Cpa& u, const Cpa& v) {
  auto remap = [](const std::vector<std::string>& a, const std::vector<std::string>& b, const char* what) {
    std::set<std::string> sa(a.begin(), a.end()), sb(b.begin(), b.end());
    if (sa != sb || sa.size() != a.size() || sb.size() != b.size())
      throw AlphabetMismatch(std::string(what) + " sets differ");
    std::vector<std::size_t> m(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) m[i] = std::find(a.begin(), a.end(), b[i]) - a.begin();
    return m;
  };
  auto am = remap(u.activities, v.activities, "activity");
  auto cm = remap(u.controls, v.controls, "control");
  Cpa w = v;
  w.activities = u.activities;
  w.controls = u.controls;
  for (auto& t : w.transitions) {
    t.activity = am[t.activity];
    t.control = cm[t.control];
  }
  return w;
}

}  // namespace

std::optional<Bisimulation> prob_bisimulation(const Cpa& u, const Cpa& v0, double tol) {
  Cpa v = align(u, v0);
  const std::size_t n = u.num_states(), m = v.num_states(), N = n + m;
  const bool use_f = u.accepting && v.accepting;
  auto fu = u.accepting_mask(), fv = v.accepting_mask();

  struct Out {
    SymbolId a;
    ControlId c;
    std::size_t to;
    double p;
  };
  std::vector<std::vector<Out>> out(N);
  for (const auto& t : u.transitions) out[t.from].push_back({t.activity, t.control, t.to, t.p});
  for (const auto& t : v.transitions) out[n + t.from].push_back({t.activity, t.control, n + t.to, t.p});

  auto quant = [&](double x) { return static_cast<long long>(std::llround(x / tol)); };

  std::vector<std::size_t> block(N, 0);
  if (use_f)
    for (std::size_t i = 0; i < N; ++i) block[i] = (i < n ? fu[i] : fv[i - n]) ? 1 : 0;
  std::size_t count = 0;
  for (;;) {
    using Sig = std::pair<std::size_t, std::map<std::tuple<SymbolId, ControlId, std::size_t>, long long>>;
    std::map<Sig, std::size_t> ids;
    std::vector<std::size_t> next(N);
    for (std::size_t i = 0; i < N; ++i) {
      std::map<std::tuple<SymbolId, ControlId, std::size_t>, double> mass;
      for (const auto& o : out[i]) mass[{o.a, o.c, block[o.to]}] += o.p;
      Sig s{block[i], {}};
      for (const auto& [k, x] : mass) {
        long long qx = quant(x);
        if (qx != 0) s.second[k] = qx;
      }
      next[i] = ids.emplace(std::move(s), ids.size()).first->second;
    }
    block = std::move(next);
    if (ids.size() == count) break;
    count = ids.size();
  }

  std::map<std::size_t, double> init_u, init_v;
  for (StateId q = 0; q < n && q < u.initial.size(); ++q) init_u[block[q]] += u.initial[q];
  for (StateId q = 0; q < m && q < v.initial.size(); ++q) init_v[block[n + q]] += v.initial[q];
  std::set<std::size_t> all;
  for (auto& [b, x] : init_u) all.insert(b);
  for (auto& [b, x] : init_v) all.insert(b);
  for (std::size_t b : all)
    if (std::abs(init_u[b] - init_v[b]) > tol) return std::nullopt;

  Bisimulation b;
  b.left_size = n;
  b.right_size = m;
  b.related.assign(n, std::vector<bool>(m, false));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) b.related[i][j] = block[i] == block[n + j];
  return b;
}

double word_acceptance_probability(const Cpa& u, const PolicySpec& spec, std::span<const SymbolId> word) {
  if (!u.accepting) throw ModelError("word acceptance needs an accepting set");
  for (SymbolId a : word)
    if (a >= u.activities.size()) throw ModelError("letter " + std::to_string(a) + " outside the activity alphabet");
  auto rows = u.rows();
  using Key = std::pair<StateId, PolicyState>;
  struct KeyHash {
    std::size_t operator()(const Key& k) const { return PolicyStateHash{}(k.second) * 1000003u ^ k.first; }
  };
  std::unordered_map<Key, double, KeyHash> cur;
  PolicyState init = initial_policy_state(spec);
  for (StateId q = 0; q < u.initial.size(); ++q)
    if (u.initial[q] > 0) cur[{q, init}] += u.initial[q];
  for (SymbolId a : word) {
    std::unordered_map<Key, double, KeyHash> nxt;
    for (const auto& [k, x] : cur) {
      const auto& [q, m] = k;
      PolicyStep st = policy_step(spec, m, {q, a});
      for (auto [c, w] : st.output.weights) {
        if (c >= u.controls.size()) continue;
        for (auto [to, p] : rows[q][a][c]) nxt[{to, st.state}] += x * w * p;
      }
    }
    cur = std::move(nxt);
  }
  auto f = u.accepting_mask();
  double total = 0;
  for (const auto& [k, x] : cur)
    if (f[k.first]) total += x;
  return total;
}

bool in_threshold_language(const Cpa& u, const PolicySpec& spec, std::span<const SymbolId> word, double theta) {
  return word_acceptance_probability(u, spec, word) >= theta;
}

BuchiProbability buchi_acceptance_probability(const Cpa& u, const PolicySpec& spec, const ExplorationBudget& budget) {
  auto cls = policy_class(spec);
  if (cls != PolicyClass::memoryless && cls != PolicyClass::finite_memory)
    throw ModelError(std::string("Buchi probability needs a finite-memory policy, got ") + to_string(cls));
  if (!u.accepting) throw ModelError("Buchi probability needs an accepting set");
  auto rows = u.rows();
  auto f = u.accepting_mask();

  using Key = std::pair<StateId, PolicyState>;
  struct KeyHash {
    std::size_t operator()(const Key& k) const { return PolicyStateHash{}(k.second) * 1000003u ^ k.first; }
  };
  std::unordered_map<Key, std::size_t, KeyHash> index;
  std::vector<Key> nodes;
  std::deque<std::size_t> work;
  auto intern = [&](const Key& k) {
    auto [it, fresh] = index.emplace(k, nodes.size());
    if (fresh) {
      if (nodes.size() >= budget.max_states)
        throw BudgetExceeded("closed-loop chain exceeded max_states=" + std::to_string(budget.max_states),
                             work.size());
      nodes.push_back(k);
      work.push_back(it->second);
    }
    return it->second;
  };
  std::vector<std::pair<std::size_t, double>> init;
  PolicyState m0 = initial_policy_state(spec);
  for (StateId q = 0; q < u.initial.size(); ++q)
    if (u.initial[q] > 0) init.push_back({intern({q, m0}), u.initial[q]});

  std::vector<std::map<std::size_t, double>> out;
  std::vector<double> deficit;
  while (!work.empty()) {
    std::size_t i = work.front();
    work.pop_front();
    Key k = nodes[i];
    std::map<std::size_t, double> row;
    double total = 0;
    for (SymbolId a = 0; a < u.activities.size(); ++a) {
      bool any = false;
      for (ControlId c = 0; c < u.controls.size() && !any; ++c) any = !rows[k.first][a][c].empty();
      if (!any) continue;
      PolicyStep st = policy_step(spec, k.second, {k.first, a});
      for (auto [c, w] : st.output.weights) {
        if (c >= u.controls.size()) continue;
        for (auto [to, p] : rows[k.first][a][c]) {
          double x = w * p;
          if (x <= 0) continue;
          row[intern({to, st.state})] += x;
          total += x;
        }
      }
    }
    if (total > 1.0 + 1e-9)
      throw ModelError("closed-loop row at " + u.states[k.first] + " has mass " + std::to_string(total) +
                       "; activities must split the mass of each step");
    if (out.size() < nodes.size()) {
      out.resize(nodes.size());
      deficit.resize(nodes.size(), 0.0);
    }
    out[i] = std::move(row);
    deficit[i] = std::max(0.0, 1.0 - total);
  }
  const std::size_t n = nodes.size();
  out.resize(n);
  deficit.resize(n, 0.0);
  const std::size_t sink = n;  // rejecting sink
  const std::size_t N = n + 1;
  std::vector<std::vector<std::size_t>> succ(N);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& [j, p] : out[i]) succ[i].push_back(j);
    if (deficit[i] > 1e-12) succ[i].push_back(sink);
  }
  succ[sink].push_back(sink);

  // Tarjan SCC, iterative.
  const std::size_t none = static_cast<std::size_t>(-1);
  std::vector<std::size_t> idx(N, none), low(N, 0), comp(N, none);
  std::vector<bool> on(N, false);
  std::vector<std::size_t> st;
  std::size_t counter = 0, ncomp = 0;
  for (std::size_t root = 0; root < N; ++root) {
    if (idx[root] != none) continue;
    std::vector<std::pair<std::size_t, std::size_t>> call{{root, 0}};
    idx[root] = low[root] = counter++;
    st.push_back(root);
    on[root] = true;
    while (!call.empty()) {
      auto& [v, k] = call.back();
      if (k < succ[v].size()) {
        std::size_t w = succ[v][k++];
        if (idx[w] == none) {
          idx[w] = low[w] = counter++;
          st.push_back(w);
          on[w] = true;
          call.push_back({w, 0});
        } else if (on[w]) {
          low[v] = std::min(low[v], idx[w]);
        }
        continue;
      }
      if (low[v] == idx[v]) {
        for (;;) {
          std::size_t w = st.back();
          st.pop_back();
          on[w] = false;
          comp[w] = ncomp;
          if (w == v) break;
        }
        ++ncomp;
      }
      std::size_t done = v;
      call.pop_back();
      if (!call.empty()) low[call.back().first] = std::min(low[call.back().first], low[done]);
    }
  }
  std::vector<bool> bottom(ncomp, true), acc(ncomp, false), reached(ncomp, false);
  for (std::size_t v = 0; v < N; ++v) {
    for (std::size_t w : succ[v])
      if (comp[w] != comp[v]) bottom[comp[v]] = false;
    if (v < n && f[nodes[v].first]) acc[comp[v]] = true;
  }
  // Reachability from the initial support (every node is reachable by
  // construction, except possibly the sink).
  for (std::size_t v = 0; v < n; ++v) reached[comp[v]] = true;
  for (std::size_t v = 0; v < n; ++v)
    if (deficit[v] > 1e-12) reached[comp[sink]] = true;

  BuchiProbability res;
  res.chain_states = n;
  bool all_acc = true, any_acc = false;
  for (std::size_t c = 0; c < ncomp; ++c) {
    if (!bottom[c] || !reached[c]) continue;
    ++res.bottom_components;
    if (acc[c]) {
      ++res.accepting_components;
      any_acc = true;
    } else {
      all_acc = false;
    }
  }
  res.almost_sure = !init.empty() && all_acc;
  res.positive = any_acc && !init.empty();

  // Nodes that can reach an accepting bottom component.
  std::vector<std::vector<std::size_t>> pred(N);
  for (std::size_t v = 0; v < N; ++v)
    for (std::size_t w : succ[v]) pred[w].push_back(v);
  std::vector<bool> can(N, false);
  std::deque<std::size_t> dq;
  for (std::size_t v = 0; v < N; ++v)
    if (bottom[comp[v]] && acc[comp[v]]) {
      can[v] = true;
      dq.push_back(v);
    }
  while (!dq.empty()) {
    std::size_t v = dq.front();
    dq.pop_front();
    for (std::size_t w : pred[v])
      if (!can[w]) {
        can[w] = true;
        dq.push_back(w);
      }
  }
  std::vector<std::size_t> tix(N, none);
  std::vector<std::size_t> unknowns;
  for (std::size_t v = 0; v < n; ++v)
    if (can[v] && !(bottom[comp[v]] && acc[comp[v]])) {
      tix[v] = unknowns.size();
      unknowns.push_back(v);
    }
  std::vector<double> x(N, 0.0);
  for (std::size_t v = 0; v < n; ++v)
    if (bottom[comp[v]] && acc[comp[v]]) x[v] = 1.0;
  if (!unknowns.empty()) {
    const std::size_t T = unknowns.size();
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::VectorXd b = Eigen::VectorXd::Zero(T);
    for (std::size_t k = 0; k < T; ++k) {
      trip.emplace_back(k, k, 1.0);
      for (auto& [j, p] : out[unknowns[k]]) {
        if (tix[j] != none)
          trip.emplace_back(k, tix[j], -p);
        else
          b[k] += p * x[j];
      }
    }
    Eigen::SparseMatrix<double> A(T, T);
    A.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success) throw ModelError("singular absorption system in the closed-loop chain");
    Eigen::VectorXd sol = lu.solve(b);
    for (std::size_t k = 0; k < T; ++k) x[unknowns[k]] = std::clamp(sol[k], 0.0, 1.0);
  }
  double prob = 0;
  for (auto [i, p] : init) prob += p * x[i];
  res.probability = std::clamp(prob, 0.0, 1.0);
  return res;
}

std::vector<std::vector<std::vector<std::pair<StateId, double>>>> Dtmdp::rows() const {
  std::vector<std::vector<std::map<StateId, double>>> acc(states.size(),
                                                          std::vector<std::map<StateId, double>>(controls.size()));
  for (const auto& t : transitions) acc[t.from][t.control][t.to] += t.p;
  std::vector<std::vector<std::vector<std::pair<StateId, double>>>> r(
      states.size(), std::vector<std::vector<std::pair<StateId, double>>>(controls.size()));
  for (StateId q = 0; q < states.size(); ++q)
    for (ControlId c = 0; c < controls.size(); ++c)
      for (auto [to, p] : acc[q][c])
        if (p > 0) r[q][c].push_back({to, p});
  return r;
}

Dtmdp dtmdp_of_cpa(const Cpa& u, double tol) {
  auto rep = validate_cpa(u, tol);
  for (const auto& v : rep.violations)
    if (v.code != "non-stochastic-row") throw ModelError(v.code + ": " + v.message);
  std::map<std::pair<StateId, ControlId>, double> mass;
  for (const auto& t : u.transitions) mass[{t.from, t.control}] += t.p;
  std::string bad;
  for (const auto& [k, s] : mass)
    if (s > 0 && std::abs(s - 1.0) > tol) {
      if (!bad.empty()) bad += ", ";
      bad += "(" + u.states[k.first] + "," + u.controls[k.second] + ") sums to " + std::to_string(s);
    }
  if (!bad.empty()) throw ModelError("non-stochastic rows: " + bad);
  Dtmdp d;
  d.states = u.states;
  d.controls = u.controls;
  d.activities = u.activities;
  d.transitions = u.transitions;
  d.initial = u.initial;
  return d;
}

double RewardStructure::rate_of(StateId q, std::optional<ControlId> c) const {
  const RateReward* best = nullptr;
  int best_spec = -1;
  for (const auto& e : rate) {
    if (e.state && *e.state != q) continue;
    if (e.control && (!c || *e.control != *c)) continue;
    int spec = (e.state ? 1 : 0) + (e.control ? 1 : 0);
    if (spec >= best_spec) {
      best = &e;
      best_spec = spec;
    }
  }
  return best ? best->value : 0.0;
}

double RewardStructure::impulse_of(StateId q, SymbolId a, ControlId c, StateId to) const {
  const ImpulseReward* best = nullptr;
  int best_spec = -1;
  for (const auto& e : impulse) {
    if ((e.state && *e.state != q) || (e.activity && *e.activity != a) || (e.control && *e.control != c) ||
        (e.target && *e.target != to))
      continue;
    int spec = (e.state ? 1 : 0) + (e.activity ? 1 : 0) + (e.control ? 1 : 0) + (e.target ? 1 : 0);
    if (spec >= best_spec) {
      best = &e;
      best_spec = spec;
    }
  }
  return best ? best->value : 0.0;
}

bool RewardStructure::has_impulses() const {
  return std::any_of(impulse.begin(), impulse.end(), [](const ImpulseReward& e) { return e.value != 0.0; });
}

double RewardStructure::max_rate() const {
  double m = 0;
  for (const auto& e : rate) m = std::max(m, e.value);
  return m;
}

double RewardStructure::max_impulse() const {
  double m = 0;
  for (const auto& e : impulse) m = std::max(m, e.value);
  return m;
}

void RewardStructure::check() const {
  for (const auto& e : rate)
    if (!(e.value >= 0) || !std::isfinite(e.value)) throw DomainError("reward rates must be finite and nonnegative");
  for (const auto& e : impulse)
    if (!(e.value >= 0) || !std::isfinite(e.value))
      throw DomainError("impulse rewards must be finite and nonnegative");
}

double discrete_reward(const RewardStructure& r, const DiscreteTrajectory& t, std::size_t from, std::size_t to) {
  if (from > to) throw DomainError("reward window is reversed");
  if (t.states.empty() || to > t.states.size() - 1 || t.activities.size() < to || t.controls.size() < to)
    throw DomainError("reward window [" + std::to_string(from) + "," + std::to_string(to) +
                      "] exceeds the trajectory");
  double total = 0;
  for (std::size_t i = from; i < to; ++i)
    total += r.rate_of(t.states[i], t.controls[i]) +
             r.impulse_of(t.states[i], t.activities[i], t.controls[i], t.states[i + 1]);
  return total;
}

}  // namespace csan
