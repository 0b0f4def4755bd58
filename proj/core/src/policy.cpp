#include "csan/policy.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "csan/error.hpp"

namespace csan {

ControlDist ControlDist::from(std::vector<std::pair<ControlId, double>> w) {
  std::map<ControlId, double> acc;
  for (auto [c, p] : w) {
    if (p < 0 || !std::isfinite(p)) throw ModelError("control weight must be a nonnegative finite number");
    if (p > 0) acc[c] += p;
  }
  ControlDist d;
  d.weights.assign(acc.begin(), acc.end());
  return d;
}

double ControlDist::weight(ControlId c) const {
  for (auto [x, p] : weights)
    if (x == c) return p;
  return 0.0;
}

bool approx_equal(const ControlDist& a, const ControlDist& b, double tol) {
  std::set<ControlId> cs;
  for (auto [c, p] : a.weights) cs.insert(c);
  for (auto [c, p] : b.weights) cs.insert(c);
  for (ControlId c : cs)
    if (std::abs(a.weight(c) - b.weight(c)) > tol) return false;
  return true;
}

MemorylessPolicy MemorylessPolicy::constant(PolicyDims d, ControlId c) {
  return {d, std::vector<ControlDist>(d.states, ControlDist::point(c))};
}

FiniteMemoryPolicy FiniteMemoryPolicy::make(PolicyDims d, std::size_t memory, MemoryId initial) {
  if (memory == 0) throw ModelError("finite-memory policy needs at least one memory state");
  FiniteMemoryPolicy p;
  p.dims = d;
  p.memory = memory;
  p.initial = initial;
  p.next.resize(memory * d.states * d.activities);
  for (MemoryId m = 0; m < memory; ++m)
    for (StateId q = 0; q < d.states; ++q)
      for (SymbolId a = 0; a < d.activities; ++a) p.next_of(m, q, a) = m;
  p.output.assign(d.states * memory, ControlDist::point(0));
  return p;
}

void FiniteMemoryPolicy::set_next_all_states(MemoryId m, SymbolId a, MemoryId to) {
  for (StateId q = 0; q < dims.states; ++q) next_of(m, q, a) = to;
}

void FiniteMemoryPolicy::set_output_all_states(MemoryId m, const ControlDist& d) {
  for (StateId q = 0; q < dims.states; ++q) output_of(q, m) = d;
}

StackPolicy StackPolicy::make(PolicyDims d, std::vector<std::string> symbols, TapeSymbol bottom) {
  StackPolicy p;
  p.dims = d;
  p.symbols = std::move(symbols);
  p.bottom = bottom;
  const std::size_t g = p.symbols.size();
  p.update.resize(g * d.states * d.activities);
  for (TapeSymbol t = 0; t < g; ++t)
    for (StateId q = 0; q < d.states; ++q)
      for (SymbolId a = 0; a < d.activities; ++a) p.update_of(t, q, a) = {t};
  p.output.assign(d.states * g, ControlDist::point(0));
  return p;
}

TapePolicy TapePolicy::make(PolicyDims d, std::vector<std::string> symbols, TapeSymbol blank) {
  TapePolicy p;
  p.dims = d;
  p.symbols = std::move(symbols);
  p.blank = blank;
  const std::size_t g = p.symbols.size();
  p.update.resize(g * d.states * d.activities);
  for (TapeSymbol s = 0; s < g; ++s)
    for (StateId q = 0; q < d.states; ++q)
      for (SymbolId a = 0; a < d.activities; ++a) p.update_of(s, q, a) = {s, HeadMove::stay};
  p.output.assign(d.states * g, ControlDist::point(0));
  return p;
}

PolicyClass policy_class(const PolicySpec& spec) { return static_cast<PolicyClass>(spec.index()); }

const char* to_string(PolicyClass c) {
  switch (c) {
    case PolicyClass::memoryless: return "memoryless";
    case PolicyClass::finite_memory: return "finite-memory";
    case PolicyClass::stack: return "stack";
    case PolicyClass::tape: return "tape";
    case PolicyClass::history: return "history";
  }
  return "?";
}

std::optional<PolicyClass> parse_policy_class(std::string_view s) {
  if (s == "0" || s == "memoryless") return PolicyClass::memoryless;
  if (s == "F" || s == "finite-memory" || s == "finite") return PolicyClass::finite_memory;
  if (s == "stack") return PolicyClass::stack;
  if (s == "tape") return PolicyClass::tape;
  if (s == "history") return PolicyClass::history;
  return std::nullopt;
}

const PolicyDims& dims_of(const PolicySpec& spec) {
  return std::visit([](const auto& p) -> const PolicyDims& { return p.dims; }, spec);
}

namespace {

bool all_points(const std::vector<ControlDist>& v) {
  return std::all_of(v.begin(), v.end(), [](const ControlDist& d) { return d.is_point(); });
}

void check_dists(const std::vector<ControlDist>& v, std::size_t controls) {
  for (const auto& d : v) {
    double s = 0;
    for (auto [c, p] : d.weights) {
      if (c >= controls) throw ModelError("policy outputs a control outside the control alphabet");
      if (p < 0) throw ModelError("negative control weight");
      s += p;
    }
    if (std::abs(s - 1.0) > 1e-12) throw ModelError("policy output weights sum to " + std::to_string(s));
  }
}

void check_obs(const PolicyDims& d, Observation o) {
  if (o.state >= d.states) throw ModelError("observed state " + std::to_string(o.state) + " outside the plant");
  if (o.activity >= d.activities)
    throw ModelError("observed activity " + std::to_string(o.activity) + " outside the alphabet");
}

}  // namespace

bool is_deterministic(const PolicySpec& spec) {
  struct V {
    bool operator()(const MemorylessPolicy& p) const { return all_points(p.output); }
    bool operator()(const FiniteMemoryPolicy& p) const { return all_points(p.output); }
    bool operator()(const StackPolicy& p) const { return all_points(p.output); }
    bool operator()(const TapePolicy& p) const { return all_points(p.output); }
    bool operator()(const HistoryPolicy&) const { return false; }
  };
  return std::visit(V{}, spec);
}

void validate_policy(const PolicySpec& spec) {
  struct V {
    void operator()(const MemorylessPolicy& p) const {
      if (p.output.size() != p.dims.states) throw ModelError("memoryless table size mismatch");
      check_dists(p.output, p.dims.controls);
    }
    void operator()(const FiniteMemoryPolicy& p) const {
      if (p.next.size() != p.memory * p.dims.states * p.dims.activities ||
          p.output.size() != p.memory * p.dims.states)
        throw ModelError("finite-memory table size mismatch");
      if (p.initial >= p.memory) throw ModelError("initial memory state out of range");
      for (MemoryId m : p.next)
        if (m >= p.memory) throw ModelError("memory update leaves the memory set");
      check_dists(p.output, p.dims.controls);
    }
    void operator()(const StackPolicy& p) const {
      const std::size_t g = p.symbols.size();
      if (p.bottom >= g) throw ModelError("stack bottom symbol not in the alphabet");
      if (p.update.size() != g * p.dims.states * p.dims.activities || p.output.size() != g * p.dims.states)
        throw ModelError("stack table size mismatch");
      for (TapeSymbol t = 0; t < g; ++t)
        for (StateId q = 0; q < p.dims.states; ++q)
          for (SymbolId a = 0; a < p.dims.activities; ++a) {
            const auto& w = p.update_of(t, q, a);
            for (std::size_t i = 0; i < w.size(); ++i) {
              if (w[i] >= g) throw ModelError("stack rule pushes an undeclared symbol");
              bool last = i + 1 == w.size();
              if ((w[i] == p.bottom) != (t == p.bottom && last))
                throw ModelError("stack rules must keep the bottom symbol exactly at the bottom");
            }
            if (t == p.bottom && w.empty()) throw ModelError("stack rule pops the bottom symbol");
          }
      check_dists(p.output, p.dims.controls);
    }
    void operator()(const TapePolicy& p) const {
      const std::size_t g = p.symbols.size();
      if (p.blank >= g) throw ModelError("tape blank symbol not in the alphabet");
      if (p.update.size() != g * p.dims.states * p.dims.activities || p.output.size() != g * p.dims.states)
        throw ModelError("tape table size mismatch");
      for (const auto& u : p.update)
        if (u.write >= g) throw ModelError("tape rule writes an undeclared symbol");
      check_dists(p.output, p.dims.controls);
    }
    void operator()(const HistoryPolicy& p) const {
      if (!p.decide) throw ModelError("history policy without a decision procedure");
    }
  };
  std::visit(V{}, spec);
}

std::size_t PolicyStateHash::operator()(const PolicyState& s) const noexcept {
  std::size_t h = s.index() * 0x9e3779b97f4a7c15ULL;
  auto mix = [&](std::size_t v) { h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2); };
  switch (s.index()) {
    case 1: mix(std::get<1>(s)); break;
    case 2:
      for (auto x : std::get<2>(s)) mix(x);
      break;
    case 3: {
      const auto& t = std::get<3>(s);
      mix(static_cast<std::size_t>(t.head));
      for (auto [k, v] : t.cells) {
        mix(static_cast<std::size_t>(k));
        mix(v);
      }
      break;
    }
    case 4:
      for (auto o : std::get<4>(s)) {
        mix(o.state);
        mix(o.activity);
      }
      break;
    default: break;
  }
  return h;
}

PolicyState initial_policy_state(const PolicySpec& spec) {
  switch (policy_class(spec)) {
    case PolicyClass::memoryless: return std::monostate{};
    case PolicyClass::finite_memory: return std::get<FiniteMemoryPolicy>(spec).initial;
    case PolicyClass::stack: return std::vector<TapeSymbol>{std::get<StackPolicy>(spec).bottom};
    case PolicyClass::tape: return TapeState{};
    case PolicyClass::history: return std::vector<Observation>{};
  }
  return std::monostate{};
}

PolicyStep policy_step(const PolicySpec& spec, const PolicyState& state, Observation o) {
  check_obs(dims_of(spec), o);
  switch (policy_class(spec)) {
    case PolicyClass::memoryless: {
      const auto& p = std::get<MemorylessPolicy>(spec);
      return {std::monostate{}, p.output[o.state]};
    }
    case PolicyClass::finite_memory: {
      const auto& p = std::get<FiniteMemoryPolicy>(spec);
      MemoryId m = p.next_of(std::get<MemoryId>(state), o.state, o.activity);
      return {m, p.output_of(o.state, m)};
    }
    case PolicyClass::stack: {
      const auto& p = std::get<StackPolicy>(spec);
      auto st = std::get<std::vector<TapeSymbol>>(state);
      TapeSymbol top = st.back();
      const auto& w = p.update_of(top, o.state, o.activity);
      st.pop_back();
      for (auto it = w.rbegin(); it != w.rend(); ++it) st.push_back(*it);
      if (st.empty()) throw ModelError("stack policy popped the bottom symbol");
      const ControlDist& d = p.output_of(o.state, st.back());
      return {std::move(st), d};
    }
    case PolicyClass::tape: {
      const auto& p = std::get<TapePolicy>(spec);
      TapeState t = std::get<TapeState>(state);
      auto scanned = [&] {
        auto it = t.cells.find(t.head);
        return it == t.cells.end() ? p.blank : it->second;
      };
      const TapeAction& act = p.update_of(scanned(), o.state, o.activity);
      if (act.write == p.blank)
        t.cells.erase(t.head);
      else
        t.cells[t.head] = act.write;
      if (act.move == HeadMove::left) --t.head;
      if (act.move == HeadMove::right) ++t.head;
      const ControlDist& d = p.output_of(o.state, scanned());
      return {std::move(t), d};
    }
    case PolicyClass::history: {
      const auto& p = std::get<HistoryPolicy>(spec);
      auto h = std::get<std::vector<Observation>>(state);
      h.push_back(o);
      ControlDist d = p.decide(h);
      return {std::move(h), std::move(d)};
    }
  }
  throw ModelError("unknown policy class");
}

ClosedLoop closed_loop(const ControlledAutomaton& s, const PolicySpec& spec, const ExplorationBudget& budget) {
  if (policy_class(spec) == PolicyClass::history)
    throw ModelError("closed_loop does not accept history policies (unbounded state); step them with policy_step");
  ClosedLoop cl;
  struct Key {
    StateId q;
    PolicyState s;
    bool operator==(const Key& o) const { return q == o.q && s == o.s; }
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const { return PolicyStateHash{}(k.s) * 31 + k.q; }
  };
  std::unordered_map<Key, std::size_t, KeyHash> index;
  std::deque<std::size_t> work;
  auto intern = [&](StateId q, const PolicyState& st) {
    auto [it, fresh] = index.emplace(Key{q, st}, cl.plant_state.size());
    if (fresh) {
      cl.plant_state.push_back(q);
      cl.policy_state.push_back(st);
      work.push_back(it->second);
      if (cl.plant_state.size() > budget.max_states)
        throw BudgetExceeded("closed loop exceeded max_states=" + std::to_string(budget.max_states), work.size());
    }
    return it->second;
  };
  // by_qa[q][a] lists transitions (q, a, ., .)
  std::vector<std::vector<std::vector<const Transition*>>> by_qa(
      s.num_states(), std::vector<std::vector<const Transition*>>(s.activities.size()));
  for (const auto& t : s.transitions) by_qa[t.from][t.activity].push_back(&t);

  PolicyState init = initial_policy_state(spec);
  for (StateId q : s.initial) cl.initial.push_back(intern(q, init));
  while (!work.empty()) {
    std::size_t n = work.front();
    work.pop_front();
    StateId q = cl.plant_state[n];
    for (SymbolId a = 0; a < s.activities.size(); ++a) {
      if (by_qa[q][a].empty()) continue;
      PolicyStep step = policy_step(spec, cl.policy_state[n], {q, a});
      for (auto [c, w] : step.output.weights)
        for (const Transition* t : by_qa[q][a])
          if (t->control == c) {
            std::size_t to = intern(t->to, step.state);
            cl.edges.push_back({n, a, c, w, to});
          }
    }
  }
  return cl;
}

PushdownSystem closed_loop_pushdown(const ControlledAutomaton& s, const StackPolicy& p) {
  validate_policy(PolicySpec{p});
  PushdownSystem pds;
  const std::size_t nq = s.num_states();
  pds.num_locations = nq;
  pds.num_symbols = p.symbols.size();
  pds.location_names = s.states;
  pds.initial_locations = s.initial;
  pds.initial_symbol = p.bottom;
  pds.accepting = s.accepting_mask();

  auto fresh = [&](std::string name) {
    pds.location_names.push_back(std::move(name));
    pds.accepting.push_back(false);
    return pds.num_locations++;
  };
  auto emit = [&](std::size_t from, std::size_t top, std::size_t to, const std::vector<std::size_t>& w) {
    if (w.size() <= 2) {
      pds.rules.push_back({from, top, to, w});
      return;
    }
    const std::size_t k = w.size();
    std::size_t cur = fresh(pds.location_names[from] + "~push");
    pds.rules.push_back({from, top, cur, {w[k - 2], w[k - 1]}});
    for (std::size_t j = 1; j + 2 < k; ++j) {
      std::size_t nxt = fresh(pds.location_names[from] + "~push");
      pds.rules.push_back({cur, w[k - 1 - j], nxt, {w[k - 2 - j], w[k - 1 - j]}});
      cur = nxt;
    }
    pds.rules.push_back({cur, w[1], to, {w[0], w[1]}});
  };

  std::vector<std::vector<std::vector<const Transition*>>> by_qa(
      nq, std::vector<std::vector<const Transition*>>(s.activities.size()));
  for (const auto& t : s.transitions) by_qa[t.from][t.activity].push_back(&t);

  for (StateId q = 0; q < nq; ++q) {
    for (SymbolId a = 0; a < s.activities.size(); ++a) {
      if (by_qa[q][a].empty()) continue;
      std::optional<std::size_t> pop_loc;
      for (TapeSymbol t = 0; t < p.symbols.size(); ++t) {
        const auto& w = p.update_of(t, q, a);
        if (!w.empty()) {
          for (auto [c, wt] : p.output_of(q, w[0]).weights)
            for (const Transition* tr : by_qa[q][a])
              if (tr->control == c) emit(q, t, tr->to, w);
        } else {
          if (!pop_loc) {
            pop_loc = fresh(s.states[q] + "~pop~" + s.activities[a]);
            for (TapeSymbol below = 0; below < p.symbols.size(); ++below)
              for (auto [c, wt] : p.output_of(q, below).weights)
                for (const Transition* tr : by_qa[q][a])
                  if (tr->control == c) pds.rules.push_back({*pop_loc, below, tr->to, {below}});
          }
          pds.rules.push_back({q, t, *pop_loc, {}});
        }
      }
    }
  }
  return pds;
}

EquivalenceVerdict policies_equivalent_bounded(const ControlledAutomaton& s, const ControlledAutomaton& t0,
                                               const Bisimulation& gamma, const PolicySpec& pi, const PolicySpec& rho,
                                               std::size_t depth) {
  if (!is_bisimulation(s, t0, gamma)) throw ModelError("relation is not a bisimulation between the two automata");
  ControlledAutomaton t = align_alphabets(s, t0);
  EquivalenceVerdict v;
  v.depth = depth;
  auto as = s.adjacency(), at = t.adjacency();

  std::vector<Observation> hl, hr;
  std::set<std::tuple<StateId, StateId, PolicyState, PolicyState, std::size_t>> seen;
  std::function<bool(StateId, StateId, const PolicyState&, const PolicyState&)> dfs =
      [&](StateId q, StateId r, const PolicyState& sp, const PolicyState& sr) -> bool {
    if (hl.size() >= depth) return true;
    bool hist = policy_class(pi) == PolicyClass::history || policy_class(rho) == PolicyClass::history;
    if (!hist) {
      auto key = std::make_tuple(q, r, sp, sr, hl.size());
      if (!seen.insert(key).second) return true;
    }
    std::set<SymbolId> acts;
    for (const auto& x : as[q]) acts.insert(x.activity);
    for (SymbolId a : acts) {
      PolicyStep a1 = policy_step(pi, sp, {q, a});
      PolicyStep a2 = policy_step(rho, sr, {r, a});
      hl.push_back({q, a});
      hr.push_back({r, a});
      if (!approx_equal(a1.output, a2.output)) {
        v.equivalent = false;
        v.history_left = hl;
        v.history_right = hr;
        return false;
      }
      for (auto [c, w] : a1.output.weights)
        for (const auto& x : as[q]) {
          if (x.activity != a || x.control != c) continue;
          for (const auto& y : at[r]) {
            if (y.activity != a || y.control != c || !gamma.related[x.to][y.to]) continue;
            if (!dfs(x.to, y.to, a1.state, a2.state)) return false;
          }
        }
      hl.pop_back();
      hr.pop_back();
    }
    return true;
  };
  PolicyState i1 = initial_policy_state(pi), i2 = initial_policy_state(rho);
  for (StateId q : s.initial)
    for (StateId r : t.initial)
      if (gamma.related[q][r] && !dfs(q, r, i1, i2)) return v;
  return v;
}

FiniteMemoryPolicy as_finite_memory(const PolicySpec& spec) {
  if (const auto* fm = std::get_if<FiniteMemoryPolicy>(&spec)) return *fm;
  if (const auto* ml = std::get_if<MemorylessPolicy>(&spec)) {
    auto p = FiniteMemoryPolicy::make(ml->dims, 1);
    for (StateId q = 0; q < ml->dims.states; ++q) p.output_of(q, 0) = ml->output[q];
    return p;
  }
  throw ModelError(std::string("expected a memoryless or finite-memory policy, got ") +
                   to_string(policy_class(spec)));
}

PolicySpec transport_policy(const PolicySpec& spec, const std::vector<StateId>& map, PolicyDims nd) {
  if (map.size() != nd.states) throw ModelError("state map size differs from the target plant");
  const PolicyDims& od = dims_of(spec);
  if (nd.activities != od.activities || nd.controls != od.controls)
    throw ModelError("transport needs identical activity and control alphabets");
  for (StateId q : map)
    if (q >= od.states) throw ModelError("state map points outside the source plant");
  switch (policy_class(spec)) {
    case PolicyClass::memoryless: {
      const auto& p = std::get<MemorylessPolicy>(spec);
      MemorylessPolicy out{nd, {}};
      for (StateId q = 0; q < nd.states; ++q) out.output.push_back(p.output[map[q]]);
      return out;
    }
    case PolicyClass::finite_memory: {
      const auto& p = std::get<FiniteMemoryPolicy>(spec);
      auto out = FiniteMemoryPolicy::make(nd, p.memory, p.initial);
      out.reads_state = p.reads_state;
      for (MemoryId m = 0; m < p.memory; ++m)
        for (StateId q = 0; q < nd.states; ++q) {
          for (SymbolId a = 0; a < nd.activities; ++a) out.next_of(m, q, a) = p.next_of(m, map[q], a);
          out.output_of(q, m) = p.output_of(map[q], m);
        }
      return out;
    }
    case PolicyClass::stack: {
      const auto& p = std::get<StackPolicy>(spec);
      auto out = StackPolicy::make(nd, p.symbols, p.bottom);
      for (TapeSymbol g = 0; g < p.symbols.size(); ++g)
        for (StateId q = 0; q < nd.states; ++q) {
          for (SymbolId a = 0; a < nd.activities; ++a) out.update_of(g, q, a) = p.update_of(g, map[q], a);
          out.output_of(q, g) = p.output_of(map[q], g);
        }
      return out;
    }
    case PolicyClass::tape: {
      const auto& p = std::get<TapePolicy>(spec);
      auto out = TapePolicy::make(nd, p.symbols, p.blank);
      for (TapeSymbol g = 0; g < p.symbols.size(); ++g)
        for (StateId q = 0; q < nd.states; ++q) {
          for (SymbolId a = 0; a < nd.activities; ++a) out.update_of(g, q, a) = p.update_of(g, map[q], a);
          out.output_of(q, g) = p.output_of(map[q], g);
        }
      return out;
    }
    case PolicyClass::history: {
      auto decide = std::get<HistoryPolicy>(spec).decide;
      return HistoryPolicy{nd, [decide, map](std::span<const Observation> h) {
                             std::vector<Observation> mapped;
                             for (auto o : h) mapped.push_back({map[o.state], o.activity});
                             return decide(mapped);
                           }};
    }
  }
  throw ModelError("unknown policy class");
}

FiniteMemoryPolicy union_policy(const UnionResult& u, const PolicySpec& pi1, const PolicySpec& pi2) {
  FiniteMemoryPolicy f1 = as_finite_memory(pi1), f2 = as_finite_memory(pi2);
  PolicyDims d = PolicyDims::of(u.automaton);
  auto out = FiniteMemoryPolicy::make(d, f1.memory * f2.memory, f1.initial * f2.memory + f2.initial);
  std::vector<int> side(d.states, -1);
  std::vector<StateId> orig(d.states, 0);
  for (StateId q = 0; q < u.left_map.size(); ++q) {
    side[u.left_map[q]] = 0;
    orig[u.left_map[q]] = q;
  }
  for (StateId q = 0; q < u.right_map.size(); ++q) {
    side[u.right_map[q]] = 1;
    orig[u.right_map[q]] = q;
  }
  for (MemoryId m1 = 0; m1 < f1.memory; ++m1)
    for (MemoryId m2 = 0; m2 < f2.memory; ++m2) {
      MemoryId m = m1 * f2.memory + m2;
      for (StateId q = 0; q < d.states; ++q) {
        StateId o = orig[q];
        for (SymbolId a = 0; a < d.activities; ++a)
          out.next_of(m, q, a) = side[q] == 0 ? f1.next_of(m1, o, a) * f2.memory + m2
                                              : m1 * f2.memory + f2.next_of(m2, o, a);
        out.output_of(q, m) = side[q] == 0 ? f1.output_of(o, m1) : f2.output_of(o, m2);
      }
    }
  return out;
}

FiniteMemoryPolicy product_policy(const ProductResult& pr, const PolicySpec& pi1, const PolicySpec& pi2) {
  FiniteMemoryPolicy f1 = as_finite_memory(pi1), f2 = as_finite_memory(pi2);
  PolicyDims d = PolicyDims::of(pr.automaton);
  auto out = FiniteMemoryPolicy::make(d, f1.memory * f2.memory, f1.initial * f2.memory + f2.initial);
  for (StateId q = 0; q < d.states; ++q) {
    StateId q1 = q / (pr.right_states * pr.phase_count);
    StateId q2 = (q / pr.phase_count) % pr.right_states;
    for (MemoryId m1 = 0; m1 < f1.memory; ++m1)
      for (MemoryId m2 = 0; m2 < f2.memory; ++m2) {
        MemoryId m = m1 * f2.memory + m2;
        for (SymbolId a = 0; a < d.activities; ++a)
          out.next_of(m, q, a) = f1.next_of(m1, q1, a) * f2.memory + f2.next_of(m2, q2, a);
        std::vector<std::pair<ControlId, double>> w;
        for (auto [c1, p1] : f1.output_of(q1, m1).weights)
          for (auto [c2, p2] : f2.output_of(q2, m2).weights) w.emplace_back(pr.control_of(c1, c2), p1 * p2);
        out.output_of(q, m) = ControlDist::from(std::move(w));
      }
  }
  return out;
}

}  // namespace csan
