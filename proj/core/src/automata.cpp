#include "csan/automata.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <map>
#include <set>

#include "csan/error.hpp"

namespace csan {

namespace {

template <class T>
std::optional<std::size_t> index_of(const std::vector<T>& v, std::string_view name) {
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i] == name) return i;
  return std::nullopt;
}

void sort_unique(std::vector<StateId>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

}  // namespace

std::optional<StateId> ControlledAutomaton::find_state(std::string_view name) const {
  return index_of(states, name);
}
std::optional<SymbolId> ControlledAutomaton::find_activity(std::string_view name) const {
  return index_of(activities, name);
}
std::optional<SymbolId> ControlledAutomaton::find_control(std::string_view name) const {
  return index_of(controls, name);
}

bool ControlledAutomaton::is_accepting(StateId q) const {
  return accepting && std::find(accepting->begin(), accepting->end(), q) != accepting->end();
}

bool ControlledAutomaton::is_initial(StateId q) const {
  return std::find(initial.begin(), initial.end(), q) != initial.end();
}

std::vector<bool> ControlledAutomaton::accepting_mask() const {
  std::vector<bool> m(states.size(), false);
  if (accepting)
    for (StateId q : *accepting) m.at(q) = true;
  return m;
}

std::vector<std::vector<Transition>> ControlledAutomaton::adjacency() const {
  std::vector<std::vector<Transition>> adj(states.size());
  for (const auto& t : transitions) adj.at(t.from).push_back(t);
  for (auto& v : adj) std::sort(v.begin(), v.end());
  return adj;
}

void ControlledAutomaton::normalize() {
  std::sort(transitions.begin(), transitions.end());
  transitions.erase(std::unique(transitions.begin(), transitions.end()), transitions.end());
  sort_unique(initial);
  if (accepting) sort_unique(*accepting);
}

void ControlledAutomaton::check() const {
  for (const auto& t : transitions) {
    if (t.from >= states.size() || t.to >= states.size())
      throw ModelError("transition endpoint outside the state set");
    if (t.activity >= activities.size()) throw ModelError("transition activity outside the alphabet");
    if (t.control >= controls.size()) throw ModelError("transition control outside the control alphabet");
  }
  for (StateId q : initial)
    if (q >= states.size()) throw ModelError("initial state outside the state set");
  if (accepting)
    for (StateId q : *accepting)
      if (q >= states.size()) throw ModelError("accepting state outside the state set");
}

ControlledAutomaton align_alphabets(const ControlledAutomaton& a, const ControlledAutomaton& b) {
  auto remap = [](const std::vector<std::string>& want, const std::vector<std::string>& have, const char* what) {
    std::set<std::string> sw(want.begin(), want.end()), sh(have.begin(), have.end());
    if (sw != sh || want.size() != have.size())
      throw AlphabetMismatch(std::string(what) + " alphabets differ");
    std::vector<SymbolId> m(have.size());
    for (std::size_t i = 0; i < have.size(); ++i) m[i] = *index_of(want, have[i]);
    return m;
  };
  auto am = remap(a.activities, b.activities, "activity");
  auto cm = remap(a.controls, b.controls, "control");
  ControlledAutomaton out = b;
  out.activities = a.activities;
  out.controls = a.controls;
  for (auto& t : out.transitions) {
    t.activity = am[t.activity];
    t.control = cm[t.control];
  }
  out.normalize();
  return out;
}

std::vector<std::pair<StateId, StateId>> Bisimulation::pairs() const {
  std::vector<std::pair<StateId, StateId>> out;
  for (StateId l = 0; l < left_size; ++l)
    for (StateId r = 0; r < right_size; ++r)
      if (related[l][r]) out.emplace_back(l, r);
  return out;
}

Bisimulation Bisimulation::from_pairs(std::size_t nl, std::size_t nr,
                                      const std::vector<std::pair<StateId, StateId>>& ps) {
  Bisimulation b;
  b.left_size = nl;
  b.right_size = nr;
  b.related.assign(nl, std::vector<bool>(nr, false));
  for (auto [l, r] : ps) b.related.at(l).at(r) = true;
  return b;
}

namespace {

// Partition refinement on the disjoint union; states of t are offset by |s|.
std::vector<std::size_t> refine(const ControlledAutomaton& s, const ControlledAutomaton& t, bool use_f) {
  const std::size_t n = s.num_states(), total = n + t.num_states();
  std::vector<std::vector<Transition>> out(total);
  for (const auto& tr : s.transitions) out[tr.from].push_back(tr);
  for (auto tr : t.transitions) {
    tr.from += n;
    tr.to += n;
    out[tr.from].push_back(tr);
  }
  std::vector<std::size_t> block(total, 0);
  if (use_f) {
    auto fs = s.accepting_mask(), ft = t.accepting_mask();
    for (std::size_t i = 0; i < n; ++i) block[i] = fs[i] ? 1 : 0;
    for (std::size_t i = 0; i < t.num_states(); ++i) block[n + i] = ft[i] ? 1 : 0;
  }
  std::size_t count = 0;
  for (;;) {
    using Sig = std::pair<std::size_t, std::vector<std::tuple<SymbolId, SymbolId, std::size_t>>>;
    std::map<Sig, std::size_t> ids;
    std::vector<std::size_t> next(total);
    for (std::size_t q = 0; q < total; ++q) {
      Sig sig;
      sig.first = block[q];
      for (const auto& tr : out[q]) sig.second.emplace_back(tr.activity, tr.control, block[tr.to]);
      std::sort(sig.second.begin(), sig.second.end());
      sig.second.erase(std::unique(sig.second.begin(), sig.second.end()), sig.second.end());
      auto it = ids.emplace(std::move(sig), ids.size()).first;
      next[q] = it->second;
    }
    block = std::move(next);
    if (ids.size() == count) break;
    count = ids.size();
  }
  return block;
}

}  // namespace

std::optional<Bisimulation> coarsest_bisimulation(const ControlledAutomaton& s, const ControlledAutomaton& t0) {
  ControlledAutomaton t = align_alphabets(s, t0);
  const bool use_f = s.accepting.has_value() && t.accepting.has_value();
  const std::size_t n = s.num_states(), m = t.num_states();
  auto block = refine(s, t, use_f);

  std::set<std::size_t> left_blocks, right_blocks, left_init, right_init;
  for (std::size_t i = 0; i < n; ++i) left_blocks.insert(block[i]);
  for (std::size_t j = 0; j < m; ++j) right_blocks.insert(block[n + j]);
  if (left_blocks != right_blocks) return std::nullopt;
  for (StateId q : s.initial) left_init.insert(block[q]);
  for (StateId q : t.initial) right_init.insert(block[n + q]);
  if (left_init != right_init) return std::nullopt;

  Bisimulation b;
  b.left_size = n;
  b.right_size = m;
  b.related.assign(n, std::vector<bool>(m, false));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) b.related[i][j] = block[i] == block[n + j];
  return b;
}

bool is_bisimulation(const ControlledAutomaton& s, const ControlledAutomaton& t0, const Bisimulation& rel) {
  ControlledAutomaton t = align_alphabets(s, t0);
  const std::size_t n = s.num_states(), m = t.num_states();
  if (rel.left_size != n || rel.right_size != m) return false;
  for (std::size_t i = 0; i < n; ++i) {
    bool any = false;
    for (std::size_t j = 0; j < m; ++j) any = any || rel.related[i][j];
    if (!any) return false;
  }
  for (std::size_t j = 0; j < m; ++j) {
    bool any = false;
    for (std::size_t i = 0; i < n; ++i) any = any || rel.related[i][j];
    if (!any) return false;
  }
  for (StateId q : s.initial) {
    bool ok = false;
    for (StateId r : t.initial) ok = ok || rel.related[q][r];
    if (!ok) return false;
  }
  for (StateId r : t.initial) {
    bool ok = false;
    for (StateId q : s.initial) ok = ok || rel.related[q][r];
    if (!ok) return false;
  }
  auto as = s.adjacency(), at = t.adjacency();
  const bool use_f = s.accepting && t.accepting;
  auto fs = s.accepting_mask(), ft = t.accepting_mask();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (!rel.related[i][j]) continue;
      if (use_f && fs[i] != ft[j]) return false;
      for (const auto& x : as[i]) {
        bool ok = false;
        for (const auto& y : at[j])
          ok = ok || (y.activity == x.activity && y.control == x.control && rel.related[x.to][y.to]);
        if (!ok) return false;
      }
      for (const auto& y : at[j]) {
        bool ok = false;
        for (const auto& x : as[i])
          ok = ok || (y.activity == x.activity && y.control == x.control && rel.related[x.to][y.to]);
        if (!ok) return false;
      }
    }
  }
  return true;
}

std::optional<std::vector<StateId>> find_isomorphism(const ControlledAutomaton& s, const ControlledAutomaton& t0) {
  ControlledAutomaton t = align_alphabets(s, t0);
  ControlledAutomaton sn = s;
  sn.normalize();
  t.normalize();
  const std::size_t n = sn.num_states();
  if (n != t.num_states() || sn.transitions.size() != t.transitions.size() ||
      sn.initial.size() != t.initial.size() || sn.accepting.has_value() != t.accepting.has_value() ||
      (sn.accepting && sn.accepting->size() != t.accepting->size()))
    return std::nullopt;
  auto bis = coarsest_bisimulation(sn, t);
  if (!bis) return std::nullopt;

  // Degree signature per state: initial/accepting flags and per-label in/out counts.
  auto signature = [](const ControlledAutomaton& a) {
    std::vector<std::map<std::tuple<int, SymbolId, SymbolId>, int>> sig(a.num_states());
    for (const auto& tr : a.transitions) {
      sig[tr.from][{0, tr.activity, tr.control}]++;
      sig[tr.to][{1, tr.activity, tr.control}]++;
    }
    for (StateId q : a.initial) sig[q][{2, 0, 0}] = 1;
    if (a.accepting)
      for (StateId q : *a.accepting) sig[q][{3, 0, 0}] = 1;
    return sig;
  };
  auto ss = signature(sn), st = signature(t);

  std::vector<std::vector<StateId>> cand(n);
  for (StateId q = 0; q < n; ++q) {
    for (StateId r = 0; r < n; ++r)
      if (bis->related[q][r] && ss[q] == st[r]) cand[q].push_back(r);
    if (cand[q].empty()) return std::nullopt;
  }

  std::set<Transition> tset(t.transitions.begin(), t.transitions.end());
  std::vector<std::vector<Transition>> out(n), in(n);
  for (const auto& tr : sn.transitions) {
    out[tr.from].push_back(tr);
    in[tr.to].push_back(tr);
  }

  // Visit states in BFS order so constraints propagate early.
  std::vector<StateId> order;
  std::vector<bool> seen(n, false);
  for (StateId root = 0; root < n; ++root) {
    if (seen[root]) continue;
    std::deque<StateId> dq{root};
    seen[root] = true;
    while (!dq.empty()) {
      StateId q = dq.front();
      dq.pop_front();
      order.push_back(q);
      auto visit = [&](StateId x) {
        if (!seen[x]) {
          seen[x] = true;
          dq.push_back(x);
        }
      };
      for (const auto& tr : out[q]) visit(tr.to);
      for (const auto& tr : in[q]) visit(tr.from);
    }
  }

  const StateId none = static_cast<StateId>(-1);
  std::vector<StateId> f(n, none);
  std::vector<bool> used(n, false);

  auto consistent = [&](StateId q, StateId r) {
    for (const auto& tr : out[q]) {
      StateId w = tr.to == q ? r : f[tr.to];
      if (w != none && !tset.count({r, tr.activity, tr.control, w})) return false;
    }
    for (const auto& tr : in[q]) {
      StateId u = tr.from == q ? r : f[tr.from];
      if (u != none && !tset.count({u, tr.activity, tr.control, r})) return false;
    }
    return true;
  };

  std::function<bool(std::size_t)> search = [&](std::size_t k) -> bool {
    if (k == n) return true;
    StateId q = order[k];
    for (StateId r : cand[q]) {
      if (used[r] || !consistent(q, r)) continue;
      f[q] = r;
      used[r] = true;
      if (search(k + 1)) return true;
      f[q] = none;
      used[r] = false;
    }
    return false;
  };
  if (!search(0)) return std::nullopt;
  return f;
}

bool is_isomorphic(const ControlledAutomaton& s, const ControlledAutomaton& t) {
  return find_isomorphism(s, t).has_value();
}

UnionResult disjoint_union(const ControlledAutomaton& s1, const ControlledAutomaton& s2_in) {
  ControlledAutomaton s2 = align_alphabets(s1, s2_in);
  UnionResult u;
  ControlledAutomaton& a = u.automaton;
  a.activities = s1.activities;
  a.controls = s1.controls;
  for (StateId q = 0; q < s1.num_states(); ++q) {
    u.left_map.push_back(a.states.size());
    a.states.push_back("L:" + s1.states[q]);
  }
  for (StateId q = 0; q < s2.num_states(); ++q) {
    u.right_map.push_back(a.states.size());
    a.states.push_back("R:" + s2.states[q]);
  }
  for (auto tr : s1.transitions) a.transitions.push_back({u.left_map[tr.from], tr.activity, tr.control, u.left_map[tr.to]});
  for (auto tr : s2.transitions)
    a.transitions.push_back({u.right_map[tr.from], tr.activity, tr.control, u.right_map[tr.to]});
  for (StateId q : s1.initial) a.initial.push_back(u.left_map[q]);
  for (StateId q : s2.initial) a.initial.push_back(u.right_map[q]);
  if (s1.accepting || s2.accepting) {
    a.accepting.emplace();
    if (s1.accepting)
      for (StateId q : *s1.accepting) a.accepting->push_back(u.left_map[q]);
    if (s2.accepting)
      for (StateId q : *s2.accepting) a.accepting->push_back(u.right_map[q]);
  }
  a.normalize();
  return u;
}

ProductResult synchronous_product(const ControlledAutomaton& s1, const ControlledAutomaton& s2_in, ProductMode mode) {
  {
    std::set<std::string> x(s1.activities.begin(), s1.activities.end()),
        y(s2_in.activities.begin(), s2_in.activities.end());
    if (x != y || s1.activities.size() != s2_in.activities.size())
      throw AlphabetMismatch("activity alphabets differ");
  }
  // Re-index s2's activities to s1's order; controls stay separate.
  ControlledAutomaton s2 = s2_in;
  s2.activities = s1.activities;
  for (auto& tr : s2.transitions) tr.activity = *index_of(s1.activities, s2_in.activities[tr.activity]);

  if (mode == ProductMode::buchi && (!s1.accepting || !s2.accepting))
    throw ModelError("Buchi intersection needs accepting sets on both automata");

  ProductResult pr;
  pr.left_states = s1.num_states();
  pr.right_states = s2.num_states();
  pr.right_controls = s2.controls.size();
  pr.phase_count = mode == ProductMode::buchi ? 2 : 1;
  ControlledAutomaton& p = pr.automaton;
  p.activities = s1.activities;
  for (const auto& c1 : s1.controls)
    for (const auto& c2 : s2.controls) p.controls.push_back("(" + c1 + "," + c2 + ")");
  for (StateId q1 = 0; q1 < s1.num_states(); ++q1)
    for (StateId q2 = 0; q2 < s2.num_states(); ++q2)
      for (std::size_t k = 0; k < pr.phase_count; ++k)
        p.states.push_back("(" + s1.states[q1] + "," + s2.states[q2] +
                           (mode == ProductMode::buchi ? "," + std::to_string(k) : std::string()) + ")");

  auto f1 = s1.accepting_mask(), f2 = s2.accepting_mask();
  std::vector<std::vector<const Transition*>> by_act2(s2.activities.size());
  for (const auto& t2 : s2.transitions) by_act2[t2.activity].push_back(&t2);
  for (const auto& t1 : s1.transitions) {
    for (const Transition* t2 : by_act2[t1.activity]) {
      SymbolId c = pr.control_of(t1.control, t2->control);
      for (int k = 0; k < static_cast<int>(pr.phase_count); ++k) {
        int next = k;
        if (mode == ProductMode::buchi) next = k == 0 ? (f1[t1.from] ? 1 : 0) : (f2[t2->from] ? 0 : 1);
        p.transitions.push_back({pr.state_of(t1.from, t2->from, k), t1.activity, c, pr.state_of(t1.to, t2->to, next)});
      }
    }
  }
  for (StateId q1 : s1.initial)
    for (StateId q2 : s2.initial) p.initial.push_back(pr.state_of(q1, q2, 0));

  if (mode == ProductMode::buchi) {
    p.accepting.emplace();
    for (StateId q1 = 0; q1 < s1.num_states(); ++q1)
      if (f1[q1])
        for (StateId q2 = 0; q2 < s2.num_states(); ++q2) p.accepting->push_back(pr.state_of(q1, q2, 0));
  } else if (s1.accepting || s2.accepting) {
    // A side without F accepts everywhere.
    p.accepting.emplace();
    for (StateId q1 = 0; q1 < s1.num_states(); ++q1)
      for (StateId q2 = 0; q2 < s2.num_states(); ++q2)
        if ((!s1.accepting || f1[q1]) && (!s2.accepting || f2[q2])) p.accepting->push_back(pr.state_of(q1, q2, 0));
  }
  p.normalize();
  return pr;
}

bool is_deterministic(const ControlledAutomaton& s) {
  if (s.initial.size() > 1) return false;
  std::set<std::tuple<StateId, SymbolId, SymbolId>> seen;
  ControlledAutomaton n = s;
  n.normalize();
  for (const auto& t : n.transitions)
    if (!seen.insert({t.from, t.activity, t.control}).second) return false;
  return true;
}

ComplementResult complement_deterministic(const ControlledAutomaton& s) {
  if (!is_deterministic(s)) throw ModelError("complement by flipping needs a deterministic automaton");
  ComplementResult r;
  r.automaton = s;
  ControlledAutomaton& a = r.automaton;
  a.normalize();
  std::set<std::tuple<StateId, SymbolId, SymbolId>> present;
  for (const auto& t : a.transitions) present.insert({t.from, t.activity, t.control});
  const std::size_t n = a.num_states();
  std::vector<Transition> missing;
  for (StateId q = 0; q < n; ++q)
    for (SymbolId x = 0; x < a.activities.size(); ++x)
      for (SymbolId c = 0; c < a.controls.size(); ++c)
        if (!present.count({q, x, c})) missing.push_back({q, x, c, n});
  if (!missing.empty() || a.initial.empty()) {
    std::string name = "sink";
    while (a.find_state(name)) name += "'";
    r.sink = n;
    a.states.push_back(name);
    for (auto& t : missing) a.transitions.push_back(t);
    for (SymbolId x = 0; x < a.activities.size(); ++x)
      for (SymbolId c = 0; c < a.controls.size(); ++c) a.transitions.push_back({n, x, c, n});
    if (a.initial.empty()) a.initial.push_back(n);
  }
  auto f = s.accepting_mask();
  f.resize(a.num_states(), false);
  a.accepting.emplace();
  for (StateId q = 0; q < a.num_states(); ++q)
    if (!f[q]) a.accepting->push_back(q);
  a.normalize();
  return r;
}

}  // namespace csan
