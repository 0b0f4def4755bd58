#include "csan/lang_analysis.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "csan/error.hpp"
#include "csan/pushdown.hpp"

namespace csan {

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::empty: return "empty";
    case Verdict::nonempty: return "nonempty";
    case Verdict::unknown: return "unknown";
  }
  return "?";
}

namespace {

struct Config {
  StateId q;
  PolicyState s;
  bool operator==(const Config& o) const { return q == o.q && s == o.s; }
};

struct ConfigHash {
  std::size_t operator()(const Config& c) const { return PolicyStateHash{}(c.s) * 1000003u ^ c.q; }
};

using ByQA = std::vector<std::vector<std::vector<const Transition*>>>;

ByQA index_by_qa(const ControlledAutomaton& s) {
  ByQA by(s.num_states(), std::vector<std::vector<const Transition*>>(s.activities.size()));
  for (const auto& t : s.transitions) by[t.from][t.activity].push_back(&t);
  return by;
}

void check_word(const ControlledAutomaton& s, std::span<const SymbolId> w) {
  for (SymbolId a : w)
    if (a >= s.activities.size()) throw ModelError("letter " + std::to_string(a) + " outside the activity alphabet");
}

void require_finite_class(const PolicySpec& spec) {
  auto c = policy_class(spec);
  if (c != PolicyClass::memoryless && c != PolicyClass::finite_memory)
    throw ModelError(std::string("this check needs a memoryless or finite-memory policy, got ") + to_string(c));
}

// Shortest path in the plant graph from Q0 to F with free labels.
std::optional<Witness> shortest_accepting_path(const ControlledAutomaton& s) {
  auto f = s.accepting_mask();
  const StateId none = static_cast<StateId>(-1);
  std::vector<StateId> parent(s.num_states(), none);
  std::vector<const Transition*> via(s.num_states(), nullptr);
  std::vector<bool> seen(s.num_states(), false);
  std::deque<StateId> dq;
  for (StateId q : s.initial)
    if (!seen[q]) {
      seen[q] = true;
      dq.push_back(q);
    }
  auto adj = s.adjacency();
  while (!dq.empty()) {
    StateId q = dq.front();
    dq.pop_front();
    if (f[q]) {
      Witness w;
      for (StateId x = q; x != none; x = parent[x]) {
        w.states.push_back(x);
        if (via[x]) {
          w.word.push_back(via[x]->activity);
          w.controls.push_back(via[x]->control);
        }
      }
      std::reverse(w.states.begin(), w.states.end());
      std::reverse(w.word.begin(), w.word.end());
      std::reverse(w.controls.begin(), w.controls.end());
      return w;
    }
    for (const auto& t : adj[q]) {
      if (seen[t.to]) continue;
      seen[t.to] = true;
      parent[t.to] = q;
      via[t.to] = &t;
      dq.push_back(t.to);
    }
  }
  return std::nullopt;
}

// Memoryless policy that plays controls[i] at states[i]; states must be distinct
// wherever their controls differ.
MemorylessPolicy memoryless_from_run(const ControlledAutomaton& s, const std::vector<StateId>& states,
                                     const std::vector<ControlId>& controls) {
  auto p = MemorylessPolicy::constant(PolicyDims::of(s), 0);
  for (std::size_t i = 0; i < controls.size(); ++i) p.output[states[i]] = ControlDist::point(controls[i]);
  return p;
}

// Memory = position along stem followed by cycle; memory L is the start.
FiniteMemoryPolicy counter_from_lasso(const ControlledAutomaton& s, const std::vector<ControlId>& stem,
                                      const std::vector<ControlId>& cycle) {
  const std::size_t L = stem.size() + cycle.size();
  auto p = FiniteMemoryPolicy::make(PolicyDims::of(s), L + 1, L);
  p.reads_state = false;
  for (SymbolId a = 0; a < s.activities.size(); ++a) {
    p.set_next_all_states(L, a, 0);
    for (std::size_t i = 0; i < L; ++i) p.set_next_all_states(i, a, i + 1 < L ? i + 1 : stem.size());
  }
  for (std::size_t i = 0; i < L; ++i)
    p.set_output_all_states(i, ControlDist::point(i < stem.size() ? stem[i] : cycle[i - stem.size()]));
  return p;
}

struct StackConfig {
  StateId q;
  std::vector<TapeSymbol> stack;  // bottom first
  bool flag = false;
  bool operator==(const StackConfig& o) const { return q == o.q && stack == o.stack && flag == o.flag; }
};

struct StackConfigHash {
  std::size_t operator()(const StackConfig& c) const {
    std::size_t h = c.q * 2 + (c.flag ? 1 : 0);
    for (auto x : c.stack) h = h * 1000003u + x + 1;
    return h;
  }
};

struct StackMove {
  SymbolId a;
  ControlId c;
  StateId to;
  std::vector<TapeSymbol> stack;
};

// Successor configurations under a stack policy; moves that would pop the
// last remaining symbol are dropped (the search treats it as a floor).
std::vector<StackMove> stack_moves(const ControlledAutomaton& s, const ByQA& by, const StackPolicy& p, StateId q,
                                   const std::vector<TapeSymbol>& st) {
  std::vector<StackMove> out;
  for (SymbolId a = 0; a < s.activities.size(); ++a) {
    if (by[q][a].empty()) continue;
    const auto& w = p.update_of(st.back(), q, a);
    if (w.empty() && st.size() == 1) continue;
    std::vector<TapeSymbol> ns(st.begin(), st.end() - 1);
    for (auto it = w.rbegin(); it != w.rend(); ++it) ns.push_back(*it);
    for (auto [c, wt] : p.output_of(q, ns.back()).weights)
      for (const Transition* t : by[q][a])
        if (t->control == c) out.push_back({a, c, t->to, ns});
  }
  return out;
}

template <class Goal>
std::optional<Witness> stack_bfs(const ControlledAutomaton& s, const ByQA& by, const StackPolicy& p,
                                 std::vector<StackConfig> starts, Goal goal, bool need_step, std::size_t budget,
                                 std::size_t max_height) {
  auto f = s.accepting_mask();
  std::vector<StackConfig> nodes;
  std::vector<long> parent;
  std::vector<std::pair<SymbolId, ControlId>> via;
  std::unordered_map<StackConfig, std::size_t, StackConfigHash> seen;
  std::deque<std::size_t> dq;
  for (auto& c : starts) {
    if (seen.emplace(c, nodes.size()).second) {
      nodes.push_back(c);
      parent.push_back(-1);
      via.push_back({0, 0});
      dq.push_back(nodes.size() - 1);
    }
  }
  while (!dq.empty()) {
    std::size_t n = dq.front();
    dq.pop_front();
    if ((!need_step || parent[n] >= 0) && goal(nodes[n])) {
      Witness w;
      for (long x = static_cast<long>(n); x >= 0; x = parent[x]) {
        w.states.push_back(nodes[x].q);
        if (parent[x] >= 0) {
          w.word.push_back(via[x].first);
          w.controls.push_back(via[x].second);
        }
      }
      std::reverse(w.states.begin(), w.states.end());
      std::reverse(w.word.begin(), w.word.end());
      std::reverse(w.controls.begin(), w.controls.end());
      return w;
    }
    StackConfig cur = nodes[n];
    for (auto& mv : stack_moves(s, by, p, cur.q, cur.stack)) {
      if (mv.stack.size() > max_height) continue;
      StackConfig nx{mv.to, std::move(mv.stack), cur.flag || f[cur.q]};
      if (!seen.count(nx)) {
        if (nodes.size() >= budget) return std::nullopt;
        seen.emplace(nx, nodes.size());
        nodes.push_back(nx);
        parent.push_back(static_cast<long>(n));
        via.push_back({mv.a, mv.c});
        dq.push_back(nodes.size() - 1);
      }
    }
  }
  return std::nullopt;
}

std::vector<std::vector<std::pair<std::size_t, std::size_t>>> plant_graph(const ControlledAutomaton& s) {
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> out(s.num_states());
  for (std::size_t i = 0; i < s.transitions.size(); ++i) out[s.transitions[i].from].push_back({i, s.transitions[i].to});
  return out;
}

}  // namespace

bool accepts_finite(const ControlledAutomaton& s, const PolicySpec& spec, std::span<const SymbolId> word) {
  check_word(s, word);
  if (!s.accepting) throw ModelError("finite-word acceptance needs an accepting set");
  auto by = index_by_qa(s);
  std::unordered_set<Config, ConfigHash> cur;
  PolicyState init = initial_policy_state(spec);
  for (StateId q : s.initial) cur.insert({q, init});
  for (SymbolId a : word) {
    std::unordered_set<Config, ConfigHash> nxt;
    for (const auto& cfg : cur) {
      if (by[cfg.q][a].empty()) continue;
      PolicyStep st = policy_step(spec, cfg.s, {cfg.q, a});
      for (auto [c, w] : st.output.weights)
        for (const Transition* t : by[cfg.q][a])
          if (t->control == c) nxt.insert({t->to, st.state});
    }
    cur = std::move(nxt);
    if (cur.empty()) return false;
  }
  auto f = s.accepting_mask();
  return std::any_of(cur.begin(), cur.end(), [&](const Config& c) { return f[c.q]; });
}

std::optional<Lasso> find_accepting_lasso(const std::vector<std::vector<std::pair<std::size_t, std::size_t>>>& out,
                                          const std::vector<std::size_t>& roots, const std::vector<bool>& accepting) {
  const std::size_t n = out.size();
  std::vector<bool> outer_seen(n, false), inner_seen(n, false);
  struct Frame {
    std::size_t node;
    std::size_t next;
    std::size_t via;  // edge id used to enter, or npos for a root
  };
  const std::size_t npos = static_cast<std::size_t>(-1);

  auto inner = [&](std::size_t s) -> std::optional<std::vector<std::size_t>> {
    std::vector<Frame> st{{s, 0, npos}};
    inner_seen[s] = true;
    while (!st.empty()) {
      Frame& f = st.back();
      if (f.next == out[f.node].size()) {
        st.pop_back();
        continue;
      }
      auto [e, to] = out[f.node][f.next++];
      if (to == s) {
        std::vector<std::size_t> cyc;
        for (std::size_t i = 1; i < st.size(); ++i) cyc.push_back(st[i].via);
        cyc.push_back(e);
        return cyc;
      }
      if (!inner_seen[to]) {
        inner_seen[to] = true;
        st.push_back({to, 0, e});
      }
    }
    return std::nullopt;
  };

  for (std::size_t r : roots) {
    if (r >= n || outer_seen[r]) continue;
    std::vector<Frame> st{{r, 0, npos}};
    outer_seen[r] = true;
    while (!st.empty()) {
      Frame& f = st.back();
      if (f.next < out[f.node].size()) {
        auto [e, to] = out[f.node][f.next++];
        if (!outer_seen[to]) {
          outer_seen[to] = true;
          st.push_back({to, 0, e});
        }
        continue;
      }
      std::size_t v = f.node;
      if (accepting[v]) {
        if (auto cyc = inner(v)) {
          Lasso l;
          l.root = r;
          l.anchor = v;
          for (std::size_t i = 1; i < st.size(); ++i) l.stem_edges.push_back(st[i].via);
          l.cycle_edges = std::move(*cyc);
          return l;
        }
      }
      st.pop_back();
    }
  }
  return std::nullopt;
}

bool accepts_ultimately_periodic(const ControlledBuchiAutomaton& s, const PolicySpec& spec,
                                 const UltimatelyPeriodicWord& w) {
  require_finite_class(spec);
  if (w.period.empty()) throw ModelError("ultimately periodic word needs a nonempty period");
  if (!s.accepting) throw ModelError("Buchi acceptance needs an accepting set");
  check_word(s, w.prefix);
  check_word(s, w.period);
  std::vector<SymbolId> letters = w.prefix;
  letters.insert(letters.end(), w.period.begin(), w.period.end());
  const std::size_t len = letters.size(), loop = w.prefix.size();
  auto by = index_by_qa(s);
  auto f = s.accepting_mask();

  struct Node {
    StateId q;
    PolicyState m;
    std::size_t pos;
    bool operator==(const Node& o) const { return q == o.q && pos == o.pos && m == o.m; }
  };
  struct NodeHash {
    std::size_t operator()(const Node& n) const { return (PolicyStateHash{}(n.m) * 31 + n.q) * 131 + n.pos; }
  };
  std::vector<Node> nodes;
  std::unordered_map<Node, std::size_t, NodeHash> index;
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> out;
  std::deque<std::size_t> work;
  auto intern = [&](Node nd) {
    auto [it, fresh] = index.emplace(nd, nodes.size());
    if (fresh) {
      nodes.push_back(std::move(nd));
      out.emplace_back();
      work.push_back(it->second);
    }
    return it->second;
  };
  std::vector<std::size_t> roots;
  PolicyState init = initial_policy_state(spec);
  for (StateId q : s.initial) roots.push_back(intern({q, init, 0}));
  std::size_t edge_id = 0;
  while (!work.empty()) {
    std::size_t n = work.front();
    work.pop_front();
    Node cur = nodes[n];
    SymbolId a = letters[cur.pos];
    if (by[cur.q][a].empty()) continue;
    PolicyStep st = policy_step(spec, cur.m, {cur.q, a});
    std::size_t npos = cur.pos + 1 < len ? cur.pos + 1 : loop;
    for (auto [c, wt] : st.output.weights)
      for (const Transition* t : by[cur.q][a])
        if (t->control == c) {
          std::size_t to = intern({t->to, st.state, npos});
          out[n].push_back({edge_id++, to});
        }
  }
  std::vector<bool> acc(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) acc[i] = f[nodes[i].q];
  return find_accepting_lasso(out, roots, acc).has_value();
}

EmptinessResult emptiness_finite(const ControlledAutomaton& s, PolicyClass cls, const EmptinessOptions& opt) {
  if (!s.accepting) throw ModelError("emptiness needs an accepting set");
  EmptinessResult r;
  if (cls == PolicyClass::stack) {
    if (!opt.stack_policy) throw ModelError("stack-class emptiness needs a concrete stack policy");
    const StackPolicy& p = *opt.stack_policy;
    PushdownSystem pds = closed_loop_pushdown(s, p);
    auto reach = reachable_locations(pds);
    bool hit = false;
    for (StateId q = 0; q < s.num_states(); ++q) hit = hit || (reach[q] && pds.accepting[q]);
    if (!hit) {
      r.verdict = Verdict::empty;
      return r;
    }
    r.verdict = Verdict::nonempty;
    auto by = index_by_qa(s);
    auto f = s.accepting_mask();
    std::vector<StackConfig> starts;
    for (StateId q : s.initial) starts.push_back({q, {p.bottom}, false});
    auto w = stack_bfs(
        s, by, p, starts, [&](const StackConfig& c) { return f[c.q]; }, false, opt.budget.max_states,
        static_cast<std::size_t>(-1));
    if (w) {
      w->policy = PolicySpec{p};
      r.witness = std::move(w);
    } else {
      r.note = "witness search exhausted its budget";
    }
    return r;
  }

  auto path = shortest_accepting_path(s);
  if (!path) {
    r.verdict = Verdict::empty;
    return r;
  }
  if (cls == PolicyClass::tape || cls == PolicyClass::history) {
    r.bound = opt.bound;
    if (path->word.size() > opt.bound) {
      r.verdict = Verdict::unknown;
      r.note = "no accepting word within the bound";
      return r;
    }
  }
  r.verdict = Verdict::nonempty;
  path->policy = PolicySpec{memoryless_from_run(s, path->states, path->controls)};
  r.witness = std::move(path);
  return r;
}

EmptinessResult emptiness_buchi(const ControlledBuchiAutomaton& s, PolicyClass cls, const EmptinessOptions& opt) {
  if (!s.accepting) throw ModelError("Buchi emptiness needs an accepting set");
  EmptinessResult r;
  auto f = s.accepting_mask();

  if (cls == PolicyClass::stack) {
    if (!opt.stack_policy) throw ModelError("stack-class emptiness needs a concrete stack policy");
    const StackPolicy& p = *opt.stack_policy;
    PushdownSystem pds = closed_loop_pushdown(s, p);
    auto heads = reachable_heads(pds);
    auto rep = repeating_heads(pds);
    std::set<std::pair<std::size_t, std::size_t>> rs(rep.begin(), rep.end());
    std::vector<std::pair<std::size_t, std::size_t>> live;
    for (auto h : heads)
      if (rs.count(h) && h.first < s.num_states()) live.push_back(h);
    // Heads at helper locations also witness nonemptiness.
    bool any = !live.empty();
    for (auto h : heads) any = any || rs.count(h);
    if (!any) {
      r.verdict = Verdict::empty;
      return r;
    }
    r.verdict = Verdict::nonempty;
    auto by = index_by_qa(s);
    std::size_t cap = 64;
    for (auto [loc, top] : live) {
      std::vector<StackConfig> starts;
      for (StateId q : s.initial) starts.push_back({q, {p.bottom}, false});
      auto stem = stack_bfs(
          s, by, p, starts, [&](const StackConfig& c) { return c.q == loc && c.stack.back() == top; }, false,
          opt.budget.max_states, cap);
      if (!stem) continue;
      auto cyc = stack_bfs(
          s, by, p, {{loc, {top}, false}},
          [&](const StackConfig& c) { return c.q == loc && c.stack.back() == top && c.flag; }, true,
          opt.budget.max_states, cap);
      if (!cyc) continue;
      Witness w = std::move(*stem);
      w.cycle_states = std::move(cyc->states);
      w.cycle_word = std::move(cyc->word);
      w.cycle_controls = std::move(cyc->controls);
      w.policy = PolicySpec{p};
      r.witness = std::move(w);
      return r;
    }
    r.note = "witness search exhausted its budget";
    return r;
  }

  auto graph = plant_graph(s);
  std::vector<std::size_t> roots(s.initial.begin(), s.initial.end());
  auto lasso = find_accepting_lasso(graph, roots, f);
  if (!lasso) {
    r.verdict = Verdict::empty;
    return r;
  }

  // Stem states/controls, then cut the stem at its first visit to a cycle
  // state and rotate the cycle to start there, so every state occurs once.
  std::vector<StateId> stem_states{lasso->root}, cyc_states{lasso->anchor};
  std::vector<SymbolId> stem_word, cyc_word;
  std::vector<ControlId> stem_ctl, cyc_ctl;
  for (std::size_t e : lasso->stem_edges) {
    const auto& t = s.transitions[e];
    stem_word.push_back(t.activity);
    stem_ctl.push_back(t.control);
    stem_states.push_back(t.to);
  }
  for (std::size_t e : lasso->cycle_edges) {
    const auto& t = s.transitions[e];
    cyc_word.push_back(t.activity);
    cyc_ctl.push_back(t.control);
    cyc_states.push_back(t.to);
  }
  cyc_states.pop_back();  // back at the anchor
  std::size_t cut = stem_states.size() - 1, rot = 0;
  for (std::size_t i = 0; i < stem_states.size(); ++i) {
    auto it = std::find(cyc_states.begin(), cyc_states.end(), stem_states[i]);
    if (it != cyc_states.end()) {
      cut = i;
      rot = static_cast<std::size_t>(it - cyc_states.begin());
      break;
    }
  }
  stem_states.resize(cut + 1);
  stem_word.resize(cut);
  stem_ctl.resize(cut);
  std::rotate(cyc_states.begin(), cyc_states.begin() + rot, cyc_states.end());
  std::rotate(cyc_word.begin(), cyc_word.begin() + rot, cyc_word.end());
  std::rotate(cyc_ctl.begin(), cyc_ctl.begin() + rot, cyc_ctl.end());

  Witness w;
  w.states = stem_states;
  w.word = stem_word;
  w.controls = stem_ctl;
  w.cycle_states = cyc_states;
  w.cycle_states.push_back(cyc_states.front());
  w.cycle_word = cyc_word;
  w.cycle_controls = cyc_ctl;

  if (cls == PolicyClass::tape || cls == PolicyClass::history) {
    r.bound = opt.bound;
    if (w.word.size() + w.cycle_word.size() > opt.bound) {
      r.verdict = Verdict::unknown;
      r.note = "no accepting lasso within the bound";
      return r;
    }
  }
  r.verdict = Verdict::nonempty;
  if (cls == PolicyClass::memoryless) {
    std::vector<StateId> all(stem_states.begin(), stem_states.end() - 1);
    all.insert(all.end(), cyc_states.begin(), cyc_states.end());
    std::vector<ControlId> ctl = stem_ctl;
    ctl.insert(ctl.end(), cyc_ctl.begin(), cyc_ctl.end());
    w.policy = PolicySpec{memoryless_from_run(s, all, ctl)};
  } else {
    w.policy = PolicySpec{counter_from_lasso(s, stem_ctl, cyc_ctl)};
  }
  r.witness = std::move(w);
  return r;
}

bool verify_stack_lasso(const ControlledBuchiAutomaton& s, const StackPolicy& p, const Witness& w,
                        std::size_t periods) {
  if (w.cycle_word.empty() || w.states.empty() || w.cycle_states.empty()) return false;
  std::set<Transition> ts(s.transitions.begin(), s.transitions.end());
  auto f = s.accepting_mask();
  PolicySpec spec{p};
  PolicyState st = initial_policy_state(spec);
  if (!s.is_initial(w.states.front())) return false;
  auto step = [&](StateId q, SymbolId a, ControlId c, StateId to) {
    if (!ts.count({q, a, c, to})) return false;
    PolicyStep ps = policy_step(spec, st, {q, a});
    if (ps.output.weight(c) <= 0) return false;
    st = std::move(ps.state);
    return true;
  };
  for (std::size_t i = 0; i < w.word.size(); ++i)
    if (!step(w.states[i], w.word[i], w.controls[i], w.states[i + 1])) return false;
  if (w.states.back() != w.cycle_states.front()) return false;
  TapeSymbol top = std::get<std::vector<TapeSymbol>>(st).back();
  for (std::size_t k = 0; k < periods; ++k) {
    bool visited = false;
    for (std::size_t i = 0; i < w.cycle_word.size(); ++i) {
      visited = visited || f[w.cycle_states[i]];
      if (!step(w.cycle_states[i], w.cycle_word[i], w.cycle_controls[i], w.cycle_states[i + 1])) return false;
    }
    if (!visited || std::get<std::vector<TapeSymbol>>(st).back() != top) return false;
  }
  return true;
}

}  // namespace csan
