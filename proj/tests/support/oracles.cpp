#include "oracles.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <stdexcept>

namespace csan::testing {

namespace {

struct Oracle {
  const StandardNet& n;
  std::vector<std::size_t> timed_index;  // position among timed activities

  explicit Oracle(const StandardNet& net) : n(net) {
    std::size_t k = 0;
    for (const auto& a : n.acts) timed_index.push_back(a.timed ? k++ : static_cast<std::size_t>(-1));
  }

  bool enabled(const StandardNet::Act& a, const Marking& m) const {
    for (PlaceId p : a.inputs)
      if (m[p] == 0) return false;
    return true;
  }

  std::vector<ControlId> admissible(const StandardNet::Act& a) const {
    std::vector<ControlId> cs;
    for (ControlId c = 0; c < a.outputs.size(); ++c)
      if (!a.outputs[c].empty()) cs.push_back(c);
    if (cs.empty())
      for (ControlId c = 0; c < n.controls; ++c) cs.push_back(c);
    return cs;
  }

  Marking fire(const StandardNet::Act& a, std::size_t branch, const Marking& m) const {
    Marking r = m;
    for (PlaceId p : a.inputs) --r[p];
    if (branch < a.outputs.size())
      for (PlaceId p : a.outputs[branch]) ++r[p];
    return r;
  }

  std::vector<Marking> inst_successors(const Marking& m) const {
    std::vector<Marking> out;
    for (const auto& a : n.acts)
      if (!a.timed && enabled(a, m)) out.push_back(fire(a, 0, m));
    return out;
  }

  // Stable markings reachable by instantaneous firings, plus the empty
  // marking when a cycle of them is reachable.
  std::set<Marking> close(const Marking& start) const {
    std::map<Marking, std::vector<Marking>> graph;
    std::deque<Marking> todo{start};
    graph[start];
    while (!todo.empty()) {
      Marking m = todo.front();
      todo.pop_front();
      auto succ = inst_successors(m);
      graph[m] = succ;
      for (const auto& s : succ)
        if (!graph.count(s)) {
          graph[s];
          todo.push_back(s);
        }
    }
    // Kahn: a cycle exists iff some node is never freed.
    std::map<Marking, std::size_t> indeg;
    for (auto& [m, succ] : graph) {
      indeg[m];
      for (const auto& s : succ) ++indeg[s];
    }
    std::deque<Marking> free;
    for (auto& [m, d] : indeg)
      if (d == 0) free.push_back(m);
    std::size_t removed = 0;
    while (!free.empty()) {
      Marking m = free.front();
      free.pop_front();
      ++removed;
      for (const auto& s : graph[m])
        if (--indeg[s] == 0) free.push_back(s);
    }
    std::set<Marking> out;
    for (auto& [m, succ] : graph)
      if (succ.empty()) out.insert(m);
    if (removed != graph.size()) out.insert(Marking{});
    return out;
  }
};

}  // namespace

MarkingAutomaton brute_force_realization(const StandardNet& n) {
  Oracle o(n);
  MarkingAutomaton r;
  r.initial = o.close(n.initial);
  std::deque<Marking> todo(r.initial.begin(), r.initial.end());
  r.states = r.initial;
  while (!todo.empty()) {
    Marking m = todo.front();
    todo.pop_front();
    if (m.empty()) continue;  // Delta
    for (std::size_t i = 0; i < n.acts.size(); ++i) {
      const auto& a = n.acts[i];
      if (!a.timed || !o.enabled(a, m)) continue;
      for (ControlId c : o.admissible(a))
        for (const auto& t : o.close(o.fire(a, c, m))) {
          r.transitions.insert({m, o.timed_index[i], c, t});
          if (r.states.insert(t).second) todo.push_back(t);
        }
    }
  }
  return r;
}

MarkingAutomaton as_marking_automaton(const Realization& real) {
  MarkingAutomaton r;
  const auto& s = real.automaton;
  auto mk = [&](StateId q) { return real.markings.at(q); };
  for (StateId q = 0; q < s.num_states(); ++q) r.states.insert(mk(q));
  for (StateId q : s.initial) r.initial.insert(mk(q));
  for (const auto& t : s.transitions) r.transitions.insert({mk(t.from), t.activity, t.control, mk(t.to)});
  return r;
}

std::vector<std::vector<ControlId>> all_memoryless(std::size_t states, std::size_t controls) {
  std::vector<std::vector<ControlId>> out;
  std::vector<ControlId> cur(states, 0);
  while (true) {
    out.push_back(cur);
    std::size_t i = 0;
    while (i < states && ++cur[i] == controls) cur[i++] = 0;
    if (i == states) break;
  }
  return out;
}

namespace {

std::vector<std::vector<StateId>> pruned_graph(const ControlledAutomaton& s, const std::vector<ControlId>& pi) {
  std::vector<std::vector<StateId>> g(s.num_states());
  for (const auto& t : s.transitions)
    if (t.control == pi[t.from]) g[t.from].push_back(t.to);
  return g;
}

std::vector<bool> reach_from(const std::vector<std::vector<StateId>>& g, const std::vector<StateId>& roots) {
  std::vector<bool> seen(g.size(), false);
  std::deque<StateId> todo;
  for (StateId r : roots)
    if (!seen[r]) {
      seen[r] = true;
      todo.push_back(r);
    }
  while (!todo.empty()) {
    StateId q = todo.front();
    todo.pop_front();
    for (StateId t : g[q])
      if (!seen[t]) {
        seen[t] = true;
        todo.push_back(t);
      }
  }
  return seen;
}

}  // namespace

bool memoryless_nonempty_finite(const ControlledAutomaton& s, const std::vector<ControlId>& pi) {
  auto seen = reach_from(pruned_graph(s, pi), s.initial);
  auto f = s.accepting_mask();
  for (StateId q = 0; q < s.num_states(); ++q)
    if (seen[q] && f[q]) return true;
  return false;
}

bool memoryless_nonempty_buchi(const ControlledAutomaton& s, const std::vector<ControlId>& pi) {
  auto g = pruned_graph(s, pi);
  auto seen = reach_from(g, s.initial);
  auto f = s.accepting_mask();
  for (StateId q = 0; q < s.num_states(); ++q) {
    if (!seen[q] || !f[q]) continue;
    auto back = reach_from(g, g[q]);
    if (back[q]) return true;
  }
  return false;
}

std::vector<std::vector<bool>> transitive_closure(const ControlledAutomaton& s) {
  const std::size_t n = s.num_states();
  std::vector<std::vector<bool>> r(n, std::vector<bool>(n, false));
  for (const auto& t : s.transitions) r[t.from][t.to] = true;
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      if (r[i][k])
        for (std::size_t j = 0; j < n; ++j)
          if (r[k][j]) r[i][j] = true;
  return r;
}

bool plant_reaches_accepting(const ControlledAutomaton& s) {
  auto r = transitive_closure(s);
  auto f = s.accepting_mask();
  for (StateId q0 : s.initial)
    for (StateId q = 0; q < s.num_states(); ++q)
      if (f[q] && (q == q0 || r[q0][q])) return true;
  return false;
}

bool plant_has_reachable_accepting_cycle(const ControlledAutomaton& s) {
  auto r = transitive_closure(s);
  auto f = s.accepting_mask();
  for (StateId q0 : s.initial)
    for (StateId q = 0; q < s.num_states(); ++q)
      if (f[q] && (q == q0 || r[q0][q]) && r[q][q]) return true;
  return false;
}

double enumerate_word_probability(const Cpa& u, const FiniteMemoryPolicy& p, const std::vector<SymbolId>& w) {
  auto f = u.accepting_mask();
  std::function<double(std::size_t, StateId, MemoryId)> go = [&](std::size_t i, StateId q, MemoryId m) -> double {
    if (i == w.size()) return f[q] ? 1.0 : 0.0;
    const SymbolId a = w[i];
    const MemoryId m2 = p.next[(m * p.dims.states + q) * p.dims.activities + a];
    const ControlDist& d = p.output[q * p.memory + m2];
    double total = 0;
    for (auto [c, wc] : d.weights)
      for (const auto& t : u.transitions)
        if (t.from == q && t.activity == a && t.control == c) total += wc * t.p * go(i + 1, t.to, m2);
    return total;
  };
  double s = 0;
  for (StateId q = 0; q < u.num_states(); ++q)
    if (u.initial[q] > 0) s += u.initial[q] * go(0, q, p.initial);
  return s;
}

std::optional<std::size_t> no_finite_memory_policy_matches(const ControlledAutomaton& plant, std::size_t memory,
                                                          const std::vector<std::vector<SymbolId>>& sample,
                                                          const std::vector<bool>& positive) {
  const std::size_t Q = plant.num_states(), A = plant.activities.size(), C = plant.controls.size();
  if (plant.initial.size() != 1) throw std::invalid_argument("plant needs one initial state");
  std::vector<long> delta(Q * A * C, -1);
  for (const auto& t : plant.transitions) {
    long& d = delta[(t.from * A + t.activity) * C + t.control];
    if (d != -1 && d != static_cast<long>(t.to)) throw std::invalid_argument("plant must be deterministic");
    d = static_cast<long>(t.to);
  }
  for (long d : delta)
    if (d < 0) throw std::invalid_argument("plant must be complete");
  auto f = plant.accepting_mask();

  std::vector<long> next(memory * Q * A, -1);
  std::vector<long> out(Q * memory, -1);
  std::size_t used = 1;  // memory labels used so far, for symmetry breaking
  std::size_t nodes = 0;

  std::function<bool()> search = [&]() -> bool {
    ++nodes;
    for (std::size_t i = 0; i < sample.size(); ++i) {
      StateId q = plant.initial[0];
      std::size_t m = 0;
      for (SymbolId a : sample[i]) {
        long& nx = next[(m * Q + q) * A + a];
        if (nx < 0) {
          const std::size_t limit = std::min(memory, used + 1);
          for (std::size_t v = 0; v < limit; ++v) {
            nx = static_cast<long>(v);
            const std::size_t saved = used;
            used = std::max(used, v + 1);
            bool found = search();
            used = saved;
            if (found) return true;
          }
          nx = -1;
          return false;
        }
        m = static_cast<std::size_t>(nx);
        long& o = out[q * memory + m];
        if (o < 0) {
          for (std::size_t c = 0; c < C; ++c) {
            o = static_cast<long>(c);
            if (search()) return true;
          }
          o = -1;
          return false;
        }
        q = static_cast<StateId>(delta[(q * A + a) * C + static_cast<std::size_t>(o)]);
      }
      if (f[q] != positive[i]) return false;
    }
    return true;
  };
  if (search()) return std::nullopt;
  return nodes;
}

}  // namespace csan::testing
