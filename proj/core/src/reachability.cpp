#include "csan/reachability.hpp"

#include <algorithm>
#include <deque>
#include <unordered_map>

#include "csan/error.hpp"

namespace csan {

ClosureGraph explore_closure(const Net& net, const Marking& mu, const ExplorationBudget& budget) {
  ClosureGraph g;
  std::unordered_map<Marking, std::size_t, MarkingHash> index;
  enum Color : char { white, grey, black };
  std::vector<Color> color;

  auto intern = [&](const Marking& m) {
    auto [it, fresh] = index.emplace(m, g.nodes.size());
    if (fresh) {
      g.nodes.push_back(m);
      color.push_back(white);
      g.stable.push_back(false);
    }
    return it->second;
  };

  struct Frame {
    std::size_t node;
    std::vector<ActivityId> pending;
    std::size_t next = 0;
  };
  std::vector<Frame> stack;
  std::size_t steps = 0;

  auto open = [&](std::size_t n) {
    color[n] = grey;
    auto en = enabled_activities(net, g.nodes[n]);
    g.stable[n] = en.stable;
    stack.push_back({n, std::move(en.instantaneous), 0});
  };

  open(intern(mu));
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next == f.pending.size()) {
      color[f.node] = black;
      stack.pop_back();
      continue;
    }
    ActivityId a = f.pending[f.next++];
    if (++steps > budget.max_closure_steps) {
      g.truncated = true;
      break;
    }
    std::size_t from = f.node;
    std::size_t to = intern(fire_activity(net, g.nodes[from], a));
    g.edges.push_back({from, a, to});
    if (color[to] == grey) {
      g.divergent = true;
    } else if (color[to] == white) {
      open(to);  // invalidates f
    }
  }
  return g;
}

ClosureResult instantaneous_closure(const Net& net, const Marking& mu, const ExplorationBudget& budget) {
  ClosureGraph g = explore_closure(net, mu, budget);
  ClosureResult r;
  r.divergent = g.divergent;
  r.truncated = g.truncated;
  for (std::size_t i = 0; i < g.nodes.size(); ++i)
    if (g.stable[i]) r.stable.push_back(g.nodes[i]);
  return r;
}

std::optional<StateId> Realization::find(const Marking& m) const {
  for (StateId q = 0; q < markings.size(); ++q)
    if (markings[q] == m && (!delta || q != *delta)) return q;
  return std::nullopt;
}

Realization realize_controlled_automaton(const Net& net, const Marking& mu0, const ExplorationBudget& budget) {
  Realization r;
  ControlledAutomaton& s = r.automaton;
  for (ActivityId a : net.timed_activities()) s.activities.push_back(net.activity(a).name);
  s.controls = net.definition().controls;

  std::unordered_map<Marking, StateId, MarkingHash> index;
  std::deque<StateId> frontier;

  auto delta_state = [&]() {
    if (!r.delta) {
      r.delta = s.states.size();
      s.states.push_back(kDivergenceState);
      r.markings.push_back({});
    }
    return *r.delta;
  };
  auto intern = [&](const Marking& m) {
    auto [it, fresh] = index.emplace(m, s.states.size());
    if (fresh) {
      s.states.push_back(to_string(m));
      r.markings.push_back(m);
      frontier.push_back(it->second);
      if (index.size() > budget.max_states)
        throw BudgetExceeded("realization exceeded max_states=" + std::to_string(budget.max_states),
                             frontier.size());
    }
    return it->second;
  };
  auto close = [&](const Marking& m) {
    ClosureResult c = instantaneous_closure(net, m, budget);
    if (c.truncated)
      throw BudgetExceeded("instantaneous closure of " + to_string(m) + " exceeded max_closure_steps=" +
                               std::to_string(budget.max_closure_steps),
                           frontier.size());
    return c;
  };

  ClosureResult init = close(mu0);
  for (const auto& m : init.stable) s.initial.push_back(intern(m));
  if (init.divergent) s.initial.push_back(delta_state());

  while (!frontier.empty()) {
    StateId q = frontier.front();
    frontier.pop_front();
    Marking mu = r.markings[q];
    const auto& timed = net.timed_activities();
    for (SymbolId ai = 0; ai < timed.size(); ++ai) {
      ActivityId a = timed[ai];
      if (!is_enabled(net, mu, a)) continue;
      for (ControlId c : net.admissible_controls(a)) {
        ClosureResult cl = close(fire_activity(net, mu, a, c));
        for (const auto& m : cl.stable) s.transitions.push_back({q, ai, c, intern(m)});
        if (cl.divergent) s.transitions.push_back({q, ai, c, delta_state()});
      }
    }
  }
  s.normalize();
  return r;
}

}  // namespace csan
