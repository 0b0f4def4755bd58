#include "generators.hpp"

#include <algorithm>
#include <numeric>

namespace csan::testing {

namespace {

std::size_t pick(Rng& rng, std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); }
bool coin(Rng& rng, double p) { return std::bernoulli_distribution(p)(rng); }

std::vector<PlaceId> sample_places(Rng& rng, std::size_t places, std::size_t k) {
  std::vector<PlaceId> all(places);
  std::iota(all.begin(), all.end(), 0);
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(std::min(k, places));
  std::sort(all.begin(), all.end());
  return all;
}

std::vector<double> random_simplex(Rng& rng, std::size_t n) {
  std::vector<double> w(n);
  double s = 0;
  for (auto& x : w) s += x = std::uniform_real_distribution<double>(0.05, 1.0)(rng);
  for (auto& x : w) x /= s;
  return w;
}

ControlDist random_dist(Rng& rng, std::size_t controls, bool probabilistic) {
  if (!probabilistic || controls == 1) return ControlDist::point(pick(rng, controls));
  auto w = random_simplex(rng, controls);
  std::vector<std::pair<ControlId, double>> v;
  for (ControlId c = 0; c < controls; ++c) v.push_back({c, w[c]});
  return ControlDist::from(v);
}

}  // namespace

Net StandardNet::build() const {
  NetBuilder b;
  for (std::size_t p = 0; p < places; ++p) b.place("P" + std::to_string(p + 1));
  for (std::size_t c = 0; c < controls; ++c) b.control("c" + std::to_string(c + 1));
  std::size_t nt = 0, ni = 0;
  std::vector<ActivityId> ids;
  for (const auto& a : acts)
    ids.push_back(a.timed ? b.timed("T" + std::to_string(++nt)) : b.instantaneous("I" + std::to_string(++ni)));
  for (std::size_t i = 0; i < acts.size(); ++i) {
    for (PlaceId p : acts[i].inputs) b.input_arc(p, ids[i]);
    if (acts[i].timed) {
      for (ControlId c = 0; c < acts[i].outputs.size(); ++c)
        for (PlaceId p : acts[i].outputs[c]) b.timed_output_arc(ids[i], c, p);
    } else if (!acts[i].outputs.empty()) {
      for (PlaceId p : acts[i].outputs[0]) b.output_arc(ids[i], p);
    }
  }
  return b.build();
}

StandardNet random_standard_net(Rng& rng, std::size_t max_places, std::size_t tokens) {
  StandardNet n;
  n.places = 2 + pick(rng, max_places - 1);
  n.controls = 1 + pick(rng, 2);
  std::size_t timed = 1 + pick(rng, 3);
  std::size_t inst = pick(rng, 3);
  for (std::size_t i = 0; i < timed + inst; ++i) {
    StandardNet::Act a;
    a.timed = i < timed;
    a.inputs = sample_places(rng, n.places, 1 + pick(rng, 2));
    std::size_t branches = a.timed ? n.controls : 1;
    // A timed activity outputs to each place under at most one control.
    std::vector<PlaceId> pool = sample_places(rng, n.places, n.places);
    std::shuffle(pool.begin(), pool.end(), rng);
    for (std::size_t c = 0; c < branches; ++c) {
      // Timed activities sometimes leave a control out of TOR entirely.
      if (a.timed && c > 0 && coin(rng, 0.25)) break;
      // Mostly token-preserving so markings keep moving; never more outputs than inputs.
      std::size_t k = std::min(coin(rng, 0.7) ? a.inputs.size() : pick(rng, a.inputs.size() + 1), pool.size());
      std::vector<PlaceId> out(pool.end() - k, pool.end());
      pool.resize(pool.size() - k);
      std::sort(out.begin(), out.end());
      a.outputs.push_back(out);
    }
    n.acts.push_back(a);
  }
  n.initial.assign(n.places, 0);
  // The first tokens enable some timed activity; the rest land anywhere.
  std::size_t k = 1 + pick(rng, tokens), placed = 0;
  const auto& first = n.acts[pick(rng, timed)].inputs;
  if (first.size() <= k)
    for (PlaceId p : first) ++n.initial[p], ++placed;
  for (; placed < k; ++placed) ++n.initial[pick(rng, n.places)];
  return n;
}

ControlledAutomaton random_automaton(Rng& rng, std::size_t states, std::size_t activities, std::size_t controls,
                                     double density, bool with_accepting) {
  ControlledAutomaton s;
  for (std::size_t q = 0; q < states; ++q) s.states.push_back("q" + std::to_string(q));
  for (std::size_t a = 0; a < activities; ++a) s.activities.push_back(std::string(1, static_cast<char>('a' + a)));
  for (std::size_t c = 0; c < controls; ++c) s.controls.push_back("c" + std::to_string(c));
  for (StateId q = 0; q < states; ++q)
    for (SymbolId a = 0; a < activities; ++a)
      for (SymbolId c = 0; c < controls; ++c)
        for (StateId t = 0; t < states; ++t)
          if (coin(rng, density / static_cast<double>(states))) s.transitions.push_back({q, a, c, t});
  s.initial.push_back(0);
  if (states > 2 && coin(rng, 0.3)) s.initial.push_back(1 + pick(rng, states - 1));
  if (with_accepting) {
    s.accepting.emplace();
    for (StateId q = 0; q < states; ++q)
      if (coin(rng, 0.35)) s.accepting->push_back(q);
  }
  s.normalize();
  return s;
}

Variant bisimilar_variant(Rng& rng, const ControlledAutomaton& s) {
  const std::size_t n = s.num_states();
  // Duplicate state d; targets of incoming edges are split between copies.
  StateId d = pick(rng, n);
  std::vector<StateId> orig(n + 1);
  std::iota(orig.begin(), orig.end(), 0);
  orig[n] = d;
  std::vector<StateId> perm(n + 1);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);  // perm[old] = new

  Variant v;
  auto& t = v.automaton;
  t.activities = s.activities;
  t.controls = s.controls;
  t.states.resize(n + 1);
  v.state_map.resize(n + 1);
  for (StateId q = 0; q <= n; ++q) {
    t.states[perm[q]] = s.states[orig[q]] + (q == n ? "'" : "");
    v.state_map[perm[q]] = orig[q];
  }
  for (const auto& tr : s.transitions) {
    StateId to = tr.to == d && coin(rng, 0.5) ? n : tr.to;
    t.transitions.push_back({perm[tr.from], tr.activity, tr.control, perm[to]});
    if (tr.from == d) t.transitions.push_back({perm[n], tr.activity, tr.control, perm[to]});
  }
  for (StateId q : s.initial) {
    t.initial.push_back(perm[q]);
    if (q == d) t.initial.push_back(perm[n]);
  }
  if (s.accepting) {
    t.accepting.emplace();
    for (StateId q : *s.accepting) {
      t.accepting->push_back(perm[q]);
      if (q == d) t.accepting->push_back(perm[n]);
    }
  }
  t.normalize();
  return v;
}

MemorylessPolicy random_memoryless(Rng& rng, PolicyDims dims, bool probabilistic) {
  auto p = MemorylessPolicy::constant(dims, 0);
  for (auto& o : p.output) o = random_dist(rng, dims.controls, probabilistic);
  return p;
}

FiniteMemoryPolicy random_finite_memory(Rng& rng, PolicyDims dims, std::size_t memory, bool probabilistic) {
  auto p = FiniteMemoryPolicy::make(dims, memory, 0);
  for (auto& m : p.next) m = pick(rng, memory);
  for (auto& o : p.output) o = random_dist(rng, dims.controls, probabilistic);
  return p;
}

namespace {

Cpa cpa_skeleton(std::size_t states, std::size_t activities, std::size_t controls) {
  Cpa u;
  for (std::size_t q = 0; q < states; ++q) u.states.push_back("q" + std::to_string(q));
  for (std::size_t a = 0; a < activities; ++a) u.activities.push_back(std::string(1, static_cast<char>('a' + a)));
  for (std::size_t c = 0; c < controls; ++c) u.controls.push_back("c" + std::to_string(c));
  return u;
}

void random_row(Rng& rng, Cpa& u, StateId q, SymbolId a, ControlId c) {
  const std::size_t n = u.num_states();
  std::vector<StateId> targets;
  for (StateId t = 0; t < n; ++t)
    if (coin(rng, 0.6)) targets.push_back(t);
  if (targets.empty()) targets.push_back(pick(rng, n));
  auto w = random_simplex(rng, targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) u.transitions.push_back({q, a, c, targets[i], w[i]});
}

}  // namespace

Cpa random_cpa(Rng& rng, std::size_t states, std::size_t activities, std::size_t controls, double density) {
  Cpa u = cpa_skeleton(states, activities, controls);
  for (StateId q = 0; q < states; ++q)
    for (SymbolId a = 0; a < activities; ++a)
      for (ControlId c = 0; c < controls; ++c)
        if (coin(rng, density)) random_row(rng, u, q, a, c);
  u.initial = random_simplex(rng, states);
  u.accepting.emplace();
  for (StateId q = 0; q < states; ++q)
    if (coin(rng, 0.5)) u.accepting->push_back(q);
  u.normalize();
  return u;
}

Cpa random_dtmdp_cpa(Rng& rng, std::size_t states, std::size_t activities, std::size_t controls) {
  Cpa u = cpa_skeleton(states, activities, controls);
  for (StateId q = 0; q < states; ++q)
    for (ControlId c = 0; c < controls; ++c) random_row(rng, u, q, pick(rng, activities), c);
  u.initial = random_simplex(rng, states);
  u.normalize();
  return u;
}

Cma random_cma(Rng& rng, std::size_t states, std::size_t activities, std::size_t controls) {
  Cma w;
  w.base = random_cpa(rng, states, activities, controls, 0.7);
  w.sigma.assign(states, std::vector<double>(activities, 0.0));
  auto rows = w.base.rows();
  for (StateId q = 0; q < states; ++q)
    for (SymbolId a = 0; a < activities; ++a)
      for (ControlId c = 0; c < controls; ++c)
        if (!rows[q][a][c].empty()) w.sigma[q][a] = std::uniform_real_distribution<double>(0.2, 5.0)(rng);
  return w;
}

ExprPtr random_nat_expr(Rng& rng, std::size_t arity, int depth) {
  if (depth <= 0 || coin(rng, 0.25)) {
    if (coin(rng, 0.5)) return Expr::var(1 + pick(rng, arity));
    return Expr::lit(pick(rng, 6));
  }
  static const ExprOp ops[] = {ExprOp::add, ExprOp::sub, ExprOp::mul, ExprOp::min, ExprOp::max};
  std::size_t k = pick(rng, 6);
  if (k == 5)
    return Expr::make(ExprOp::conditional, {random_bool_expr(rng, arity, depth - 1),
                                            random_nat_expr(rng, arity, depth - 1),
                                            random_nat_expr(rng, arity, depth - 1)});
  return Expr::make(ops[k], {random_nat_expr(rng, arity, depth - 1), random_nat_expr(rng, arity, depth - 1)});
}

ExprPtr random_bool_expr(Rng& rng, std::size_t arity, int depth) {
  if (depth <= 0 || coin(rng, 0.15)) return Expr::truth(coin(rng, 0.5));
  static const ExprOp cmp[] = {ExprOp::lt, ExprOp::le, ExprOp::gt, ExprOp::ge, ExprOp::eq, ExprOp::ne};
  switch (pick(rng, 4)) {
    case 0: return Expr::make(ExprOp::logical_not, {random_bool_expr(rng, arity, depth - 1)});
    case 1:
      return Expr::make(coin(rng, 0.5) ? ExprOp::logical_and : ExprOp::logical_or,
                        {random_bool_expr(rng, arity, depth - 1), random_bool_expr(rng, arity, depth - 1)});
    default:
      return Expr::make(cmp[pick(rng, 6)],
                        {random_nat_expr(rng, arity, depth - 1), random_nat_expr(rng, arity, depth - 1)});
  }
}

std::vector<std::vector<SymbolId>> all_words(std::size_t alphabet, std::size_t max_length) {
  std::vector<std::vector<SymbolId>> out{{}};
  std::size_t begin = 0;
  for (std::size_t len = 1; len <= max_length; ++len) {
    std::size_t end = out.size();
    for (std::size_t i = begin; i < end; ++i)
      for (SymbolId a = 0; a < alphabet; ++a) {
        auto w = out[i];
        w.push_back(a);
        out.push_back(std::move(w));
      }
    begin = end;
  }
  return out;
}

}  // namespace csan::testing
