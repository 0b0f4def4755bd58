#include "csan/pushdown.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <map>
#include <set>

#include "csan/error.hpp"

namespace csan {

PostStarAutomaton post_star(const PushdownSystem& pds) {
  using T = std::tuple<std::size_t, std::size_t, std::size_t>;
  const std::size_t eps = PostStarAutomaton::epsilon;
  const std::size_t L = pds.num_locations;
  for (const auto& r : pds.rules)
    if (r.push.size() > 2) throw ModelError("post* needs rules pushing at most two symbols");

  PostStarAutomaton out;
  out.final_state = L;
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> mid;  // q_{p',g'}
  std::size_t next_state = L + 1;
  for (const auto& r : pds.rules)
    if (r.push.size() == 2 && !mid.count({r.to, r.push[0]})) mid[{r.to, r.push[0]}] = next_state++;
  out.num_states = next_state;

  std::map<std::pair<std::size_t, std::size_t>, std::vector<const PushdownRule*>> by_head;
  for (const auto& r : pds.rules) by_head[{r.from, r.top}].push_back(&r);

  std::set<T> rel;
  std::vector<std::vector<T>> rel_from(next_state);  // non-epsilon transitions by source
  std::vector<std::vector<std::size_t>> eps_into(next_state);
  std::deque<T> trans;
  for (std::size_t p : pds.initial_locations) trans.emplace_back(p, pds.initial_symbol, L);

  auto add_rel = [&](const T& t) {
    if (!rel.insert(t).second) return false;
    auto [p, g, q] = t;
    if (g == eps)
      eps_into[q].push_back(p);
    else
      rel_from[p].push_back(t);
    return true;
  };

  while (!trans.empty()) {
    T t = trans.front();
    trans.pop_front();
    if (!add_rel(t)) continue;
    auto [p, g, q] = t;
    if (g != eps) {
      auto it = by_head.find({p, g});
      if (it == by_head.end()) continue;
      for (const PushdownRule* r : it->second) {
        if (r->push.empty()) {
          trans.emplace_back(r->to, eps, q);
        } else if (r->push.size() == 1) {
          trans.emplace_back(r->to, r->push[0], q);
        } else {
          std::size_t m = mid.at({r->to, r->push[0]});
          trans.emplace_back(r->to, r->push[0], m);
          T inner{m, r->push[1], q};
          if (add_rel(inner)) {
            for (std::size_t p2 : eps_into[m]) trans.emplace_back(p2, r->push[1], q);
          }
        }
      }
    } else {
      auto copy = rel_from[q];
      for (const auto& [q0, g2, q2] : copy) trans.emplace_back(p, g2, q2);
    }
  }
  out.transitions.assign(rel.begin(), rel.end());
  return out;
}

std::vector<bool> reachable_locations(const PushdownSystem& pds) {
  auto a = post_star(pds);
  std::vector<bool> r(pds.num_locations, false);
  for (const auto& [p, g, q] : a.transitions)
    if (p < pds.num_locations) r[p] = true;
  return r;
}

std::vector<std::pair<std::size_t, std::size_t>> reachable_heads(const PushdownSystem& pds) {
  auto a = post_star(pds);
  std::set<std::pair<std::size_t, std::size_t>> heads;
  for (const auto& [p, g, q] : a.transitions)
    if (p < pds.num_locations && g != PostStarAutomaton::epsilon) heads.insert({p, g});
  return {heads.begin(), heads.end()};
}

std::vector<std::pair<std::size_t, std::size_t>> repeating_heads(const PushdownSystem& pds) {
  const std::size_t L = pds.num_locations, G = pds.num_symbols;
  auto head_id = [&](std::size_t p, std::size_t g) { return p * G + g; };
  auto acc = [&](std::size_t p) { return p < pds.accepting.size() && pds.accepting[p]; };

  // summary[h] holds (target location, visited-accepting bit) for runs from
  // head h that pop exactly that symbol.
  std::vector<std::set<std::pair<std::size_t, bool>>> summary(L * G);
  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& r : pds.rules) {
      auto& dst = summary[head_id(r.from, r.top)];
      bool b0 = acc(r.from);
      std::vector<std::pair<std::size_t, bool>> add;
      if (r.push.empty()) {
        add.emplace_back(r.to, b0);
      } else if (r.push.size() == 1) {
        for (auto [p2, s] : summary[head_id(r.to, r.push[0])]) add.emplace_back(p2, b0 || s);
      } else {
        for (auto [p1, s1] : summary[head_id(r.to, r.push[0])])
          for (auto [p2, s2] : summary[head_id(p1, r.push[1])]) add.emplace_back(p2, b0 || s1 || s2);
      }
      for (auto& x : add) changed = dst.insert(x).second || changed;
    }
  }

  struct Edge {
    std::size_t to;
    bool bit;
  };
  std::vector<std::vector<Edge>> graph(L * G);
  for (const auto& r : pds.rules) {
    std::size_t h = head_id(r.from, r.top);
    bool b0 = acc(r.from);
    if (r.push.size() == 1) {
      graph[h].push_back({head_id(r.to, r.push[0]), b0});
    } else if (r.push.size() == 2) {
      graph[h].push_back({head_id(r.to, r.push[0]), b0});
      for (auto [p1, s] : summary[head_id(r.to, r.push[0])]) graph[h].push_back({head_id(p1, r.push[1]), b0 || s});
    }
  }

  // Tarjan SCC.
  const std::size_t n = L * G, none = static_cast<std::size_t>(-1);
  std::vector<std::size_t> index(n, none), low(n, 0), comp(n, none);
  std::vector<bool> on(n, false);
  std::vector<std::size_t> st;
  std::size_t counter = 0, ncomp = 0;
  std::function<void(std::size_t)> dfs = [&](std::size_t v) {
    index[v] = low[v] = counter++;
    st.push_back(v);
    on[v] = true;
    for (const auto& e : graph[v]) {
      if (index[e.to] == none) {
        dfs(e.to);
        low[v] = std::min(low[v], low[e.to]);
      } else if (on[e.to]) {
        low[v] = std::min(low[v], index[e.to]);
      }
    }
    if (low[v] == index[v]) {
      for (;;) {
        std::size_t w = st.back();
        st.pop_back();
        on[w] = false;
        comp[w] = ncomp;
        if (w == v) break;
      }
      ++ncomp;
    }
  };
  for (std::size_t v = 0; v < n; ++v)
    if (index[v] == none) dfs(v);

  std::vector<bool> good(ncomp, false);
  for (std::size_t v = 0; v < n; ++v)
    for (const auto& e : graph[v])
      if (e.bit && comp[v] == comp[e.to]) good[comp[v]] = true;

  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t p = 0; p < L; ++p)
    for (std::size_t g = 0; g < G; ++g)
      if (good[comp[head_id(p, g)]]) out.emplace_back(p, g);
  return out;
}

}  // namespace csan
