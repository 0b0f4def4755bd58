#include <cmath>
#include <limits>

#include "csan/error.hpp"
#include "csan/stoch.hpp"

namespace csan {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

enum StreamTag : std::uint64_t { tag_initial = 1, tag_clock = 2, tag_control = 3, tag_target = 4 };

// Splitmix64 counter stream; each substream is short, so seeding must be cheap.
class Stream {
 public:
  explicit Stream(std::uint64_t s) : s_(s) {}
  double next() {
    std::uint64_t x = splitmix64(s_);
    s_ += 0x9e3779b97f4a7c15ULL;
    return to_unit(x);
  }

 private:
  std::uint64_t s_;
};

// Index drawn proportionally to weights.
template <class W>
std::size_t draw(const std::vector<W>& items, double (*weight)(const W&), double u) {
  double total = 0;
  for (const auto& x : items) total += weight(x);
  double target = u * total, acc = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    acc += weight(items[i]);
    if (target < acc) return i;
  }
  for (std::size_t i = items.size(); i-- > 0;)
    if (weight(items[i]) > 0) return i;
  return 0;
}

double pair_weight(const std::pair<StateId, double>& x) { return x.second; }

}  // namespace

std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t tag, std::uint64_t a, std::uint64_t b) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ tag);
  h = splitmix64(h ^ a);
  return splitmix64(h ^ b);
}

double to_unit(std::uint64_t x) { return static_cast<double>(x >> 11) * 0x1.0p-53; }

Trajectory simulate_csa(const Csa& v, const PolicySpec& spec, double horizon, std::uint64_t seed,
                        const RewardStructure* r, const SimOptions& opt) {
  if (!(horizon > 0) || !std::isfinite(horizon)) throw DomainError("horizon must be positive and finite");
  v.check();
  const Cpa& u = v.base;
  const std::size_t A = u.activities.size();
  auto rows = u.rows();
  auto en = v.enabled();

  Trajectory tr;
  tr.horizon = horizon;

  std::vector<std::pair<StateId, double>> init;
  for (StateId q = 0; q < u.initial.size(); ++q)
    if (u.initial[q] > 0) init.push_back({q, u.initial[q]});
  if (init.empty()) throw ModelError("initial distribution is empty");
  StateId q = init[draw(init, pair_weight, Stream(substream_seed(seed, tag_initial, 0, 0)).next())].first;

  std::vector<bool> active(A, false);
  std::vector<double> residual(A, 0.0);
  std::vector<std::uint64_t> activations(A, 0);
  PolicyState pstate = initial_policy_state(spec);
  std::optional<ControlId> control;
  std::optional<SymbolId> just;
  double t = 0, reward = 0;
  std::uint64_t events = 0;
  double bucket = 0;
  std::uint64_t bucket_events = 0;

  auto snapshot = [&](std::optional<SymbolId> a, std::optional<ControlId> c) {
    TrajectoryEntry e;
    e.time = t;
    e.state = q;
    e.activity = a;
    e.control = c;
    e.reward = reward;
    if (opt.record_residuals) {
      e.residual.resize(A);
      for (SymbolId b = 0; b < A; ++b)
        if (active[b]) e.residual[b] = residual[b];
    }
    tr.entries.push_back(std::move(e));
  };

  for (;;) {
    // Activation on entering q.
    for (SymbolId a = 0; a < A; ++a) {
      if (!en[q][a]) continue;
      if (!active[a] || just == a || v.reactivation[q][a]) {
        Stream s(substream_seed(seed, tag_clock, a, activations[a]++));
        residual[a] = v.distribution[q][a]->sample([&s] { return s.next(); });
        active[a] = true;
      }
    }
    snapshot(just, just ? control : std::nullopt);

    // Earliest completion; ties go to the lowest index.
    double best = std::numeric_limits<double>::infinity();
    std::optional<SymbolId> next_a;
    for (SymbolId a = 0; a < A; ++a) {
      if (!en[q][a] || !active[a] || !(v.rho[q][a] > 0)) continue;
      double dt = residual[a] / v.rho[q][a];
      if (dt < best) {
        best = dt;
        next_a = a;
      }
    }
    double rate = r ? r->rate_of(q, control) : 0.0;
    if (!next_a || t + best > horizon) {
      reward += rate * (horizon - t);
      break;
    }
    reward += rate * best;
    for (SymbolId a = 0; a < A; ++a)
      if (en[q][a] && active[a] && v.rho[q][a] > 0) residual[a] = std::max(0.0, residual[a] - v.rho[q][a] * best);
    t += best;
    SymbolId a = *next_a;
    residual[a] = 0;
    active[a] = false;

    if (std::floor(t) != bucket) {
      bucket = std::floor(t);
      bucket_events = 0;
    }
    if (++bucket_events > opt.zeno_events_per_unit)
      throw ZenoError("more than " + std::to_string(static_cast<std::uint64_t>(opt.zeno_events_per_unit)) +
                          " events within one time unit near t=" + std::to_string(t),
                      static_cast<std::size_t>(events));

    PolicyStep ps = policy_step(spec, pstate, {q, a});
    pstate = std::move(ps.state);
    std::vector<std::pair<StateId, double>> cdist(ps.output.weights.begin(), ps.output.weights.end());
    ControlId c = cdist[draw(cdist, pair_weight, Stream(substream_seed(seed, tag_control, 0, events)).next())].first;
    if (c >= u.controls.size() || rows[q][a][c].empty())
      throw ModelError("policy chose control " + (c < u.controls.size() ? u.controls[c] : std::to_string(c)) +
                       " with no transition at (" + u.states[q] + "," + u.activities[a] + ")");
    const auto& row = rows[q][a][c];
    StateId to = row[draw(row, pair_weight, Stream(substream_seed(seed, tag_target, 0, events)).next())].first;
    if (r) reward += r->impulse_of(q, a, c, to);
    ++events;
    q = to;
    control = c;
    just = a;
  }
  tr.reward = reward;
  return tr;
}

}  // namespace csan
