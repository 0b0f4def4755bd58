#include "csan/stoch.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>

#include "csan/error.hpp"

namespace csan {

const char* to_string(DistKind k) {
  switch (k) {
    case DistKind::exponential: return "exponential";
    case DistKind::deterministic: return "deterministic";
    case DistKind::uniform: return "uniform";
    case DistKind::erlang: return "erlang";
    case DistKind::weibull: return "weibull";
  }
  return "?";
}

DistributionSpec DistributionSpec::exponential(double rate) { return {DistKind::exponential, rate, 0.0, 1}; }
DistributionSpec DistributionSpec::deterministic(double d) { return {DistKind::deterministic, d, 0.0, 1}; }
DistributionSpec DistributionSpec::uniform(double lo, double hi) { return {DistKind::uniform, lo, hi, 1}; }
DistributionSpec DistributionSpec::erlang(unsigned k, double rate) { return {DistKind::erlang, rate, 0.0, k}; }
DistributionSpec DistributionSpec::weibull(double shape, double scale) { return {DistKind::weibull, shape, scale, 1}; }

void DistributionSpec::check() const {
  auto fin = [](double x) { return std::isfinite(x); };
  switch (kind) {
    case DistKind::exponential:
      if (!(p1 > 0) || !fin(p1)) throw DomainError("exponential rate must be positive");
      break;
    case DistKind::deterministic:
      if (!(p1 >= 0) || !fin(p1)) throw DomainError("deterministic delay must be nonnegative");
      break;
    case DistKind::uniform:
      if (!(p1 >= 0) || !(p1 <= p2) || !fin(p2)) throw DomainError("uniform needs 0 <= lo <= hi");
      break;
    case DistKind::erlang:
      if (k < 1 || !(p1 > 0) || !fin(p1)) throw DomainError("erlang needs k >= 1 and a positive rate");
      break;
    case DistKind::weibull:
      if (!(p1 > 0) || !(p2 > 0) || !fin(p1) || !fin(p2)) throw DomainError("weibull needs positive shape and scale");
      break;
  }
}

double DistributionSpec::mean() const {
  switch (kind) {
    case DistKind::exponential: return 1.0 / p1;
    case DistKind::deterministic: return p1;
    case DistKind::uniform: return 0.5 * (p1 + p2);
    case DistKind::erlang: return k / p1;
    case DistKind::weibull: return p2 * std::tgamma(1.0 + 1.0 / p1);
  }
  return 0;
}

double DistributionSpec::cdf(double x) const {
  if (x < 0) return 0.0;
  switch (kind) {
    case DistKind::exponential: return -std::expm1(-p1 * x);
    case DistKind::deterministic: return x >= p1 ? 1.0 : 0.0;
    case DistKind::uniform:
      if (p2 == p1) return x >= p1 ? 1.0 : 0.0;
      return std::clamp((x - p1) / (p2 - p1), 0.0, 1.0);
    case DistKind::erlang: {
      double lx = p1 * x, term = std::exp(-lx), sum = 0;
      for (unsigned n = 0; n < k; ++n) {
        sum += term;
        term *= lx / (n + 1);
      }
      return std::clamp(1.0 - sum, 0.0, 1.0);
    }
    case DistKind::weibull: return -std::expm1(-std::pow(x / p2, p1));
  }
  return 0;
}

double DistributionSpec::sample(const std::function<double()>& u) const {
  switch (kind) {
    case DistKind::exponential: return -std::log1p(-u()) / p1;
    case DistKind::deterministic: return p1;
    case DistKind::uniform: return p1 + u() * (p2 - p1);
    case DistKind::erlang: {
      double s = 0;
      for (unsigned n = 0; n < k; ++n) s += -std::log1p(-u()) / p1;
      return s;
    }
    case DistKind::weibull: return p2 * std::pow(-std::log1p(-u()), 1.0 / p1);
  }
  return 0;
}

std::string DistributionSpec::to_string() const {
  char buf[128];
  switch (kind) {
    case DistKind::exponential: std::snprintf(buf, sizeof buf, "exponential(%.17g)", p1); break;
    case DistKind::deterministic: std::snprintf(buf, sizeof buf, "deterministic(%.17g)", p1); break;
    case DistKind::uniform: std::snprintf(buf, sizeof buf, "uniform(%.17g,%.17g)", p1, p2); break;
    case DistKind::erlang: std::snprintf(buf, sizeof buf, "erlang(%u,%.17g)", k, p1); break;
    case DistKind::weibull: std::snprintf(buf, sizeof buf, "weibull(%.17g,%.17g)", p1, p2); break;
  }
  return buf;
}

std::vector<std::vector<bool>> Csa::enabled() const {
  std::vector<std::vector<bool>> e(base.num_states(), std::vector<bool>(base.activities.size(), false));
  for (const auto& t : base.transitions)
    if (t.p > 0) e[t.from][t.activity] = true;
  return e;
}

void Csa::check() const {
  const std::size_t n = base.num_states(), A = base.activities.size();
  if (distribution.size() != n || rho.size() != n || reactivation.size() != n)
    throw ModelError("timing tables do not cover every state");
  auto en = enabled();
  for (StateId q = 0; q < n; ++q) {
    if (distribution[q].size() != A || rho[q].size() != A || reactivation[q].size() != A)
      throw ModelError("timing tables do not cover every activity at " + base.states[q]);
    for (SymbolId a = 0; a < A; ++a) {
      if (!(rho[q][a] >= 0) || !std::isfinite(rho[q][a]))
        throw ModelError("rho(" + base.states[q] + "," + base.activities[a] + ") must be finite and nonnegative");
      if (en[q][a] && !distribution[q][a])
        throw ModelError("missing distribution for enabled (" + base.states[q] + "," + base.activities[a] + ")");
      if (distribution[q][a]) distribution[q][a]->check();
    }
  }
}

CsaRealization realize_csa(const Csan& n, const Marking& mu0, const ExplorationBudget& budget) {
  CpaRealization r = realize_cpa(n.cpan, mu0, budget);
  CsaRealization out;
  const Net& net = n.cpan.net;
  const std::size_t Q = r.cpa.num_states(), A = r.cpa.activities.size();
  out.csa.distribution.assign(Q, std::vector<std::optional<DistributionSpec>>(A));
  out.csa.rho.assign(Q, std::vector<double>(A, 1.0));
  out.csa.reactivation.assign(Q, std::vector<bool>(A, false));
  const auto& timed = net.timed_activities();
  for (StateId q = 0; q < Q; ++q) {
    if (r.delta && *r.delta == q) continue;
    const Marking& mu = r.markings[q];
    for (SymbolId ai = 0; ai < A; ++ai) {
      ActivityId a = timed[ai];
      if (!is_enabled(net, mu, a)) continue;
      std::size_t sd = 0, sr = 0, sp = 0;
      bool hd = false, hr = false, hp = false;
      for (const auto& e : n.timing) {
        if (e.activity != a || !e.pattern.matches(mu)) continue;
        std::size_t s = e.pattern.specificity();
        if (e.distribution && (!hd || s >= sd)) {
          out.csa.distribution[q][ai] = e.distribution;
          sd = s;
          hd = true;
        }
        if (e.rho && (!hr || s >= sr)) {
          out.csa.rho[q][ai] = *e.rho;
          sr = s;
          hr = true;
        }
        if (e.reactivation && (!hp || s >= sp)) {
          out.csa.reactivation[q][ai] = *e.reactivation;
          sp = s;
          hp = true;
        }
      }
      if (!hd)
        throw ModelError("missing distribution for enabled (" + r.cpa.states[q] + "," + net.activity(a).name + ")");
    }
  }
  out.csa.base = std::move(r.cpa);
  out.markings = std::move(r.markings);
  out.delta = r.delta;
  out.csa.check();
  return out;
}

double accumulated_reward(const Trajectory& t, const RewardStructure& r, double from, double to) {
  if (!(from >= 0) || !(to <= t.horizon) || from > to)
    throw DomainError("reward window lies outside [0, " + std::to_string(t.horizon) + "]");
  double total = 0;
  const auto& e = t.entries;
  for (std::size_t i = 0; i < e.size(); ++i) {
    double a = e[i].time, b = i + 1 < e.size() ? e[i + 1].time : t.horizon;
    double lo = std::max(a, from), hi = std::min(b, to);
    if (hi > lo) total += (hi - lo) * r.rate_of(e[i].state, e[i].control);
    if (i > 0 && e[i].activity && e[i].time > from && e[i].time <= to)
      total += r.impulse_of(e[i - 1].state, *e[i].activity, *e[i].control, e[i].state);
  }
  return total;
}

double discounted_reward(const Trajectory& t, const RewardStructure& r, double beta) {
  if (!(beta > 0)) throw DomainError("discount rate must be positive");
  double total = 0;
  const auto& e = t.entries;
  for (std::size_t i = 0; i < e.size(); ++i) {
    double a = e[i].time, b = i + 1 < e.size() ? e[i + 1].time : t.horizon;
    double rate = r.rate_of(e[i].state, e[i].control);
    if (rate != 0 && b > a) total += rate * (std::exp(-beta * a) - std::exp(-beta * b)) / beta;
    if (i > 0 && e[i].activity)
      total += std::exp(-beta * e[i].time) * r.impulse_of(e[i - 1].state, *e[i].activity, *e[i].control, e[i].state);
  }
  return total;
}

Cma to_cma(const Csa& v) {
  v.check();
  Cma w;
  w.base = v.base;
  const std::size_t Q = v.base.num_states(), A = v.base.activities.size();
  w.sigma.assign(Q, std::vector<double>(A, 0.0));
  for (StateId q = 0; q < Q; ++q)
    for (SymbolId a = 0; a < A; ++a) {
      const auto& d = v.distribution[q][a];
      if (!d) continue;
      if (d->kind != DistKind::exponential)
        throw ModelError("not Markovian: (" + v.base.states[q] + "," + v.base.activities[a] + ") has " +
                         d->to_string());
      w.sigma[q][a] = v.rho[q][a] * d->p1;
    }
  return w;
}

Csa csa_of_cma(const Cma& w) {
  Csa v;
  v.base = w.base;
  const std::size_t Q = w.base.num_states(), A = w.base.activities.size();
  v.distribution.assign(Q, std::vector<std::optional<DistributionSpec>>(A));
  v.rho.assign(Q, std::vector<double>(A, 1.0));
  v.reactivation.assign(Q, std::vector<bool>(A, false));
  auto en = v.enabled();
  for (StateId q = 0; q < Q; ++q)
    for (SymbolId a = 0; a < A; ++a) {
      double s = q < w.sigma.size() && a < w.sigma[q].size() ? w.sigma[q][a] : 0.0;
      // Unit work at speed sigma, so carried-over residuals pick up the new state's rate.
      if (s > 0) {
        v.distribution[q][a] = DistributionSpec::exponential(1.0);
        v.rho[q][a] = s;
      } else if (en[q][a]) {
        v.distribution[q][a] = DistributionSpec::exponential(1.0);
        v.rho[q][a] = 0.0;
      }
    }
  return v;
}

Trajectory simulate_cma(const Cma& w, const PolicySpec& spec, double horizon, std::uint64_t seed,
                        const RewardStructure* r, const SimOptions& opt) {
  return simulate_csa(csa_of_cma(w), spec, horizon, seed, r, opt);
}

std::vector<std::vector<double>> Ctmdp::exit_rates() const {
  std::vector<std::vector<double>> l(states.size(), std::vector<double>(controls.size(), 0.0));
  for (const auto& t : terms) l[t.from][t.control] += t.rate;
  return l;
}

std::vector<std::vector<std::vector<std::pair<StateId, double>>>> Ctmdp::jump_rows() const {
  auto l = exit_rates();
  std::vector<std::vector<std::map<StateId, double>>> acc(states.size(),
                                                          std::vector<std::map<StateId, double>>(controls.size()));
  for (const auto& t : terms) acc[t.from][t.control][t.to] += t.rate;
  std::vector<std::vector<std::vector<std::pair<StateId, double>>>> out(
      states.size(), std::vector<std::vector<std::pair<StateId, double>>>(controls.size()));
  for (StateId q = 0; q < states.size(); ++q)
    for (ControlId c = 0; c < controls.size(); ++c)
      if (l[q][c] > 0)
        for (auto [to, x] : acc[q][c])
          if (x > 0) out[q][c].push_back({to, x / l[q][c]});
  return out;
}

std::vector<std::vector<bool>> Ctmdp::available() const {
  std::vector<std::vector<bool>> a(states.size(), std::vector<bool>(controls.size(), false));
  for (const auto& t : terms) a[t.from][t.control] = true;
  return a;
}

double Ctmdp::max_exit_rate() const {
  double m = 0;
  for (const auto& row : exit_rates())
    for (double x : row) m = std::max(m, x);
  return m;
}

Ctmdp ctmdp_of_cma(const Cma& w) {
  Ctmdp m;
  m.states = w.base.states;
  m.controls = w.base.controls;
  m.activities = w.base.activities;
  m.initial = w.base.initial;
  std::map<std::pair<StateId, ControlId>, bool> present;
  for (const auto& t : w.base.transitions) {
    if (t.p <= 0) continue;
    present[{t.from, t.control}] = true;
    double s = t.from < w.sigma.size() && t.activity < w.sigma[t.from].size() ? w.sigma[t.from][t.activity] : 0.0;
    if (s > 0) m.terms.push_back({t.from, t.activity, t.control, t.to, s * t.p});
  }
  auto l = m.exit_rates();
  std::string bad;
  for (const auto& [k, yes] : present)
    if (l[k.first][k.second] <= 0) {
      if (!bad.empty()) bad += ", ";
      bad += "(" + m.states[k.first] + "," + m.controls[k.second] + ")";
    }
  if (!bad.empty()) throw ModelError("zero total rate with present transitions at " + bad);
  return m;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) {
    if (ch == '"') q += '"';
    q += ch;
  }
  return q + '"';
}

}  // namespace

void write_trajectory_csv(std::ostream& os, const Csa& v, const std::vector<Trajectory>& runs) {
  const bool multi = runs.size() > 1;
  if (multi) os << "rep,";
  os << "time,state,activity,control,reward_running\n";
  char buf[64];
  for (std::size_t k = 0; k < runs.size(); ++k)
    for (const auto& e : runs[k].entries) {
      if (multi) os << k << ',';
      std::snprintf(buf, sizeof buf, "%.17g", e.time);
      os << buf << ',' << csv_field(v.base.states[e.state]) << ',';
      if (e.activity) os << csv_field(v.base.activities[*e.activity]);
      os << ',';
      if (e.control) os << csv_field(v.base.controls[*e.control]);
      std::snprintf(buf, sizeof buf, "%.17g", e.reward);
      os << ',' << buf << '\n';
    }
}

}  // namespace csan
