#include "csan/net.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <tuple>

#include "csan/error.hpp"

namespace csan {

std::size_t MarkingHash::operator()(const Marking& m) const noexcept {
  std::size_t h = 0xcbf29ce484222325ULL;
  for (Nat v : m) {
    h ^= std::hash<Nat>{}(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return h;
}

std::string to_string(const Marking& m) {
  std::string s = "(";
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(m[i]);
  }
  return s + ")";
}

bool ValidationReport::has(std::string_view code) const {
  return std::any_of(violations.begin(), violations.end(), [&](const Violation& v) { return v.code == code; });
}

namespace {

void place_wire(std::vector<Net::Wiring>& groups, GateId g, std::size_t arity, std::size_t index, PlaceId p) {
  auto it = std::find_if(groups.begin(), groups.end(), [&](const Net::Wiring& w) { return w.gate == g; });
  if (it == groups.end()) {
    groups.push_back({g, std::vector<PlaceId>(arity, Net::unwired)});
    it = groups.end() - 1;
  }
  if (index >= 1 && index <= it->places.size() && it->places[index - 1] == Net::unwired) it->places[index - 1] = p;
}

}  // namespace

Net::Net(NetDefinition def) : def_(std::move(def)) {
  const std::size_t na = def_.activities.size();
  const std::size_t nc = def_.controls.size();
  inputs_.assign(na, {});
  inst_outputs_.assign(na, {});
  timed_outputs_.assign(na, std::vector<std::vector<Wiring>>(nc));
  admissible_.assign(na, {});
  for (ActivityId a = 0; a < na; ++a)
    (def_.activities[a].kind == ActivityKind::timed ? timed_ : instantaneous_).push_back(a);

  for (const auto& e : def_.input_relation) {
    if (e.activity >= na || e.gate >= def_.input_gates.size()) continue;
    place_wire(inputs_[e.activity], e.gate, def_.input_gates[e.gate].spec.arity, e.index, e.place);
  }
  for (const auto& e : def_.instantaneous_output_relation) {
    if (e.activity >= na || e.gate >= def_.output_gates.size()) continue;
    place_wire(inst_outputs_[e.activity], e.gate, def_.output_gates[e.gate].spec.arity, e.index, e.place);
  }
  std::vector<std::set<ControlId>> used(na);
  for (const auto& e : def_.timed_output_relation) {
    if (e.activity >= na || e.control >= nc || e.gate >= def_.output_gates.size()) continue;
    place_wire(timed_outputs_[e.activity][e.control], e.gate, def_.output_gates[e.gate].spec.arity, e.index,
               e.place);
    used[e.activity].insert(e.control);
  }
  for (ActivityId a : timed_) {
    if (used[a].empty()) {
      for (ControlId c = 0; c < nc; ++c) admissible_[a].push_back(c);
    } else {
      admissible_[a].assign(used[a].begin(), used[a].end());
    }
  }
}

const std::vector<Net::Wiring>& Net::output_wiring(ActivityId a, std::optional<ControlId> c) const {
  if (c) return timed_outputs_.at(a).at(*c);
  return inst_outputs_.at(a);
}

std::optional<PlaceId> Net::find_place(std::string_view name) const {
  for (PlaceId p = 0; p < def_.places.size(); ++p)
    if (def_.places[p] == name) return p;
  return std::nullopt;
}

std::optional<ActivityId> Net::find_activity(std::string_view name) const {
  for (ActivityId a = 0; a < def_.activities.size(); ++a)
    if (def_.activities[a].name == name) return a;
  return std::nullopt;
}

std::optional<ControlId> Net::find_control(std::string_view name) const {
  for (ControlId c = 0; c < def_.controls.size(); ++c)
    if (def_.controls[c] == name) return c;
  return std::nullopt;
}

ValidationReport validate_net(const Net& net) {
  const NetDefinition& d = net.definition();
  ValidationReport rep;
  auto add = [&](std::string code, std::string msg) { rep.violations.push_back({std::move(code), std::move(msg)}); };
  const std::size_t np = d.places.size(), na = d.activities.size(), nc = d.controls.size();

  auto check_names = [&](const std::vector<std::string>& names, const char* what) {
    std::set<std::string> seen;
    for (const auto& n : names)
      if (!seen.insert(n).second) add("duplicate-name", std::string(what) + " '" + n + "' declared twice");
  };
  check_names(d.places, "place");
  check_names(d.controls, "control");
  {
    std::vector<std::string> an, gn;
    for (const auto& a : d.activities) an.push_back(a.name);
    for (const auto& g : d.input_gates) gn.push_back(g.name);
    for (const auto& g : d.output_gates) gn.push_back(g.name);
    check_names(an, "activity");
    check_names(gn, "gate");
  }
  for (const auto& g : d.input_gates) {
    if (g.spec.kind != GateKind::input) add("gate-kind", "input gate '" + g.name + "' carries an output spec");
    if (g.spec.function.size() != g.spec.arity) add("gate-arity", "gate '" + g.name + "' function length != arity");
  }
  for (const auto& g : d.output_gates) {
    if (g.spec.kind != GateKind::output || g.spec.predicate)
      add("gate-kind", "output gate '" + g.name + "' carries a predicate");
    if (g.spec.function.size() != g.spec.arity) add("gate-arity", "gate '" + g.name + "' function length != arity");
  }

  auto aname = [&](ActivityId a) { return a < na ? d.activities[a].name : "#" + std::to_string(a); };
  auto pname = [&](PlaceId p) { return p < np ? d.places[p] : "#" + std::to_string(p); };

  // Input relation.
  std::vector<std::vector<bool>> in_wired(d.input_gates.size());
  for (std::size_t g = 0; g < d.input_gates.size(); ++g) in_wired[g].assign(d.input_gates[g].spec.arity, false);
  std::map<std::pair<PlaceId, ActivityId>, int> per_place_activity;
  std::map<std::tuple<GateId, ActivityId, std::size_t>, int> per_gate_index;
  for (const auto& e : d.input_relation) {
    if (e.place >= np || e.activity >= na || e.gate >= d.input_gates.size()) {
      add("bad-reference", "input relation entry refers to an undeclared place, gate or activity");
      continue;
    }
    const Gate& g = d.input_gates[e.gate];
    std::string where = "(" + pname(e.place) + "," + std::to_string(e.index) + "," + g.name + "," + aname(e.activity) + ")";
    if (e.index < 1 || e.index > g.spec.arity) {
      add("input-index-out-of-range", "IR entry " + where + " exceeds gate arity " + std::to_string(g.spec.arity));
      continue;
    }
    in_wired[e.gate][e.index - 1] = true;
    if (++per_place_activity[{e.place, e.activity}] == 2)
      add("duplicate-place-activity", "place " + pname(e.place) + " wired twice to activity " + aname(e.activity));
    if (++per_gate_index[{e.gate, e.activity, e.index}] == 2)
      add("duplicate-gate-index", "gate " + g.name + " index " + std::to_string(e.index) + " wired twice for " +
                                      aname(e.activity));
  }
  for (std::size_t g = 0; g < d.input_gates.size(); ++g)
    for (std::size_t i = 0; i < in_wired[g].size(); ++i)
      if (!in_wired[g][i])
        add("input-index-unwired", "input gate " + d.input_gates[g].name + " index " + std::to_string(i + 1) +
                                       " is not wired");
  for (ActivityId a = 0; a < na; ++a)
    for (const auto& w : net.input_wiring(a))
      if (std::count(w.places.begin(), w.places.end(), Net::unwired) > 0)
        add("incomplete-gate-wiring", "input gate " + d.input_gates[w.gate].name + " is partially wired for " +
                                          aname(a));

  // Output relations.
  std::vector<std::vector<int>> out_ior(d.output_gates.size()), out_tor(d.output_gates.size());
  for (std::size_t g = 0; g < d.output_gates.size(); ++g) {
    out_ior[g].assign(d.output_gates[g].spec.arity, 0);
    out_tor[g].assign(d.output_gates[g].spec.arity, 0);
  }
  std::map<std::pair<ActivityId, PlaceId>, int> ior_pairs, tor_pairs;
  std::map<std::tuple<GateId, ActivityId, ControlId, std::size_t>, int> out_index_uses;
  for (const auto& e : d.instantaneous_output_relation) {
    if (e.place >= np || e.activity >= na || e.gate >= d.output_gates.size()) {
      add("bad-reference", "instantaneous output entry refers to an undeclared place, gate or activity");
      continue;
    }
    if (d.activities[e.activity].kind != ActivityKind::instantaneous) {
      add("kind-mismatch", "IOR entry uses timed activity " + aname(e.activity));
      continue;
    }
    const Gate& g = d.output_gates[e.gate];
    if (e.index < 1 || e.index > g.spec.arity) {
      add("output-index-out-of-range", "IOR entry for gate " + g.name + " index " + std::to_string(e.index) +
                                           " exceeds arity " + std::to_string(g.spec.arity));
      continue;
    }
    out_ior[e.gate][e.index - 1]++;
    if (++ior_pairs[{e.activity, e.place}] == 2)
      add("duplicate-output-place", "activity " + aname(e.activity) + " outputs twice to " + pname(e.place));
    if (++out_index_uses[{e.gate, e.activity, nc, e.index}] == 2)
      add("duplicate-gate-index", "gate " + g.name + " output index " + std::to_string(e.index) + " wired twice");
  }
  for (const auto& e : d.timed_output_relation) {
    if (e.place >= np || e.activity >= na || e.gate >= d.output_gates.size() || e.control >= nc) {
      add("bad-reference", "timed output entry refers to an undeclared place, gate, activity or control");
      continue;
    }
    if (d.activities[e.activity].kind != ActivityKind::timed) {
      add("kind-mismatch", "TOR entry uses instantaneous activity " + aname(e.activity));
      continue;
    }
    const Gate& g = d.output_gates[e.gate];
    if (e.index < 1 || e.index > g.spec.arity) {
      add("output-index-out-of-range", "TOR entry for gate " + g.name + " index " + std::to_string(e.index) +
                                           " exceeds arity " + std::to_string(g.spec.arity));
      continue;
    }
    out_tor[e.gate][e.index - 1]++;
    if (++tor_pairs[{e.activity, e.place}] == 2)
      add("duplicate-output-place", "timed activity " + aname(e.activity) + " outputs twice to " + pname(e.place));
    if (++out_index_uses[{e.gate, e.activity, e.control, e.index}] == 2)
      add("duplicate-gate-index", "gate " + g.name + " output index " + std::to_string(e.index) + " wired twice");
  }
  for (std::size_t g = 0; g < d.output_gates.size(); ++g) {
    for (std::size_t i = 0; i < out_ior[g].size(); ++i) {
      bool in_i = out_ior[g][i] > 0, in_t = out_tor[g][i] > 0;
      if (in_i && in_t)
        add("but-not-both", "output gate " + d.output_gates[g].name + " index " + std::to_string(i + 1) +
                                " wired in both IOR and TOR");
      else if (!in_i && !in_t)
        add("output-index-unwired", "output gate " + d.output_gates[g].name + " index " + std::to_string(i + 1) +
                                        " is not wired");
    }
  }
  for (ActivityId a = 0; a < na; ++a) {
    auto check = [&](const std::vector<Net::Wiring>& ws) {
      for (const auto& w : ws)
        if (std::count(w.places.begin(), w.places.end(), Net::unwired) > 0)
          add("incomplete-gate-wiring", "output gate " + d.output_gates[w.gate].name + " is partially wired for " +
                                            aname(a));
    };
    if (d.activities[a].kind == ActivityKind::instantaneous) {
      check(net.output_wiring(a, std::nullopt));
    } else {
      for (ControlId c = 0; c < nc; ++c) check(net.output_wiring(a, c));
    }
  }
  return rep;
}

namespace {

std::vector<Nat> gather(const Marking& mu, const std::vector<PlaceId>& places) {
  std::vector<Nat> x;
  x.reserve(places.size());
  for (PlaceId p : places) {
    if (p == Net::unwired) throw ModelError("gate with unwired index");
    x.push_back(mu[p]);
  }
  return x;
}

void check_dim(const Net& net, const Marking& mu) {
  if (mu.size() != net.num_places())
    throw ModelError("marking has " + std::to_string(mu.size()) + " entries, net has " +
                     std::to_string(net.num_places()) + " places");
}

}  // namespace

bool is_enabled(const Net& net, const Marking& mu, ActivityId a) {
  check_dim(net, mu);
  const auto& gates = net.definition().input_gates;
  for (const auto& w : net.input_wiring(a)) {
    const GateSpec& g = gates[w.gate].spec;
    auto x = gather(mu, w.places);
    if (g.predicate && !eval_bool(*g.predicate, x)) return false;
  }
  return true;
}

EnabledSet enabled_activities(const Net& net, const Marking& mu) {
  check_dim(net, mu);
  EnabledSet s;
  for (ActivityId a = 0; a < net.num_activities(); ++a) {
    if (!is_enabled(net, mu, a)) continue;
    (net.is_timed(a) ? s.timed : s.instantaneous).push_back(a);
  }
  s.stable = s.instantaneous.empty();
  return s;
}

Marking fire_activity(const Net& net, const Marking& mu, ActivityId a, std::optional<ControlId> c) {
  check_dim(net, mu);
  if (a >= net.num_activities()) throw ModelError("unknown activity index " + std::to_string(a));
  const std::string& name = net.activity(a).name;
  if (net.is_timed(a)) {
    if (!c) throw ModelError("timed activity " + name + " fired without a control action");
    const auto& adm = net.admissible_controls(a);
    if (std::find(adm.begin(), adm.end(), *c) == adm.end())
      throw ModelError("control " + std::to_string(*c) + " is not admissible for " + name);
  } else if (c) {
    throw ModelError("instantaneous activity " + name + " fired with a control action");
  }
  if (!is_enabled(net, mu, a)) throw ModelError("activity " + name + " is not enabled in " + to_string(mu));

  const NetDefinition& d = net.definition();
  Marking mid = mu;
  for (const auto& w : net.input_wiring(a)) {
    auto img = eval_gate(d.input_gates[w.gate].spec, gather(mu, w.places)).image;
    for (std::size_t k = 0; k < w.places.size(); ++k) mid[w.places[k]] = img[k];
  }
  Marking out = mid;
  for (const auto& w : net.output_wiring(a, c)) {
    auto img = eval_gate(d.output_gates[w.gate].spec, gather(mid, w.places)).image;
    for (std::size_t k = 0; k < w.places.size(); ++k) out[w.places[k]] = img[k];
  }
  return out;
}

// ---------------------------------------------------------------------------

void NetBuilder::check_place(PlaceId p) const {
  if (p >= def_.places.size()) throw ModelError("unknown place index " + std::to_string(p));
}

void NetBuilder::check_activity(ActivityId a) const {
  if (a >= def_.activities.size()) throw ModelError("unknown activity index " + std::to_string(a));
}

PlaceId NetBuilder::place(std::string name) {
  if (std::find(def_.places.begin(), def_.places.end(), name) != def_.places.end())
    throw ModelError("place '" + name + "' declared twice");
  def_.places.push_back(std::move(name));
  return def_.places.size() - 1;
}

ActivityId NetBuilder::instantaneous(std::string name) {
  for (const auto& a : def_.activities)
    if (a.name == name) throw ModelError("activity '" + name + "' declared twice");
  def_.activities.push_back({std::move(name), ActivityKind::instantaneous});
  return def_.activities.size() - 1;
}

ActivityId NetBuilder::timed(std::string name) {
  for (const auto& a : def_.activities)
    if (a.name == name) throw ModelError("activity '" + name + "' declared twice");
  def_.activities.push_back({std::move(name), ActivityKind::timed});
  return def_.activities.size() - 1;
}

ControlId NetBuilder::control(std::string name) {
  if (std::find(def_.controls.begin(), def_.controls.end(), name) != def_.controls.end())
    throw ModelError("control '" + name + "' declared twice");
  def_.controls.push_back(std::move(name));
  return def_.controls.size() - 1;
}

GateId NetBuilder::input_gate(std::string name, GateSpec spec) {
  if (spec.kind != GateKind::input) throw ModelError("gate '" + name + "' is not an input gate");
  def_.input_gates.push_back({std::move(name), std::move(spec)});
  return def_.input_gates.size() - 1;
}

GateId NetBuilder::output_gate(std::string name, GateSpec spec) {
  if (spec.kind != GateKind::output) throw ModelError("gate '" + name + "' is not an output gate");
  def_.output_gates.push_back({std::move(name), std::move(spec)});
  return def_.output_gates.size() - 1;
}

NetBuilder& NetBuilder::input_arc(PlaceId p, ActivityId a) {
  check_place(p);
  check_activity(a);
  GateId g = input_gate("in:" + def_.places[p] + ">" + def_.activities[a].name, gates::standard_input());
  try {
    return wire_input(p, 1, g, a);
  } catch (...) {
    def_.input_gates.pop_back();
    throw;
  }
}

NetBuilder& NetBuilder::inhibitor_arc(PlaceId p, ActivityId a) {
  check_place(p);
  check_activity(a);
  GateId g = input_gate("inh:" + def_.places[p] + ">" + def_.activities[a].name, gates::inhibitor());
  try {
    return wire_input(p, 1, g, a);
  } catch (...) {
    def_.input_gates.pop_back();
    throw;
  }
}

NetBuilder& NetBuilder::output_arc(ActivityId a, PlaceId p) {
  check_place(p);
  check_activity(a);
  GateId g = output_gate("out:" + def_.activities[a].name + ">" + def_.places[p], gates::standard_output());
  try {
    return wire_output(a, g, 1, p);
  } catch (...) {
    def_.output_gates.pop_back();
    throw;
  }
}

NetBuilder& NetBuilder::timed_output_arc(ActivityId a, ControlId c, PlaceId p) {
  check_place(p);
  check_activity(a);
  if (c >= def_.controls.size()) throw ModelError("unknown control index " + std::to_string(c));
  GateId g = output_gate("out:" + def_.activities[a].name + "/" + def_.controls[c] + ">" + def_.places[p],
                         gates::standard_output());
  try {
    return wire_timed_output(a, c, g, 1, p);
  } catch (...) {
    def_.output_gates.pop_back();
    throw;
  }
}

NetBuilder& NetBuilder::wire_input(PlaceId p, std::size_t index, GateId g, ActivityId a) {
  check_place(p);
  check_activity(a);
  if (g >= def_.input_gates.size()) throw ModelError("unknown input gate");
  if (index < 1 || index > def_.input_gates[g].spec.arity) throw ModelError("input index exceeds gate arity");
  for (const auto& e : def_.input_relation) {
    if (e.place == p && e.activity == a) throw ModelError("place already wired to this activity");
    if (e.gate == g && e.activity == a && e.index == index) throw ModelError("gate index already wired");
  }
  def_.input_relation.push_back({p, index, g, a});
  return *this;
}

NetBuilder& NetBuilder::wire_output(ActivityId a, GateId g, std::size_t index, PlaceId p) {
  check_place(p);
  check_activity(a);
  if (def_.activities[a].kind != ActivityKind::instantaneous)
    throw ModelError("wire_output needs an instantaneous activity; use wire_timed_output");
  if (g >= def_.output_gates.size()) throw ModelError("unknown output gate");
  if (index < 1 || index > def_.output_gates[g].spec.arity) throw ModelError("output index exceeds gate arity");
  for (const auto& e : def_.instantaneous_output_relation) {
    if (e.activity == a && e.place == p) throw ModelError("activity already outputs to this place");
    if (e.gate == g && e.activity == a && e.index == index) throw ModelError("gate index already wired");
  }
  for (const auto& e : def_.timed_output_relation)
    if (e.gate == g && e.index == index) throw ModelError("gate index already wired in TOR");
  def_.instantaneous_output_relation.push_back({a, g, index, p});
  return *this;
}

NetBuilder& NetBuilder::wire_timed_output(ActivityId a, ControlId c, GateId g, std::size_t index, PlaceId p) {
  check_place(p);
  check_activity(a);
  if (def_.activities[a].kind != ActivityKind::timed)
    throw ModelError("wire_timed_output needs a timed activity");
  if (c >= def_.controls.size()) throw ModelError("unknown control index " + std::to_string(c));
  if (g >= def_.output_gates.size()) throw ModelError("unknown output gate");
  if (index < 1 || index > def_.output_gates[g].spec.arity) throw ModelError("output index exceeds gate arity");
  for (const auto& e : def_.timed_output_relation) {
    if (e.activity == a && e.place == p) throw ModelError("timed activity already outputs to this place");
    if (e.gate == g && e.activity == a && e.control == c && e.index == index)
      throw ModelError("gate index already wired");
  }
  for (const auto& e : def_.instantaneous_output_relation)
    if (e.gate == g && e.index == index) throw ModelError("gate index already wired in IOR");
  def_.timed_output_relation.push_back({a, c, g, index, p});
  return *this;
}

Net NetBuilder::build() const {
  Net net(def_);
  auto rep = validate_net(net);
  if (!rep.ok()) {
    std::string msg = "invalid net:";
    for (const auto& v : rep.violations) msg += " [" + v.code + "] " + v.message + ";";
    throw ModelError(msg);
  }
  return net;
}

}  // namespace csan
