#include "csan/cli/io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "csan/error.hpp"
#include "csan/gate_lang.hpp"

namespace csan::cli {

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& msg) { throw LocatedError(msg, where); }

const json& field(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) fail(where, std::string("missing field \"") + key + "\"");
  return j.at(key);
}

std::string str(const json& j, const std::string& where) {
  if (!j.is_string()) fail(where, "expected a string");
  return j.get<std::string>();
}

std::size_t nat(const json& j, const std::string& where) {
  if (!j.is_number_integer() || j.get<long long>() < 0) fail(where, "expected a nonnegative integer");
  return j.get<std::size_t>();
}

std::vector<std::string> strings(const json& j, const std::string& where) {
  if (!j.is_array()) fail(where, "expected an array of names");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(str(j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

std::size_t lookup(const std::vector<std::string>& names, const json& j, const std::string& where, const char* what) {
  std::string n = str(j, where);
  auto it = std::find(names.begin(), names.end(), n);
  if (it == names.end()) fail(where, std::string("unknown ") + what + " \"" + n + "\"");
  return static_cast<std::size_t>(it - names.begin());
}

// nullopt for "*" or a missing key.
std::optional<std::size_t> lookup_opt(const std::vector<std::string>& names, const json& j, const char* key,
                                      const std::string& where, const char* what) {
  if (!j.contains(key)) return std::nullopt;
  const json& v = j.at(key);
  if (v.is_string() && v.get<std::string>() == "*") return std::nullopt;
  return lookup(names, v, where + "." + key, what);
}

const json& arr(const json& j, const char* key, const std::string& where) {
  static const json empty = json::array();
  if (!j.contains(key)) return empty;
  const json& v = j.at(key);
  if (!v.is_array()) fail(where + "." + key, "expected an array");
  return v;
}

std::string at(const std::string& base, std::size_t i) { return base + "[" + std::to_string(i) + "]"; }

MarkingPattern pattern_from_json(const json& j, const std::vector<std::string>& places, const std::string& where) {
  MarkingPattern p;
  if (j.is_string() && j.get<std::string>() == "*") return p;
  p.places.assign(places.size(), std::nullopt);
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      auto pos = std::find(places.begin(), places.end(), it.key());
      if (pos == places.end()) fail(where, "unknown place \"" + it.key() + "\"");
      if (it.value().is_string() && it.value().get<std::string>() == "*") continue;
      p.places[pos - places.begin()] = nat(it.value(), where + "." + it.key());
    }
    return p;
  }
  if (j.is_array()) {
    if (j.size() != places.size()) fail(where, "marking pattern needs one entry per place");
    for (std::size_t i = 0; i < j.size(); ++i)
      if (!j[i].is_null() && !(j[i].is_string() && j[i].get<std::string>() == "*")) p.places[i] = nat(j[i], at(where, i));
    return p;
  }
  fail(where, "expected \"*\", an object of place counts or an array");
}

ControlDist dist_from_json(const json& j, const std::vector<std::string>& controls, const std::string& where) {
  if (j.is_string()) return ControlDist::point(lookup(controls, j, where, "control"));
  if (!j.is_object()) fail(where, "expected a control name or an object of control weights");
  std::vector<std::pair<ControlId, double>> w;
  for (auto it = j.begin(); it != j.end(); ++it) {
    auto pos = std::find(controls.begin(), controls.end(), it.key());
    if (pos == controls.end()) fail(where, "unknown control \"" + it.key() + "\"");
    w.push_back({static_cast<ControlId>(pos - controls.begin()), read_number(it.value(), where + "." + it.key())});
  }
  double s = 0;
  for (auto& [c, x] : w) s += x;
  if (std::abs(s - 1.0) > 1e-9) fail(where, "control weights sum to " + prob_string(s));
  return ControlDist::from(std::move(w));
}

json dist_to_json(const ControlDist& d, const std::vector<std::string>& controls) {
  if (d.is_point()) return controls.at(d.weights[0].first);
  json o = json::object();
  for (auto [c, x] : d.weights) o[controls.at(c)] = prob_string(x);
  return o;
}

}  // namespace

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LocatedError("cannot open file", path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw LocatedError(std::string("invalid JSON: ") + e.what(), path + "@" + std::to_string(e.byte));
  }
}

std::string prob_string(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double read_number(const json& j, const std::string& where) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    try {
      std::size_t used = 0;
      double x = std::stod(s, &used);
      if (used == s.size()) return x;
    } catch (const std::exception&) {
    }
  }
  fail(where, "expected a number or a decimal string");
}

bool is_automaton_document(const json& j) { return j.is_object() && j.contains("kind"); }

ModelFile parse_model(const json& j) {
  if (!j.is_object()) fail("$", "model must be a JSON object");
  ModelFile mf;
  NetDefinition def;
  def.places = strings(field(j, "places", "$"), "$.places");
  const json& acts = field(j, "activities", "$");
  if (!acts.is_array()) fail("$.activities", "expected an array");
  for (std::size_t i = 0; i < acts.size(); ++i) {
    std::string w = at("$.activities", i);
    Activity a;
    a.name = str(field(acts[i], "name", w), w + ".name");
    std::string kind = acts[i].contains("kind") ? str(acts[i]["kind"], w + ".kind") : "timed";
    if (kind == "timed")
      a.kind = ActivityKind::timed;
    else if (kind == "instantaneous")
      a.kind = ActivityKind::instantaneous;
    else
      fail(w + ".kind", "expected \"timed\" or \"instantaneous\"");
    def.activities.push_back(a);
  }
  std::vector<std::string> anames;
  for (const auto& a : def.activities) anames.push_back(a.name);
  if (j.contains("controls")) def.controls = strings(j["controls"], "$.controls");

  std::map<std::string, std::pair<GateKind, GateId>> gate_index;
  const json& gates = arr(j, "gates", "$");
  for (std::size_t i = 0; i < gates.size(); ++i) {
    std::string w = at("$.gates", i);
    std::string name = str(field(gates[i], "name", w), w + ".name");
    std::string kind = str(field(gates[i], "kind", w), w + ".kind");
    std::size_t arity = gates[i].contains("arity") ? nat(gates[i]["arity"], w + ".arity") : 1;
    std::string text = str(field(gates[i], "spec", w), w + ".spec");
    GateKind gk;
    if (kind == "input")
      gk = GateKind::input;
    else if (kind == "output")
      gk = GateKind::output;
    else
      fail(w + ".kind", "expected \"input\" or \"output\"");
    GateSpec spec;
    try {
      spec = parse_gate_spec(text, arity, gk);
    } catch (const ParseError& e) {
      throw LocatedError(e.what(), w + ".spec:" + std::to_string(e.line()) + ":" + std::to_string(e.column()));
    }
    if (gate_index.count(name)) fail(w + ".name", "duplicate gate name \"" + name + "\"");
    auto& list = gk == GateKind::input ? def.input_gates : def.output_gates;
    gate_index[name] = {gk, list.size()};
    list.push_back({name, spec});
  }
  auto gate_ref = [&](const json& g, GateKind want, const std::string& w) {
    std::string n = str(g, w);
    auto it = gate_index.find(n);
    if (it == gate_index.end()) fail(w, "unknown gate \"" + n + "\"");
    if (it->second.first != want)
      fail(w, "gate \"" + n + "\" is an " + (want == GateKind::input ? "output" : "input") + " gate");
    return it->second.second;
  };

  if (j.contains("relations")) {
    const json& rel = j["relations"];
    const json& ir = arr(rel, "input", "$.relations");
    for (std::size_t i = 0; i < ir.size(); ++i) {
      std::string w = at("$.relations.input", i);
      InputArc a;
      a.place = lookup(def.places, field(ir[i], "place", w), w + ".place", "place");
      a.index = ir[i].contains("index") ? nat(ir[i]["index"], w + ".index") : 1;
      a.gate = gate_ref(field(ir[i], "gate", w), GateKind::input, w + ".gate");
      a.activity = lookup(anames, field(ir[i], "activity", w), w + ".activity", "activity");
      def.input_relation.push_back(a);
    }
    const json& ior = arr(rel, "instantaneous_output", "$.relations");
    for (std::size_t i = 0; i < ior.size(); ++i) {
      std::string w = at("$.relations.instantaneous_output", i);
      InstantaneousOutputArc a;
      a.activity = lookup(anames, field(ior[i], "activity", w), w + ".activity", "activity");
      a.gate = gate_ref(field(ior[i], "gate", w), GateKind::output, w + ".gate");
      a.index = ior[i].contains("index") ? nat(ior[i]["index"], w + ".index") : 1;
      a.place = lookup(def.places, field(ior[i], "place", w), w + ".place", "place");
      def.instantaneous_output_relation.push_back(a);
    }
    const json& tor = arr(rel, "timed_output", "$.relations");
    for (std::size_t i = 0; i < tor.size(); ++i) {
      std::string w = at("$.relations.timed_output", i);
      TimedOutputArc a;
      a.activity = lookup(anames, field(tor[i], "activity", w), w + ".activity", "activity");
      a.control = lookup(def.controls, field(tor[i], "control", w), w + ".control", "control");
      a.gate = gate_ref(field(tor[i], "gate", w), GateKind::output, w + ".gate");
      a.index = tor[i].contains("index") ? nat(tor[i]["index"], w + ".index") : 1;
      a.place = lookup(def.places, field(tor[i], "place", w), w + ".place", "place");
      def.timed_output_relation.push_back(a);
    }
  }

  // Arc shorthands, each with its own standard gate.
  if (j.contains("arcs")) {
    const json& arcs = j["arcs"];
    auto add_in = [&](const char* key, const char* prefix, GateSpec spec) {
      const json& list = arr(arcs, key, "$.arcs");
      for (std::size_t i = 0; i < list.size(); ++i) {
        std::string w = at(std::string("$.arcs.") + key, i);
        PlaceId p = lookup(def.places, field(list[i], "place", w), w + ".place", "place");
        ActivityId a = lookup(anames, field(list[i], "activity", w), w + ".activity", "activity");
        GateId g = def.input_gates.size();
        def.input_gates.push_back({std::string(prefix) + def.places[p] + ">" + anames[a], spec});
        def.input_relation.push_back({p, 1, g, a});
      }
    };
    add_in("input", "in:", gates::standard_input());
    add_in("inhibitor", "inh:", gates::inhibitor());
    const json& out = arr(arcs, "output", "$.arcs");
    for (std::size_t i = 0; i < out.size(); ++i) {
      std::string w = at("$.arcs.output", i);
      ActivityId a = lookup(anames, field(out[i], "activity", w), w + ".activity", "activity");
      PlaceId p = lookup(def.places, field(out[i], "place", w), w + ".place", "place");
      GateId g = def.output_gates.size();
      def.output_gates.push_back({"out:" + anames[a] + ">" + def.places[p], gates::standard_output()});
      def.instantaneous_output_relation.push_back({a, g, 1, p});
    }
    const json& tout = arr(arcs, "timed_output", "$.arcs");
    for (std::size_t i = 0; i < tout.size(); ++i) {
      std::string w = at("$.arcs.timed_output", i);
      ActivityId a = lookup(anames, field(tout[i], "activity", w), w + ".activity", "activity");
      ControlId c = lookup(def.controls, field(tout[i], "control", w), w + ".control", "control");
      PlaceId p = lookup(def.places, field(tout[i], "place", w), w + ".place", "place");
      GateId g = def.output_gates.size();
      def.output_gates.push_back(
          {"out:" + anames[a] + "/" + def.controls[c] + ">" + def.places[p], gates::standard_output()});
      def.timed_output_relation.push_back({a, c, g, 1, p});
    }
  }

  mf.initial.assign(def.places.size(), 0);
  if (j.contains("initial")) {
    const json& init = j["initial"];
    if (init.is_array()) {
      if (init.size() != def.places.size()) fail("$.initial", "initial marking needs one count per place");
      for (std::size_t i = 0; i < init.size(); ++i) mf.initial[i] = nat(init[i], at("$.initial", i));
    } else if (init.is_object()) {
      for (auto it = init.begin(); it != init.end(); ++it) {
        auto pos = std::find(def.places.begin(), def.places.end(), it.key());
        if (pos == def.places.end()) fail("$.initial", "unknown place \"" + it.key() + "\"");
        mf.initial[pos - def.places.begin()] = nat(it.value(), "$.initial." + it.key());
      }
    } else {
      fail("$.initial", "expected an array or an object of place counts");
    }
  }

  const json& ip = arr(j, "ip", "$");
  for (std::size_t i = 0; i < ip.size(); ++i) {
    std::string w = at("$.ip", i);
    WeightEntry e;
    e.activity = lookup(anames, field(ip[i], "activity", w), w + ".activity", "activity");
    if (def.activities[e.activity].kind != ActivityKind::instantaneous)
      fail(w + ".activity", "weights apply to instantaneous activities only");
    if (ip[i].contains("marking")) e.pattern = pattern_from_json(ip[i]["marking"], def.places, w + ".marking");
    e.weight = read_number(field(ip[i], "weight", w), w + ".weight");
    if (!(e.weight >= 0)) fail(w + ".weight", "weights must be nonnegative");
    mf.csan.cpan.weights.push_back(e);
  }

  const json& timing = arr(j, "timing", "$");
  mf.has_timing = !timing.empty();
  for (std::size_t i = 0; i < timing.size(); ++i) {
    std::string w = at("$.timing", i);
    TimingEntry e;
    e.activity = lookup(anames, field(timing[i], "activity", w), w + ".activity", "activity");
    if (def.activities[e.activity].kind != ActivityKind::timed)
      fail(w + ".activity", "timing applies to timed activities only");
    if (timing[i].contains("marking"))
      e.pattern = pattern_from_json(timing[i]["marking"], def.places, w + ".marking");
    if (timing[i].contains("distribution"))
      e.distribution = distribution_from_json(timing[i]["distribution"], w + ".distribution");
    if (timing[i].contains("rho")) {
      e.rho = read_number(timing[i]["rho"], w + ".rho");
      if (!(*e.rho >= 0)) fail(w + ".rho", "rho must be nonnegative");
    }
    if (timing[i].contains("reactivation")) {
      if (!timing[i]["reactivation"].is_boolean()) fail(w + ".reactivation", "expected a boolean");
      e.reactivation = timing[i]["reactivation"].get<bool>();
    }
    mf.csan.timing.push_back(e);
  }

  if (j.contains("accepting")) {
    const json& acc = j["accepting"];
    if (!acc.is_array()) fail("$.accepting", "expected an array of marking patterns");
    mf.has_accepting = true;
    for (std::size_t i = 0; i < acc.size(); ++i)
      mf.accepting.push_back(pattern_from_json(acc[i], def.places, at("$.accepting", i)));
  }
  if (j.contains("rewards")) mf.rewards = j["rewards"];
  mf.csan.cpan.net = Net(std::move(def));
  return mf;
}

std::optional<std::vector<StateId>> accepting_states(const ModelFile& m, const std::vector<Marking>& markings) {
  if (!m.has_accepting) return std::nullopt;
  std::vector<StateId> f;
  for (StateId q = 0; q < markings.size(); ++q) {
    if (markings[q].empty()) continue;  // Delta
    for (const auto& p : m.accepting)
      if (p.matches(markings[q])) {
        f.push_back(q);
        break;
      }
  }
  return f;
}

json to_json(const ValidationReport& r) {
  json v = json::array();
  for (const auto& x : r.violations) v.push_back({{"code", x.code}, {"message", x.message}});
  return {{"ok", r.ok()}, {"violations", v}};
}

json to_json(const DistributionSpec& d) {
  switch (d.kind) {
    case DistKind::exponential: return {{"type", "exponential"}, {"rate", d.p1}};
    case DistKind::deterministic: return {{"type", "deterministic"}, {"value", d.p1}};
    case DistKind::uniform: return {{"type", "uniform"}, {"lo", d.p1}, {"hi", d.p2}};
    case DistKind::erlang: return {{"type", "erlang"}, {"k", d.k}, {"rate", d.p1}};
    case DistKind::weibull: return {{"type", "weibull"}, {"shape", d.p1}, {"scale", d.p2}};
  }
  return {};
}

DistributionSpec distribution_from_json(const json& j, const std::string& where) {
  std::string t = str(field(j, "type", where), where + ".type");
  auto num = [&](const char* k) { return read_number(field(j, k, where), where + "." + k); };
  DistributionSpec d;
  try {
    if (t == "exponential")
      d = DistributionSpec::exponential(num("rate"));
    else if (t == "deterministic")
      d = DistributionSpec::deterministic(num("value"));
    else if (t == "uniform")
      d = DistributionSpec::uniform(num("lo"), num("hi"));
    else if (t == "erlang")
      d = DistributionSpec::erlang(static_cast<unsigned>(nat(field(j, "k", where), where + ".k")), num("rate"));
    else if (t == "weibull")
      d = DistributionSpec::weibull(num("shape"), num("scale"));
    else
      fail(where + ".type", "unknown distribution type \"" + t + "\"");
    d.check();
  } catch (const DomainError& e) {
    fail(where, e.what());
  }
  return d;
}

namespace {

json header(const char* kind, const std::vector<std::string>& states, const std::vector<std::string>& activities,
            const std::vector<std::string>& controls) {
  return {{"kind", kind}, {"states", states}, {"activities", activities}, {"controls", controls}};
}

void put_accepting(json& j, const std::optional<std::vector<StateId>>& f, const std::vector<std::string>& states) {
  if (!f) return;
  json a = json::array();
  for (StateId q : *f) a.push_back(states[q]);
  j["accepting"] = a;
}

json initial_dist(const std::vector<double>& init, const std::vector<std::string>& states) {
  json o = json::object();
  for (StateId q = 0; q < init.size(); ++q)
    if (init[q] > 0) o[states[q]] = prob_string(init[q]);
  return o;
}

struct Names {
  std::vector<std::string> states, activities, controls;
};

Names names_of(const json& j) {
  Names n;
  n.states = strings(field(j, "states", "$"), "$.states");
  n.activities = strings(field(j, "activities", "$"), "$.activities");
  n.controls = strings(field(j, "controls", "$"), "$.controls");
  return n;
}

std::optional<std::vector<StateId>> read_accepting(const json& j, const Names& n) {
  if (!j.contains("accepting")) return std::nullopt;
  const json& a = j["accepting"];
  if (!a.is_array()) fail("$.accepting", "expected an array of state names");
  std::vector<StateId> f;
  for (std::size_t i = 0; i < a.size(); ++i) f.push_back(lookup(n.states, a[i], at("$.accepting", i), "state"));
  return f;
}

std::vector<double> read_initial_dist(const json& j, const Names& n) {
  std::vector<double> init(n.states.size(), 0.0);
  const json& i0 = field(j, "initial", "$");
  if (i0.is_array()) {
    // A list of names means a uniform initial distribution.
    for (std::size_t i = 0; i < i0.size(); ++i)
      init[lookup(n.states, i0[i], at("$.initial", i), "state")] += 1.0 / static_cast<double>(i0.size());
    return init;
  }
  if (!i0.is_object()) fail("$.initial", "expected an object of state probabilities");
  for (auto it = i0.begin(); it != i0.end(); ++it) {
    auto pos = std::find(n.states.begin(), n.states.end(), it.key());
    if (pos == n.states.end()) fail("$.initial", "unknown state \"" + it.key() + "\"");
    init[pos - n.states.begin()] = read_number(it.value(), "$.initial." + it.key());
  }
  return init;
}

void expect_kind(const json& j, std::initializer_list<const char*> kinds) {
  std::string k = str(field(j, "kind", "$"), "$.kind");
  for (const char* x : kinds)
    if (k == x) return;
  std::string all;
  for (const char* x : kinds) all += std::string(all.empty() ? "" : ", ") + x;
  fail("$.kind", "expected kind " + all + ", got \"" + k + "\"");
}

std::vector<ProbTransition> read_prob_transitions(const json& j, const Names& n, const char* value_key) {
  std::vector<ProbTransition> out;
  const json& ts = arr(j, "transitions", "$");
  for (std::size_t i = 0; i < ts.size(); ++i) {
    std::string w = at("$.transitions", i);
    ProbTransition t;
    t.from = lookup(n.states, field(ts[i], "from", w), w + ".from", "state");
    t.activity = lookup(n.activities, field(ts[i], "activity", w), w + ".activity", "activity");
    t.control = lookup(n.controls, field(ts[i], "control", w), w + ".control", "control");
    t.to = lookup(n.states, field(ts[i], "to", w), w + ".to", "state");
    t.p = read_number(field(ts[i], value_key, w), w + "." + value_key);
    out.push_back(t);
  }
  return out;
}

}  // namespace

json to_json(const ControlledAutomaton& s) {
  json j = header(s.accepting ? "cba" : "ca", s.states, s.activities, s.controls);
  json init = json::array();
  for (StateId q : s.initial) init.push_back(s.states[q]);
  j["initial"] = init;
  put_accepting(j, s.accepting, s.states);
  json ts = json::array();
  for (const auto& t : s.transitions)
    ts.push_back({{"from", s.states[t.from]},
                  {"activity", s.activities[t.activity]},
                  {"control", s.controls[t.control]},
                  {"to", s.states[t.to]}});
  j["transitions"] = ts;
  return j;
}

json to_json(const Cpa& u, const char* kind) {
  json j = header(kind, u.states, u.activities, u.controls);
  j["initial"] = initial_dist(u.initial, u.states);
  put_accepting(j, u.accepting, u.states);
  json ts = json::array();
  for (const auto& t : u.transitions)
    ts.push_back({{"from", u.states[t.from]},
                  {"activity", u.activities[t.activity]},
                  {"control", u.controls[t.control]},
                  {"to", u.states[t.to]},
                  {"p", prob_string(t.p)}});
  j["transitions"] = ts;
  return j;
}

json to_json(const Csa& v) {
  json j = to_json(v.base, "csa");
  json tm = json::array();
  for (StateId q = 0; q < v.base.num_states(); ++q)
    for (SymbolId a = 0; a < v.base.activities.size(); ++a) {
      if (!v.distribution[q][a]) continue;
      tm.push_back({{"state", v.base.states[q]},
                    {"activity", v.base.activities[a]},
                    {"distribution", to_json(*v.distribution[q][a])},
                    {"rho", v.rho[q][a]},
                    {"reactivation", static_cast<bool>(v.reactivation[q][a])}});
    }
  j["timing"] = tm;
  return j;
}

json to_json(const Cma& w) {
  json j = to_json(w.base, "cma");
  json sg = json::array();
  for (StateId q = 0; q < w.sigma.size(); ++q)
    for (SymbolId a = 0; a < w.sigma[q].size(); ++a)
      if (w.sigma[q][a] > 0)
        sg.push_back({{"state", w.base.states[q]}, {"activity", w.base.activities[a]}, {"rate", w.sigma[q][a]}});
  j["sigma"] = sg;
  return j;
}

json to_json(const Dtmdp& d) {
  json j = header("dtmdp", d.states, d.activities, d.controls);
  j["initial"] = initial_dist(d.initial, d.states);
  json ts = json::array();
  for (const auto& t : d.transitions)
    ts.push_back({{"from", d.states[t.from]},
                  {"activity", d.activities[t.activity]},
                  {"control", d.controls[t.control]},
                  {"to", d.states[t.to]},
                  {"p", prob_string(t.p)}});
  j["transitions"] = ts;
  json rows = json::array();
  auto r = d.rows();
  for (StateId q = 0; q < r.size(); ++q)
    for (ControlId c = 0; c < r[q].size(); ++c)
      for (auto [to, p] : r[q][c])
        rows.push_back({{"from", d.states[q]}, {"control", d.controls[c]}, {"to", d.states[to]}, {"p", prob_string(p)}});
  j["matrix"] = rows;
  return j;
}

json to_json(const Ctmdp& m) {
  json j = header("ctmdp", m.states, m.activities, m.controls);
  j["initial"] = initial_dist(m.initial, m.states);
  json ts = json::array();
  for (const auto& t : m.terms)
    ts.push_back({{"from", m.states[t.from]},
                  {"activity", m.activities[t.activity]},
                  {"control", m.controls[t.control]},
                  {"to", m.states[t.to]},
                  {"rate", prob_string(t.rate)}});
  j["transitions"] = ts;
  auto l = m.exit_rates();
  auto rows = m.jump_rows();
  json ex = json::array(), jp = json::array();
  for (StateId q = 0; q < m.num_states(); ++q)
    for (ControlId c = 0; c < m.controls.size(); ++c) {
      if (l[q][c] <= 0) continue;
      ex.push_back({{"state", m.states[q]}, {"control", m.controls[c]}, {"lambda", prob_string(l[q][c])}});
      for (auto [to, p] : rows[q][c])
        jp.push_back({{"from", m.states[q]}, {"control", m.controls[c]}, {"to", m.states[to]}, {"p", prob_string(p)}});
    }
  j["exit_rates"] = ex;
  j["jump"] = jp;
  return j;
}

ControlledAutomaton automaton_from_json(const json& j) {
  expect_kind(j, {"ca", "cba"});
  Names n = names_of(j);
  ControlledAutomaton s;
  s.states = n.states;
  s.activities = n.activities;
  s.controls = n.controls;
  const json& init = field(j, "initial", "$");
  if (!init.is_array()) fail("$.initial", "expected an array of state names");
  for (std::size_t i = 0; i < init.size(); ++i) s.initial.push_back(lookup(n.states, init[i], at("$.initial", i), "state"));
  s.accepting = read_accepting(j, n);
  const json& ts = arr(j, "transitions", "$");
  for (std::size_t i = 0; i < ts.size(); ++i) {
    std::string w = at("$.transitions", i);
    s.transitions.push_back({lookup(n.states, field(ts[i], "from", w), w + ".from", "state"),
                             lookup(n.activities, field(ts[i], "activity", w), w + ".activity", "activity"),
                             lookup(n.controls, field(ts[i], "control", w), w + ".control", "control"),
                             lookup(n.states, field(ts[i], "to", w), w + ".to", "state")});
  }
  s.normalize();
  return s;
}

Cpa cpa_from_json(const json& j) {
  expect_kind(j, {"cpa", "csa", "cma"});
  Names n = names_of(j);
  Cpa u;
  u.states = n.states;
  u.activities = n.activities;
  u.controls = n.controls;
  u.initial = read_initial_dist(j, n);
  u.accepting = read_accepting(j, n);
  u.transitions = read_prob_transitions(j, n, "p");
  auto rep = validate_cpa(u);
  if (!rep.ok()) fail("$", rep.violations.front().code + ": " + rep.violations.front().message);
  u.normalize();
  return u;
}

Csa csa_from_json(const json& j) {
  expect_kind(j, {"csa"});
  Csa v;
  v.base = cpa_from_json(j);
  const std::size_t Q = v.base.num_states(), A = v.base.activities.size();
  v.distribution.assign(Q, std::vector<std::optional<DistributionSpec>>(A));
  v.rho.assign(Q, std::vector<double>(A, 1.0));
  v.reactivation.assign(Q, std::vector<bool>(A, false));
  const json& tm = arr(j, "timing", "$");
  for (std::size_t i = 0; i < tm.size(); ++i) {
    std::string w = at("$.timing", i);
    auto qs = lookup_opt(v.base.states, tm[i], "state", w, "state");
    auto as = lookup_opt(v.base.activities, tm[i], "activity", w, "activity");
    for (StateId q = 0; q < Q; ++q) {
      if (qs && *qs != q) continue;
      for (SymbolId a = 0; a < A; ++a) {
        if (as && *as != a) continue;
        if (tm[i].contains("distribution"))
          v.distribution[q][a] = distribution_from_json(tm[i]["distribution"], w + ".distribution");
        if (tm[i].contains("rho")) v.rho[q][a] = read_number(tm[i]["rho"], w + ".rho");
        if (tm[i].contains("reactivation")) v.reactivation[q][a] = tm[i]["reactivation"].get<bool>();
      }
    }
  }
  auto en = v.enabled();
  for (StateId q = 0; q < Q; ++q)
    for (SymbolId a = 0; a < A; ++a)
      if (!en[q][a]) v.distribution[q][a].reset();
  try {
    v.check();
  } catch (const ModelError& e) {
    fail("$.timing", e.what());
  }
  return v;
}

Cma cma_from_json(const json& j) {
  expect_kind(j, {"cma"});
  Cma w;
  w.base = cpa_from_json(j);
  w.sigma.assign(w.base.num_states(), std::vector<double>(w.base.activities.size(), 0.0));
  const json& sg = arr(j, "sigma", "$");
  for (std::size_t i = 0; i < sg.size(); ++i) {
    std::string p = at("$.sigma", i);
    auto qs = lookup_opt(w.base.states, sg[i], "state", p, "state");
    auto as = lookup_opt(w.base.activities, sg[i], "activity", p, "activity");
    double rate = read_number(field(sg[i], "rate", p), p + ".rate");
    if (!(rate > 0)) fail(p + ".rate", "sigma must be positive");
    for (StateId q = 0; q < w.base.num_states(); ++q)
      for (SymbolId a = 0; a < w.base.activities.size(); ++a)
        if ((!qs || *qs == q) && (!as || *as == a)) w.sigma[q][a] = rate;
  }
  return w;
}

Dtmdp dtmdp_from_json(const json& j) {
  expect_kind(j, {"dtmdp"});
  Names n = names_of(j);
  Cpa u;
  u.states = n.states;
  u.activities = n.activities;
  u.controls = n.controls;
  u.initial = read_initial_dist(j, n);
  u.transitions = read_prob_transitions(j, n, "p");
  try {
    return dtmdp_of_cpa(u);
  } catch (const ModelError& e) {
    fail("$.transitions", e.what());
  }
}

Ctmdp ctmdp_from_json(const json& j) {
  expect_kind(j, {"ctmdp"});
  Names n = names_of(j);
  Ctmdp m;
  m.states = n.states;
  m.activities = n.activities;
  m.controls = n.controls;
  m.initial = read_initial_dist(j, n);
  for (const auto& t : read_prob_transitions(j, n, "rate")) {
    if (!(t.p >= 0)) fail("$.transitions", "rates must be nonnegative");
    m.terms.push_back({t.from, t.activity, t.control, t.to, t.p});
  }
  return m;
}

PolicySpec policy_from_json(const json& j, const ControlledAutomaton& plant) {
  std::string cls = str(field(j, "class", "$"), "$.class");
  PolicyDims dims = PolicyDims::of(plant);
  const auto& S = plant.states;
  const auto& A = plant.activities;
  const auto& C = plant.controls;
  auto each = [&](const json& e, const std::string& w, auto&& fn) {
    auto qs = lookup_opt(S, e, "state", w, "state");
    auto as = lookup_opt(A, e, "activity", w, "activity");
    for (StateId q = 0; q < S.size(); ++q)
      for (SymbolId a = 0; a < A.size(); ++a)
        if ((!qs || *qs == q) && (!as || *as == a)) fn(q, a);
  };
  auto symbol = [&](const std::vector<std::string>& syms, const json& e, const char* key, const std::string& w) {
    return lookup_opt(syms, e, key, w, "symbol");
  };

  if (cls == "memoryless" || cls == "0") {
    if (C.empty()) fail("$", "plant has no controls");
    auto p = MemorylessPolicy::constant(dims, 0);
    if (j.contains("default")) {
      ControlDist d = dist_from_json(j["default"], C, "$.default");
      for (auto& o : p.output) o = d;
    }
    if (j.contains("output")) {
      const json& o = j["output"];
      if (!o.is_object()) fail("$.output", "expected an object from state to control");
      for (auto it = o.begin(); it != o.end(); ++it) {
        auto pos = std::find(S.begin(), S.end(), it.key());
        if (pos == S.end()) fail("$.output", "unknown state \"" + it.key() + "\"");
        p.output[pos - S.begin()] = dist_from_json(it.value(), C, "$.output." + it.key());
      }
    }
    return p;
  }
  if (cls == "finite" || cls == "F" || cls == "finite_memory") {
    if (C.empty()) fail("$", "plant has no controls");
    std::size_t M = nat(field(j, "memory", "$"), "$.memory");
    if (M == 0) fail("$.memory", "memory must be at least 1");
    std::size_t m0 = j.contains("initial") ? nat(j["initial"], "$.initial") : 0;
    if (m0 >= M) fail("$.initial", "initial memory out of range");
    auto p = FiniteMemoryPolicy::make(dims, M, m0);
    if (j.contains("reads_state")) p.reads_state = j["reads_state"].get<bool>();
    auto mem = [&](const json& e, const char* key, const std::string& w) -> std::optional<std::size_t> {
      if (!e.contains(key) || (e[key].is_string() && e[key].get<std::string>() == "*")) return std::nullopt;
      std::size_t m = nat(e[key], w + "." + key);
      if (m >= M) fail(w + "." + key, "memory state out of range");
      return m;
    };
    const json& nx = arr(j, "next", "$");
    for (std::size_t i = 0; i < nx.size(); ++i) {
      std::string w = at("$.next", i);
      auto from = mem(nx[i], "memory", w);
      auto to = mem(nx[i], "to", w);
      if (!to) fail(w + ".to", "missing target memory");
      for (MemoryId m = 0; m < M; ++m)
        if (!from || *from == m) each(nx[i], w, [&](StateId q, SymbolId a) { p.next_of(m, q, a) = *to; });
    }
    const json& out = arr(j, "output", "$");
    for (std::size_t i = 0; i < out.size(); ++i) {
      std::string w = at("$.output", i);
      auto m1 = mem(out[i], "memory", w);
      ControlDist d = dist_from_json(field(out[i], "control", w), C, w + ".control");
      auto qs = lookup_opt(S, out[i], "state", w, "state");
      for (MemoryId m = 0; m < M; ++m)
        for (StateId q = 0; q < S.size(); ++q)
          if ((!m1 || *m1 == m) && (!qs || *qs == q)) p.output_of(q, m) = d;
    }
    return p;
  }
  if (cls == "stack") {
    if (C.empty()) fail("$", "plant has no controls");
    auto syms = strings(field(j, "symbols", "$"), "$.symbols");
    TapeSymbol bottom = j.contains("bottom") ? lookup(syms, j["bottom"], "$.bottom", "symbol") : 0;
    auto p = StackPolicy::make(dims, syms, bottom);
    const json& up = arr(j, "update", "$");
    for (std::size_t i = 0; i < up.size(); ++i) {
      std::string w = at("$.update", i);
      auto top = symbol(syms, up[i], "top", w);
      const json& push = field(up[i], "push", w);
      if (!push.is_array()) fail(w + ".push", "expected an array of symbols, top first");
      std::vector<TapeSymbol> word;
      for (std::size_t k = 0; k < push.size(); ++k) word.push_back(lookup(syms, push[k], at(w + ".push", k), "symbol"));
      for (TapeSymbol g = 0; g < syms.size(); ++g)
        if (!top || *top == g) each(up[i], w, [&](StateId q, SymbolId a) { p.update_of(g, q, a) = word; });
    }
    const json& out = arr(j, "output", "$");
    for (std::size_t i = 0; i < out.size(); ++i) {
      std::string w = at("$.output", i);
      auto top = symbol(syms, out[i], "top", w);
      auto qs = lookup_opt(S, out[i], "state", w, "state");
      ControlDist d = dist_from_json(field(out[i], "control", w), C, w + ".control");
      for (TapeSymbol g = 0; g < syms.size(); ++g)
        for (StateId q = 0; q < S.size(); ++q)
          if ((!top || *top == g) && (!qs || *qs == q)) p.output_of(q, g) = d;
    }
    PolicySpec spec = p;
    try {
      validate_policy(spec);
    } catch (const ModelError& e) {
      fail("$", e.what());
    }
    return spec;
  }
  if (cls == "tape") {
    if (C.empty()) fail("$", "plant has no controls");
    auto syms = strings(field(j, "symbols", "$"), "$.symbols");
    TapeSymbol blank = j.contains("blank") ? lookup(syms, j["blank"], "$.blank", "symbol") : 0;
    auto p = TapePolicy::make(dims, syms, blank);
    const json& up = arr(j, "update", "$");
    for (std::size_t i = 0; i < up.size(); ++i) {
      std::string w = at("$.update", i);
      auto scan = symbol(syms, up[i], "scan", w);
      std::optional<TapeSymbol> write;
      if (up[i].contains("write")) write = lookup(syms, up[i]["write"], w + ".write", "symbol");
      HeadMove mv = HeadMove::stay;
      if (up[i].contains("move")) {
        std::string s = str(up[i]["move"], w + ".move");
        if (s == "left")
          mv = HeadMove::left;
        else if (s == "right")
          mv = HeadMove::right;
        else if (s != "stay")
          fail(w + ".move", "expected left, right or stay");
      }
      for (TapeSymbol g = 0; g < syms.size(); ++g)
        if (!scan || *scan == g)
          each(up[i], w, [&](StateId q, SymbolId a) { p.update_of(g, q, a) = {write ? *write : g, mv}; });
    }
    const json& out = arr(j, "output", "$");
    for (std::size_t i = 0; i < out.size(); ++i) {
      std::string w = at("$.output", i);
      auto scan = symbol(syms, out[i], "scan", w);
      auto qs = lookup_opt(S, out[i], "state", w, "state");
      ControlDist d = dist_from_json(field(out[i], "control", w), C, w + ".control");
      for (TapeSymbol g = 0; g < syms.size(); ++g)
        for (StateId q = 0; q < S.size(); ++q)
          if ((!scan || *scan == g) && (!qs || *qs == q)) p.output_of(q, g) = d;
    }
    return p;
  }
  if (cls == "history") fail("$.class", "history-dependent policies have no file representation");
  fail("$.class", "unknown policy class \"" + cls + "\"");
}

json policy_to_json(const PolicySpec& spec, const ControlledAutomaton& plant) {
  const auto& S = plant.states;
  const auto& A = plant.activities;
  const auto& C = plant.controls;
  if (auto* p = std::get_if<MemorylessPolicy>(&spec)) {
    json o = json::object();
    for (StateId q = 0; q < p->output.size(); ++q) o[S[q]] = dist_to_json(p->output[q], C);
    return {{"class", "memoryless"}, {"output", o}};
  }
  if (auto* p = std::get_if<FiniteMemoryPolicy>(&spec)) {
    json nx = json::array(), out = json::array();
    for (MemoryId m = 0; m < p->memory; ++m) {
      // Collapse rules that agree across all states.
      for (SymbolId a = 0; a < A.size(); ++a) {
        bool uniform = true;
        for (StateId q = 1; q < S.size(); ++q) uniform = uniform && p->next_of(m, q, a) == p->next_of(m, 0, a);
        if (uniform && !S.empty()) {
          if (p->next_of(m, 0, a) != m) nx.push_back({{"memory", m}, {"activity", A[a]}, {"to", p->next_of(m, 0, a)}});
        } else {
          for (StateId q = 0; q < S.size(); ++q)
            if (p->next_of(m, q, a) != m)
              nx.push_back({{"memory", m}, {"state", S[q]}, {"activity", A[a]}, {"to", p->next_of(m, q, a)}});
        }
      }
      bool uniform = true;
      for (StateId q = 1; q < S.size(); ++q) uniform = uniform && p->output_of(q, m) == p->output_of(0, m);
      if (uniform && !S.empty()) {
        out.push_back({{"memory", m}, {"control", dist_to_json(p->output_of(0, m), C)}});
      } else {
        for (StateId q = 0; q < S.size(); ++q)
          out.push_back({{"memory", m}, {"state", S[q]}, {"control", dist_to_json(p->output_of(q, m), C)}});
      }
    }
    return {{"class", "finite"}, {"memory", p->memory}, {"initial", p->initial}, {"reads_state", p->reads_state},
            {"next", nx},        {"output", out}};
  }
  if (auto* p = std::get_if<StackPolicy>(&spec)) {
    json up = json::array(), out = json::array();
    for (TapeSymbol g = 0; g < p->symbols.size(); ++g)
      for (StateId q = 0; q < S.size(); ++q) {
        for (SymbolId a = 0; a < A.size(); ++a) {
          const auto& w = p->update_of(g, q, a);
          if (w.size() == 1 && w[0] == g) continue;
          json push = json::array();
          for (TapeSymbol x : w) push.push_back(p->symbols[x]);
          up.push_back({{"top", p->symbols[g]}, {"state", S[q]}, {"activity", A[a]}, {"push", push}});
        }
        out.push_back({{"top", p->symbols[g]}, {"state", S[q]}, {"control", dist_to_json(p->output_of(q, g), C)}});
      }
    return {{"class", "stack"}, {"symbols", p->symbols}, {"bottom", p->symbols[p->bottom]}, {"update", up},
            {"output", out}};
  }
  if (auto* p = std::get_if<TapePolicy>(&spec)) {
    json up = json::array(), out = json::array();
    const char* moves[] = {"left", "right", "stay"};
    for (TapeSymbol g = 0; g < p->symbols.size(); ++g)
      for (StateId q = 0; q < S.size(); ++q) {
        for (SymbolId a = 0; a < A.size(); ++a) {
          const auto& act = p->update_of(g, q, a);
          if (act.write == g && act.move == HeadMove::stay) continue;
          up.push_back({{"scan", p->symbols[g]},
                        {"state", S[q]},
                        {"activity", A[a]},
                        {"write", p->symbols[act.write]},
                        {"move", moves[static_cast<int>(act.move)]}});
        }
        out.push_back({{"scan", p->symbols[g]}, {"state", S[q]}, {"control", dist_to_json(p->output_of(q, g), C)}});
      }
    return {{"class", "tape"}, {"symbols", p->symbols}, {"blank", p->symbols[p->blank]}, {"update", up},
            {"output", out}};
  }
  return {{"class", "history"}};
}

FiniteMemoryPolicy first_admissible_policy(const Cpa& u) {
  const std::size_t Q = u.num_states(), A = u.activities.size();
  PolicyDims dims{Q, A, u.controls.size()};
  auto p = FiniteMemoryPolicy::make(dims, A + 1, A);
  auto rows = u.rows();
  for (MemoryId m = 0; m <= A; ++m)
    for (StateId q = 0; q < Q; ++q)
      for (SymbolId a = 0; a < A; ++a) p.next_of(m, q, a) = a;
  for (StateId q = 0; q < Q; ++q)
    for (SymbolId a = 0; a < A; ++a)
      for (ControlId c = 0; c < u.controls.size(); ++c)
        if (!rows[q][a][c].empty()) {
          p.output_of(q, a) = ControlDist::point(c);
          break;
        }
  return p;
}

RewardStructure rewards_from_json(const json& j, const std::vector<std::string>& states,
                                  const std::vector<std::string>& activities,
                                  const std::vector<std::string>& controls) {
  RewardStructure r;
  if (!j.is_object()) fail("$.rewards", "expected an object with rate and impulse tables");
  const json& rate = arr(j, "rate", "$.rewards");
  for (std::size_t i = 0; i < rate.size(); ++i) {
    std::string w = at("$.rewards.rate", i);
    RateReward e;
    e.state = lookup_opt(states, rate[i], "state", w, "state");
    e.control = lookup_opt(controls, rate[i], "control", w, "control");
    e.value = read_number(field(rate[i], "value", w), w + ".value");
    r.rate.push_back(e);
  }
  const json& imp = arr(j, "impulse", "$.rewards");
  for (std::size_t i = 0; i < imp.size(); ++i) {
    std::string w = at("$.rewards.impulse", i);
    ImpulseReward e;
    e.state = lookup_opt(states, imp[i], "state", w, "state");
    e.activity = lookup_opt(activities, imp[i], "activity", w, "activity");
    e.control = lookup_opt(controls, imp[i], "control", w, "control");
    e.target = lookup_opt(states, imp[i], "target", w, "state");
    e.value = read_number(field(imp[i], "value", w), w + ".value");
    r.impulse.push_back(e);
  }
  try {
    r.check();
  } catch (const DomainError& e) {
    fail("$.rewards", e.what());
  }
  return r;
}

std::vector<SymbolId> parse_word(const std::string& text, const std::vector<std::string>& activities) {
  std::vector<std::string> parts;
  if (text.find_first_of(", ") != std::string::npos) {
    std::string cur;
    for (char ch : text) {
      if (ch == ',' || ch == ' ') {
        if (!cur.empty()) parts.push_back(cur);
        cur.clear();
      } else {
        cur += ch;
      }
    }
    if (!cur.empty()) parts.push_back(cur);
  } else if (std::find(activities.begin(), activities.end(), text) != activities.end()) {
    parts.push_back(text);
  } else {
    for (char ch : text) parts.emplace_back(1, ch);
  }
  std::vector<SymbolId> w;
  for (const auto& p : parts) {
    auto it = std::find(activities.begin(), activities.end(), p);
    if (it == activities.end()) throw LocatedError("unknown activity \"" + p + "\" in word", "word");
    w.push_back(static_cast<SymbolId>(it - activities.begin()));
  }
  return w;
}

json to_json(const Witness& w, const ControlledAutomaton& plant) {
  auto name = [&](const std::vector<StateId>& st, std::size_t i) -> json {
    if (i >= st.size()) return nullptr;
    return st[i] < plant.states.size() ? plant.states[st[i]] : "#" + std::to_string(st[i]);
  };
  auto run = [&](const std::vector<StateId>& st, const std::vector<SymbolId>& word, const std::vector<ControlId>& c) {
    json steps = json::array();
    for (std::size_t i = 0; i < word.size(); ++i)
      steps.push_back({{"from", name(st, i)},
                       {"activity", plant.activities[word[i]]},
                       {"control", i < c.size() ? json(plant.controls[c[i]]) : json(nullptr)},
                       {"to", name(st, i + 1)}});
    return steps;
  };
  json j = {{"stem", run(w.states, w.word, w.controls)}};
  if (!w.cycle_word.empty()) j["cycle"] = run(w.cycle_states, w.cycle_word, w.cycle_controls);
  if (w.policy) j["policy"] = policy_to_json(*w.policy, plant);
  return j;
}

json to_json(const ValueFunction& v, const std::vector<std::string>& states, const std::vector<std::string>& controls) {
  json values = json::object(), policy = json::object();
  for (StateId q = 0; q < v.values.size(); ++q) {
    values[states[q]] = prob_string(v.values[q]);
    policy[states[q]] = v.policy[q] ? json(controls[*v.policy[q]]) : json(nullptr);
  }
  return {{"values", values},
          {"policy", policy},
          {"iterations", v.iterations},
          {"contraction", prob_string(v.contraction)},
          {"residual", prob_string(v.residual)},
          {"converged", v.converged}};
}

}  // namespace csan::cli
