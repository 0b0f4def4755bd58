#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "csan/gate_lang.hpp"

namespace csan {

using PlaceId = std::size_t;
using ActivityId = std::size_t;
using ControlId = std::size_t;
using GateId = std::size_t;

// Token counts ordered by place index.
using Marking = std::vector<Nat>;

struct MarkingHash {
  std::size_t operator()(const Marking& m) const noexcept;
};

std::string to_string(const Marking& m);

enum class ActivityKind { instantaneous, timed };

struct Activity {
  std::string name;
  ActivityKind kind = ActivityKind::timed;
};

struct Gate {
  std::string name;
  GateSpec spec;
};

// Indices are 1-based, as in the gate variables x1..xm.
struct InputArc {
  PlaceId place = 0;
  std::size_t index = 1;
  GateId gate = 0;
  ActivityId activity = 0;
};

struct InstantaneousOutputArc {
  ActivityId activity = 0;
  GateId gate = 0;
  std::size_t index = 1;
  PlaceId place = 0;
};

struct TimedOutputArc {
  ActivityId activity = 0;
  ControlId control = 0;
  GateId gate = 0;
  std::size_t index = 1;
  PlaceId place = 0;
};

struct NetDefinition {
  std::vector<std::string> places;
  std::vector<Activity> activities;
  std::vector<std::string> controls;
  std::vector<Gate> input_gates;
  std::vector<Gate> output_gates;
  std::vector<InputArc> input_relation;
  std::vector<InstantaneousOutputArc> instantaneous_output_relation;
  std::vector<TimedOutputArc> timed_output_relation;
};

struct Violation {
  std::string code;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  bool has(std::string_view code) const;
};

// A net with its gate wiring indexed per activity. Construction never
// throws on ill-formed wiring; validate_net reports it.
class Net {
 public:
  // One gate applied to one activity: places[k] is wired to index k+1.
  struct Wiring {
    GateId gate = 0;
    std::vector<PlaceId> places;
  };

  static constexpr PlaceId unwired = static_cast<PlaceId>(-1);

  Net() = default;
  explicit Net(NetDefinition def);

  const NetDefinition& definition() const { return def_; }
  std::size_t num_places() const { return def_.places.size(); }
  std::size_t num_activities() const { return def_.activities.size(); }
  std::size_t num_controls() const { return def_.controls.size(); }
  const Activity& activity(ActivityId a) const { return def_.activities.at(a); }
  bool is_timed(ActivityId a) const { return activity(a).kind == ActivityKind::timed; }

  std::optional<PlaceId> find_place(std::string_view name) const;
  std::optional<ActivityId> find_activity(std::string_view name) const;
  std::optional<ControlId> find_control(std::string_view name) const;

  // Timed activities in declaration order; this is the automaton alphabet A.
  const std::vector<ActivityId>& timed_activities() const { return timed_; }
  const std::vector<ActivityId>& instantaneous_activities() const { return instantaneous_; }

  // Controls under which a timed activity may complete: those named in TOR
  // for it, or all of CA when it has no TOR entry.
  const std::vector<ControlId>& admissible_controls(ActivityId a) const { return admissible_.at(a); }

  const std::vector<Wiring>& input_wiring(ActivityId a) const { return inputs_.at(a); }
  const std::vector<Wiring>& output_wiring(ActivityId a, std::optional<ControlId> c) const;

 private:
  NetDefinition def_;
  std::vector<ActivityId> timed_;
  std::vector<ActivityId> instantaneous_;
  std::vector<std::vector<ControlId>> admissible_;
  std::vector<std::vector<Wiring>> inputs_;
  std::vector<std::vector<Wiring>> inst_outputs_;
  std::vector<std::vector<std::vector<Wiring>>> timed_outputs_;  // [activity][control]
};

ValidationReport validate_net(const Net& net);

struct EnabledSet {
  std::vector<ActivityId> instantaneous;
  std::vector<ActivityId> timed;
  bool stable = true;
};

bool is_enabled(const Net& net, const Marking& mu, ActivityId a);
EnabledSet enabled_activities(const Net& net, const Marking& mu);

// Two-step firing: input gate functions on mu give mu'', then the output
// gates for (a, c) act on mu''. Priority of instantaneous activities is not
// enforced here.
Marking fire_activity(const Net& net, const Marking& mu, ActivityId a, std::optional<ControlId> c = std::nullopt);

// Builder that rejects invariant-breaking operations as they happen, so every
// net it produces passes validate_net.
class NetBuilder {
 public:
  PlaceId place(std::string name);
  ActivityId instantaneous(std::string name);
  ActivityId timed(std::string name);
  ControlId control(std::string name);
  GateId input_gate(std::string name, GateSpec spec);
  GateId output_gate(std::string name, GateSpec spec);

  // Arc shorthands; each creates its own standard (or inhibitor) gate.
  NetBuilder& input_arc(PlaceId p, ActivityId a);
  NetBuilder& inhibitor_arc(PlaceId p, ActivityId a);
  NetBuilder& output_arc(ActivityId a, PlaceId p);
  NetBuilder& timed_output_arc(ActivityId a, ControlId c, PlaceId p);

  NetBuilder& wire_input(PlaceId p, std::size_t index, GateId g, ActivityId a);
  NetBuilder& wire_output(ActivityId a, GateId g, std::size_t index, PlaceId p);
  NetBuilder& wire_timed_output(ActivityId a, ControlId c, GateId g, std::size_t index, PlaceId p);

  // Throws ModelError listing violations (e.g. a declared gate never wired).
  Net build() const;

 private:
  void check_place(PlaceId p) const;
  void check_activity(ActivityId a) const;
  NetDefinition def_;
};

}  // namespace csan
