#include "plants.hpp"

namespace csan::testing {

Net fig1_net() {
  NetBuilder b;
  for (int i = 1; i <= 8; ++i) b.place("P" + std::to_string(i));
  ActivityId t1 = b.timed("T1"), t2 = b.timed("T2"), t3 = b.timed("T3"), t4 = b.timed("T4");
  ActivityId i1 = b.instantaneous("I1"), i2 = b.instantaneous("I2");
  ControlId c1 = b.control("c1"), c2 = b.control("c2"), c3 = b.control("c3"), c4 = b.control("c4");
  GateId g1 = b.output_gate("G1", parse_gate_spec("fn: x1 + 1", 1, GateKind::output));
  GateId g2 = b.input_gate("G2", parse_gate_spec("pred: x1 >= 1; fn: x1 - 1", 1));
  GateId g3 = b.input_gate("G3", parse_gate_spec("pred: x1 + x2 <= 1; fn: x1, x2", 2));
  b.wire_input(2, 1, g3, t1).wire_input(3, 2, g3, t1);
  b.timed_output_arc(t1, c1, 0).wire_timed_output(t1, c1, g1, 1, 1);
  b.timed_output_arc(t1, c2, 2);
  b.input_arc(0, i1).output_arc(i1, 3);
  b.input_arc(1, i2).output_arc(i2, 4);
  b.wire_input(3, 1, g2, t2).input_arc(4, t2).input_arc(5, t2);
  b.timed_output_arc(t2, c3, 6).timed_output_arc(t2, c4, 7);
  b.input_arc(6, t3).timed_output_arc(t3, c1, 5);
  b.input_arc(7, t4).timed_output_arc(t4, c2, 5);
  return b.build();
}

Marking fig1_initial() { return {0, 0, 0, 1, 1, 1, 0, 0}; }

ControlledAutomaton aloop_plant() {
  ControlledAutomaton s;
  s.states = {"hit", "miss"};
  s.activities = {"a"};
  s.controls = {"on", "off"};
  for (StateId q = 0; q < 2; ++q) {
    s.transitions.push_back({q, 0, 0, 0});
    s.transitions.push_back({q, 0, 1, 1});
  }
  s.initial = {0};
  s.accepting = std::vector<StateId>{0};
  s.normalize();
  return s;
}

FiniteMemoryPolicy mod_k_policy(const ControlledAutomaton& aloop, std::size_t k) {
  auto p = FiniteMemoryPolicy::make(PolicyDims::of(aloop), k, 0);
  for (MemoryId m = 0; m < k; ++m) {
    p.set_next_all_states(m, 0, (m + 1) % k);
    p.set_output_all_states(m, ControlDist::point(m == 0 ? 0 : 1));
  }
  p.reads_state = false;
  return p;
}

ControlledAutomaton anbn_plant() {
  ControlledAutomaton s;
  s.states = {"s", "A", "B", "F", "D"};
  s.activities = {"a", "b"};
  s.controls = {"ok", "fin"};
  enum { S, A, B, F, D };
  const SymbolId a = 0, b = 1, ok = 0, fin = 1;
  auto add = [&](StateId q, SymbolId x, SymbolId c, StateId t) { s.transitions.push_back({q, x, c, t}); };
  add(S, a, ok, A);
  add(S, a, fin, D);
  add(A, a, ok, A);
  add(A, a, fin, D);
  add(A, b, ok, B);
  add(A, b, fin, F);
  add(B, b, ok, B);
  add(B, b, fin, F);
  for (SymbolId c : {ok, fin}) {
    add(S, b, c, D);
    add(B, a, c, D);
    add(F, a, c, D);
    add(F, b, c, D);
    add(D, a, c, D);
    add(D, b, c, D);
  }
  s.initial = {S};
  s.accepting = std::vector<StateId>{F};
  s.normalize();
  return s;
}

StackPolicy anbn_stack_policy(const ControlledAutomaton& anbn) {
  auto p = StackPolicy::make(PolicyDims::of(anbn), {"Z", "X"}, 0);
  const TapeSymbol Z = 0, X = 1;
  for (StateId q = 0; q < anbn.num_states(); ++q) {
    p.update_of(Z, q, 0) = {X, Z};
    p.update_of(X, q, 0) = {X, X};
    p.update_of(X, q, 1) = {};
    p.output_of(q, Z) = ControlDist::point(1);
    p.output_of(q, X) = ControlDist::point(0);
  }
  return p;
}

ControlledAutomaton akb_plant() {
  ControlledAutomaton s;
  s.states = {"p", "r", "d"};
  s.activities = {"a", "b"};
  s.controls = {"wait", "ok", "bad"};
  enum { P, R, D };
  const SymbolId a = 0, b = 1, wait = 0, ok = 1, bad = 2;
  for (StateId q : {P, R}) {
    s.transitions.push_back({q, a, wait, R});
    s.transitions.push_back({q, b, ok, P});
    s.transitions.push_back({q, a, ok, D});
    s.transitions.push_back({q, b, wait, D});
    s.transitions.push_back({q, a, bad, D});
    s.transitions.push_back({q, b, bad, D});
  }
  for (SymbolId x : {a, b})
    for (SymbolId c : {wait, ok, bad}) s.transitions.push_back({D, x, c, D});
  s.initial = {P};
  s.accepting = std::vector<StateId>{P};
  s.normalize();
  return s;
}

FiniteMemoryPolicy akb_block_policy(const ControlledAutomaton& akb, std::size_t k) {
  const std::size_t overflow = k + 1;
  auto p = FiniteMemoryPolicy::make(PolicyDims::of(akb), k + 2, 0);
  for (MemoryId m = 0; m <= overflow; ++m) {
    p.set_next_all_states(m, 0, m >= k ? overflow : m + 1);
    p.set_next_all_states(m, 1, m == k ? 0 : overflow);
    ControlId c = m == 0 ? 1 : m == overflow ? 2 : 0;
    p.set_output_all_states(m, ControlDist::point(c));
  }
  p.reads_state = false;
  return p;
}

}  // namespace csan::testing
