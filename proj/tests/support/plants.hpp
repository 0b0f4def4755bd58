#pragma once

#include "csan/automata.hpp"
#include "csan/net.hpp"
#include "csan/policy.hpp"

namespace csan::testing {

// The eight-place example net; places P1..P8 are indices 0..7, controls c1..c4 are 0..3.
Net fig1_net();
Marking fig1_initial();

// States hit (accepting, initial) and miss; a/on -> hit, a/off -> miss.
ControlledAutomaton aloop_plant();
// Counts a's mod k and answers "on" exactly when the count returns to 0.
FiniteMemoryPolicy mod_k_policy(const ControlledAutomaton& aloop, std::size_t k);

// Deterministic complete plant s,A,B,F,D over {a,b} with controls ok, fin.
ControlledAutomaton anbn_plant();
// Push on a, pop on b, answer fin exactly at the bottom symbol.
StackPolicy anbn_stack_policy(const ControlledAutomaton& anbn);

// Buchi plant p (accepting, initial), r, d over {a,b} with controls wait, ok, bad.
ControlledAutomaton akb_plant();
// Memory 0..k counts a's in the current block, k+1 is the overflow state.
FiniteMemoryPolicy akb_block_policy(const ControlledAutomaton& akb, std::size_t k);

}  // namespace csan::testing
