#pragma once

#include <cstddef>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace csan {

// Rule (from, top) -> (to, push) with push written top first, |push| <= 2.
struct PushdownRule {
  std::size_t from = 0;
  std::size_t top = 0;
  std::size_t to = 0;
  std::vector<std::size_t> push;
};

struct PushdownSystem {
  std::size_t num_locations = 0;
  std::size_t num_symbols = 0;
  std::vector<PushdownRule> rules;
  std::vector<std::size_t> initial_locations;  // each starts with the single symbol initial_symbol
  std::size_t initial_symbol = 0;
  std::vector<bool> accepting;  // per location
  std::vector<std::string> location_names;
};

// Saturated automaton recognizing the reachable configurations. States
// 0..num_locations-1 are the control locations, then the final state, then
// one helper state per (location, symbol) target of a push rule.
struct PostStarAutomaton {
  static constexpr std::size_t epsilon = static_cast<std::size_t>(-1);
  std::size_t num_states = 0;
  std::size_t final_state = 0;
  std::vector<std::tuple<std::size_t, std::size_t, std::size_t>> transitions;  // (from, symbol or epsilon, to)
};

PostStarAutomaton post_star(const PushdownSystem& pds);

// Locations occurring in some reachable configuration.
std::vector<bool> reachable_locations(const PushdownSystem& pds);

// Heads (location, top) occurring in some reachable configuration.
std::vector<std::pair<std::size_t, std::size_t>> reachable_heads(const PushdownSystem& pds);

// Heads (p, g) with (p, g) =>+ (p, g w) along a run through an accepting
// location; an accepting infinite run exists iff one of them is reachable.
std::vector<std::pair<std::size_t, std::size_t>> repeating_heads(const PushdownSystem& pds);

}  // namespace csan
