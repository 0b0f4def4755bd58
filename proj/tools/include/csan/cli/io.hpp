#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "csan/automata.hpp"
#include "csan/error.hpp"
#include "csan/lang_analysis.hpp"
#include "csan/net.hpp"
#include "csan/policy.hpp"
#include "csan/prob.hpp"
#include "csan/solvers.hpp"
#include "csan/stoch.hpp"

namespace csan::cli {

using json = nlohmann::json;

// Input error with a JSON-path or line:column location.
class LocatedError : public ModelError {
 public:
  LocatedError(const std::string& message, std::string location)
      : ModelError(message), location_(std::move(location)) {}
  const std::string& location() const { return location_; }

 private:
  std::string location_;
};

json read_json_file(const std::string& path);

// Decimal string with round-trip precision.
std::string prob_string(double x);
// Accepts numbers and decimal strings.
double read_number(const json& j, const std::string& where);

struct ModelFile {
  Csan csan;  // net, instantaneous weights and timing
  Marking initial;
  std::vector<MarkingPattern> accepting;
  bool has_accepting = false;
  bool has_timing = false;
  std::optional<json> rewards;  // resolved against realized state names later
};

bool is_automaton_document(const json& j);

// Builds the definition without rejecting ill-formed wiring; validate_net
// reports that. Unknown names and malformed fields throw LocatedError.
ModelFile parse_model(const json& j);

json to_json(const ValidationReport& r);
json to_json(const DistributionSpec& d);
DistributionSpec distribution_from_json(const json& j, const std::string& where);

json to_json(const ControlledAutomaton& s);
json to_json(const Cpa& u, const char* kind = "cpa");
json to_json(const Csa& v);
json to_json(const Cma& w);
json to_json(const Dtmdp& d);
json to_json(const Ctmdp& m);

ControlledAutomaton automaton_from_json(const json& j);
Cpa cpa_from_json(const json& j);
Csa csa_from_json(const json& j);
Cma cma_from_json(const json& j);
Dtmdp dtmdp_from_json(const json& j);
Ctmdp ctmdp_from_json(const json& j);

// Accepting set of a realized model from the model file's patterns.
std::optional<std::vector<StateId>> accepting_states(const ModelFile& m, const std::vector<Marking>& markings);

// Policies refer to the plant's state, activity and control names; "*" is a wildcard.
PolicySpec policy_from_json(const json& j, const ControlledAutomaton& plant);
json policy_to_json(const PolicySpec& spec, const ControlledAutomaton& plant);

// Finite-memory policy remembering the last activity and answering with the
// lowest control that has a transition for it.
FiniteMemoryPolicy first_admissible_policy(const Cpa& u);

RewardStructure rewards_from_json(const json& j, const std::vector<std::string>& states,
                                  const std::vector<std::string>& activities,
                                  const std::vector<std::string>& controls);

// Letters separated by commas or spaces, or one character per letter when
// every activity name is a single character.
std::vector<SymbolId> parse_word(const std::string& text, const std::vector<std::string>& activities);

json to_json(const Witness& w, const ControlledAutomaton& plant);
json to_json(const ValueFunction& v, const std::vector<std::string>& states, const std::vector<std::string>& controls);

}  // namespace csan::cli
