#include "csan/cli/commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <memory>

#include "csan/cli/io.hpp"
#include "csan/error.hpp"
#include "csan/reachability.hpp"

namespace csan::cli {

namespace {

// A loaded input: either a net model or an automaton document.
struct Input {
  std::string path;
  json doc;
  std::optional<ModelFile> model;
  std::string kind;  // automaton documents only
};

Input load(const std::string& path) {
  Input in;
  in.path = path;
  in.doc = read_json_file(path);
  if (is_automaton_document(in.doc)) {
    in.kind = in.doc["kind"].is_string() ? in.doc["kind"].get<std::string>() : "";
  } else {
    in.model = parse_model(in.doc);
    auto rep = validate_net(in.model->csan.cpan.net);
    if (!rep.ok()) throw LocatedError(rep.violations.front().code + ": " + rep.violations.front().message, path);
  }
  return in;
}

bool is_prob_kind(const std::string& k) { return k == "cpa" || k == "csa" || k == "cma"; }

ControlledAutomaton load_ca(const Input& in, const ExplorationBudget& b) {
  if (in.model) {
    auto r = realize_controlled_automaton(in.model->csan.cpan.net, in.model->initial, b);
    r.automaton.accepting = accepting_states(*in.model, r.markings);
    return r.automaton;
  }
  if (in.kind == "ca" || in.kind == "cba") return automaton_from_json(in.doc);
  if (is_prob_kind(in.kind)) return cpa_from_json(in.doc).support();
  throw LocatedError("a " + in.kind + " document has no controlled-automaton view", in.path);
}

Cpa load_cpa(const Input& in, const ExplorationBudget& b) {
  if (in.model) {
    auto r = realize_cpa(in.model->csan.cpan, in.model->initial, b);
    r.cpa.accepting = accepting_states(*in.model, r.markings);
    return r.cpa;
  }
  if (is_prob_kind(in.kind)) return cpa_from_json(in.doc);
  throw LocatedError("a " + in.kind + " document has no probabilistic-automaton view", in.path);
}

Csa load_csa(const Input& in, const ExplorationBudget& b) {
  if (in.model) {
    if (!in.model->has_timing) throw LocatedError("model has no timing table", in.path);
    auto r = realize_csa(in.model->csan, in.model->initial, b);
    r.csa.base.accepting = accepting_states(*in.model, r.markings);
    return r.csa;
  }
  if (in.kind == "csa") return csa_from_json(in.doc);
  if (in.kind == "cma") return csa_of_cma(cma_from_json(in.doc));
  throw LocatedError("a " + in.kind + " document has no timing", in.path);
}

Cma load_cma(const Input& in, const ExplorationBudget& b) {
  if (in.kind == "cma") return cma_from_json(in.doc);
  return to_cma(load_csa(in, b));
}

Dtmdp load_dtmdp(const Input& in, const ExplorationBudget& b) {
  if (in.kind == "dtmdp") return dtmdp_from_json(in.doc);
  return dtmdp_of_cpa(load_cpa(in, b));
}

Ctmdp load_ctmdp(const Input& in, const ExplorationBudget& b) {
  if (in.kind == "ctmdp") return ctmdp_from_json(in.doc);
  return ctmdp_of_cma(load_cma(in, b));
}

bool continuous_input(const Input& in) {
  if (in.model) return in.model->has_timing;
  return in.kind == "csa" || in.kind == "cma" || in.kind == "ctmdp";
}

// Rewards from --rewards, else from the input's own "rewards" section.
RewardStructure load_rewards(const Input& in, const std::string& file, const std::vector<std::string>& states,
                             const std::vector<std::string>& activities, const std::vector<std::string>& controls) {
  if (!file.empty()) return rewards_from_json(read_json_file(file), states, activities, controls);
  if (in.model && in.model->rewards) return rewards_from_json(*in.model->rewards, states, activities, controls);
  if (!in.model && in.doc.contains("rewards")) return rewards_from_json(in.doc["rewards"], states, activities, controls);
  return RewardStructure::zero();
}

ControlledAutomaton names_only(const std::vector<std::string>& states, const std::vector<std::string>& activities,
                               const std::vector<std::string>& controls) {
  ControlledAutomaton s;
  s.states = states;
  s.activities = activities;
  s.controls = controls;
  return s;
}

// Lowest available control per state, if no policy file is given.
MemorylessPolicy lowest_available(const Ctmdp& m) {
  PolicyDims dims{m.num_states(), m.activities.size(), m.controls.size()};
  auto p = MemorylessPolicy::constant(dims, 0);
  auto av = m.available();
  for (StateId q = 0; q < m.num_states(); ++q)
    for (ControlId c = 0; c < m.controls.size(); ++c)
      if (av[q][c]) {
        p.output[q] = ControlDist::point(c);
        break;
      }
  return p;
}

void print(std::ostream& out, const json& j) { out << j.dump(2) << "\n"; }

json error_json(const std::string& code, const std::string& message, const std::string& location = "") {
  json e = {{"error", {{"code", code}, {"message", message}}}};
  if (!location.empty()) e["error"]["location"] = location;
  return e;
}

struct Common {
  std::size_t max_states = 100000;
  ExplorationBudget budget() const {
    ExplorationBudget b;
    b.max_states = max_states;
    return b;
  }
};

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Controlled stochastic activity network analyses"};
  app.name("csan");
  app.require_subcommand(1);
  Common common;
  app.add_option("--max-states", common.max_states, "Exploration budget in states")->check(CLI::PositiveNumber);
  // Every subcommand fills this from its own options.
  std::function<int()> action;

  std::string file_a, file_b, policy_file, word, rewards_file;

  auto* validate = app.add_subcommand("validate", "Check a model or automaton document");
  validate->add_option("model", file_a)->required();
  validate->callback([&] {
    action = [&] {
      json doc = read_json_file(file_a);
      ValidationReport rep;
      if (is_automaton_document(doc)) {
        std::string kind = doc["kind"].is_string() ? doc["kind"].get<std::string>() : "";
        if (kind == "ca" || kind == "cba") {
          automaton_from_json(doc).check();
        } else if (is_prob_kind(kind)) {
          rep = validate_cpa(cpa_from_json(doc));
          if (kind == "csa") csa_from_json(doc);
          if (kind == "cma") cma_from_json(doc);
        } else if (kind == "dtmdp") {
          dtmdp_from_json(doc);
        } else if (kind == "ctmdp") {
          ctmdp_from_json(doc);
        } else {
          throw LocatedError("unknown kind \"" + kind + "\"", "$.kind");
        }
      } else {
        rep = validate_net(parse_model(doc).csan.cpan.net);
      }
      print(out, to_json(rep));
      return rep.ok() ? exit_ok : exit_model;
    };
  });

  std::string realize_kind = "ca";
  auto* realize = app.add_subcommand("realize", "Realize a net model as an automaton");
  realize->add_option("model", file_a)->required();
  realize->add_option("--kind", realize_kind)->check(CLI::IsMember({"ca", "cpa", "csa"}));
  realize->callback([&] {
    action = [&] {
      Input in = load(file_a);
      if (realize_kind == "ca")
        print(out, to_json(load_ca(in, common.budget())));
      else if (realize_kind == "cpa")
        print(out, to_json(load_cpa(in, common.budget())));
      else
        print(out, to_json(load_csa(in, common.budget())));
      return exit_ok;
    };
  });

  std::string bisim_kind;
  double tol = 1e-9;
  auto* bisim = app.add_subcommand("bisim", "Coarsest bisimulation between two inputs");
  bisim->add_option("a", file_a)->required();
  bisim->add_option("b", file_b)->required();
  bisim->add_option("--kind", bisim_kind, "ca or cpa; default cpa when both inputs are probabilistic documents")
      ->check(CLI::IsMember({"ca", "cpa"}));
  bisim->add_option("--tolerance", tol)->check(CLI::PositiveNumber);
  bisim->callback([&] {
    action = [&] {
      Input a = load(file_a), b = load(file_b);
      std::string kind = bisim_kind;
      if (kind.empty()) kind = is_prob_kind(a.kind) && is_prob_kind(b.kind) ? "cpa" : "ca";
      std::optional<Bisimulation> rel;
      std::vector<std::string> ls, rs;
      if (kind == "ca") {
        auto s = load_ca(a, common.budget());
        auto t = align_alphabets(s, load_ca(b, common.budget()));
        rel = coarsest_bisimulation(s, t);
        ls = s.states;
        rs = t.states;
      } else {
        auto u = load_cpa(a, common.budget());
        auto v = load_cpa(b, common.budget());
        rel = prob_bisimulation(u, v, tol);
        ls = u.states;
        rs = v.states;
      }
      json pairs = json::array();
      if (rel)
        for (auto [l, r] : rel->pairs()) pairs.push_back({ls[l], rs[r]});
      print(out, {{"kind", kind}, {"equivalent", rel.has_value()}, {"pairs", pairs}});
      return rel ? exit_ok : exit_negative;
    };
  });

  bool buchi = false;
  auto* accept = app.add_subcommand("accept", "Does a policy accept a word; Buchi words are written prefix|period");
  accept->add_option("model", file_a)->required();
  accept->add_option("policy", policy_file)->required();
  accept->add_option("word", word)->required();
  accept->add_flag("--buchi", buchi);
  accept->callback([&] {
    action = [&] {
      Input in = load(file_a);
      auto s = load_ca(in, common.budget());
      if (!s.accepting) throw LocatedError("input has no accepting set", file_a);
      PolicySpec spec = policy_from_json(read_json_file(policy_file), s);
      bool ok;
      if (buchi) {
        auto bar = word.find('|');
        if (bar == std::string::npos) throw LocatedError("Buchi word needs prefix|period", "word");
        UltimatelyPeriodicWord w{parse_word(word.substr(0, bar), s.activities),
                                 parse_word(word.substr(bar + 1), s.activities)};
        if (w.period.empty()) throw LocatedError("period must be nonempty", "word");
        ok = accepts_ultimately_periodic(s, spec, w);
      } else {
        ok = accepts_finite(s, spec, parse_word(word, s.activities));
      }
      print(out, {{"accepted", ok}});
      return ok ? exit_ok : exit_negative;
    };
  });

  std::string cls_name = "F";
  std::size_t bound = 64;
  auto* empty = app.add_subcommand("empty", "Is the policy-restricted language empty");
  empty->add_option("model", file_a)->required();
  empty->add_option("--class", cls_name)->check(CLI::IsMember({"0", "F", "stack", "tape", "history"}));
  empty->add_flag("--buchi", buchi);
  empty->add_option("--policy", policy_file, "Stack policy for the stack class");
  empty->add_option("--bound", bound)->check(CLI::PositiveNumber);
  empty->callback([&] {
    action = [&] {
      Input in = load(file_a);
      auto s = load_ca(in, common.budget());
      if (!s.accepting) throw LocatedError("input has no accepting set", file_a);
      PolicyClass cls = cls_name == "0"       ? PolicyClass::memoryless
                        : cls_name == "F"     ? PolicyClass::finite_memory
                        : cls_name == "stack" ? PolicyClass::stack
                        : cls_name == "tape"  ? PolicyClass::tape
                                              : PolicyClass::history;
      EmptinessOptions opt;
      opt.bound = bound;
      opt.budget = common.budget();
      std::optional<PolicySpec> stack;
      if (cls == PolicyClass::stack) {
        if (policy_file.empty()) throw LocatedError("the stack class needs --policy", "--policy");
        stack = policy_from_json(read_json_file(policy_file), s);
        if (!std::holds_alternative<StackPolicy>(*stack)) throw LocatedError("expected a stack policy", policy_file);
        opt.stack_policy = &std::get<StackPolicy>(*stack);
      }
      EmptinessResult r = buchi ? emptiness_buchi(s, cls, opt) : emptiness_finite(s, cls, opt);
      json j = {{"verdict", to_string(r.verdict)}};
      if (r.witness) j["witness"] = to_json(*r.witness, s);
      if (r.bound) j["bound"] = *r.bound;
      if (!r.note.empty()) j["note"] = r.note;
      print(out, j);
      switch (r.verdict) {
        case Verdict::nonempty: return exit_ok;
        case Verdict::empty: return exit_negative;
        case Verdict::unknown: break;
      }
      return exit_budget;
    };
  });

  std::optional<double> theta;
  auto* wordprob = app.add_subcommand("wordprob", "Acceptance probability of a word under a policy");
  wordprob->add_option("model", file_a)->required();
  wordprob->add_option("policy", policy_file)->required();
  wordprob->add_option("word", word, "Finite word; omit with --buchi");
  wordprob->add_option("--theta", theta)->check(CLI::Range(0.0, 1.0));
  wordprob->add_flag("--buchi", buchi, "Probability that the closed loop visits F infinitely often");
  wordprob->callback([&] {
    action = [&] {
      Input in = load(file_a);
      Cpa u = load_cpa(in, common.budget());
      if (!u.accepting) throw LocatedError("input has no accepting set", file_a);
      PolicySpec spec = policy_from_json(read_json_file(policy_file), u.support());
      if (buchi) {
        auto b = buchi_acceptance_probability(u, spec, common.budget());
        json j = {{"probability", prob_string(b.probability)},
                  {"almost_sure", b.almost_sure},
                  {"positive", b.positive},
                  {"chain_states", b.chain_states},
                  {"bottom_components", b.bottom_components},
                  {"accepting_components", b.accepting_components}};
        if (theta) j["in_language"] = b.probability > *theta;
        print(out, j);
        return !theta || b.probability > *theta ? exit_ok : exit_negative;
      }
      auto w = parse_word(word, u.activities);
      double p = word_acceptance_probability(u, spec, w);
      json j = {{"probability", prob_string(p)}};
      if (theta) {
        bool in_l = in_threshold_language(u, spec, w, *theta);
        j["theta"] = *theta;
        j["in_language"] = in_l;
        print(out, j);
        return in_l ? exit_ok : exit_negative;
      }
      print(out, j);
      return exit_ok;
    };
  });

  std::string reduce_to;
  auto* reduce = app.add_subcommand("reduce", "Reduce to a decision process");
  reduce->add_option("model", file_a)->required();
  reduce->add_option("--to", reduce_to)->required()->check(CLI::IsMember({"dtmdp", "cma", "ctmdp"}));
  reduce->callback([&] {
    action = [&] {
      Input in = load(file_a);
      if (reduce_to == "dtmdp")
        print(out, to_json(load_dtmdp(in, common.budget())));
      else if (reduce_to == "cma")
        print(out, to_json(load_cma(in, common.budget())));
      else
        print(out, to_json(load_ctmdp(in, common.budget())));
      return exit_ok;
    };
  });

  std::string objective = "discounted", method, time_model;
  SolveConfig cfg;
  std::optional<double> horizon;
  double mc_eps = 0.05, mc_delta = 0.05;
  std::uint64_t seed = 1;
  std::optional<double> reward_bound;
  auto* solve = app.add_subcommand("solve", "Optimize or evaluate a reward or reachability objective");
  solve->add_option("model", file_a)->required();
  solve->add_option("--objective", objective)->check(CLI::IsMember({"discounted", "total", "timebounded"}));
  solve->add_option("--method", method, "vi, pi, smdp or mc")->check(CLI::IsMember({"vi", "pi", "smdp", "mc"}));
  solve->add_option("--time", time_model, "discrete or continuous; inferred from the input by default")
      ->check(CLI::IsMember({"discrete", "continuous"}));
  solve->add_option("--rewards", rewards_file);
  solve->add_option("--policy", policy_file, "Policy for timebounded and mc");
  solve->add_option("--gamma", cfg.gamma);
  solve->add_option("--beta", cfg.beta);
  solve->add_option("--epsilon", cfg.epsilon);
  solve->add_option("--max-iterations", cfg.max_iterations);
  solve->add_option("--uniformization", cfg.uniformization);
  solve->add_option("--delta", cfg.delta, "SMDP time step");
  solve->add_option("--horizon", horizon, "T for timebounded and mc");
  solve->add_option("--mc-epsilon", mc_eps);
  solve->add_option("--mc-delta", mc_delta);
  solve->add_option("--seed", seed);
  solve->add_option("--reward-bound", reward_bound);
  solve->callback([&] {
    action = [&] {
      Input in = load(file_a);
      const bool continuous = time_model.empty() ? continuous_input(in) : time_model == "continuous";
      json rep = {{"objective", objective}};
      if (objective == "timebounded") {
        if (!horizon) throw LocatedError("timebounded needs --horizon", "--horizon");
        Ctmdp m = load_ctmdp(in, common.budget());
        std::vector<bool> goal(m.num_states(), false);
        bool any = false;
        if (in.model) {
          Cma w = load_cma(in, common.budget());
          if (w.base.accepting)
            for (StateId q : *w.base.accepting) goal[q] = any = true;
        } else if (in.doc.contains("accepting")) {
          for (const auto& name : in.doc["accepting"]) {
            auto it = std::find(m.states.begin(), m.states.end(), name.get<std::string>());
            if (it != m.states.end()) goal[it - m.states.begin()] = any = true;
          }
        }
        if (!any) throw LocatedError("timebounded needs a nonempty accepting set as goal", file_a);
        MemorylessPolicy pol = lowest_available(m);
        if (!policy_file.empty()) {
          PolicySpec spec = policy_from_json(read_json_file(policy_file), names_only(m.states, m.activities, m.controls));
          if (!std::holds_alternative<MemorylessPolicy>(spec))
            throw LocatedError("timebounded needs a memoryless policy", policy_file);
          pol = std::get<MemorylessPolicy>(spec);
        }
        auto r = time_bounded_reachability(m, goal, pol, *horizon, cfg);
        json probs = json::object();
        for (StateId q = 0; q < m.num_states(); ++q) probs[m.states[q]] = prob_string(r.probability[q]);
        double init = 0;
        for (StateId q = 0; q < m.num_states(); ++q) init += m.initial[q] * r.probability[q];
        rep.update({{"method", "uniformization"},
                    {"horizon", *horizon},
                    {"lambda", prob_string(r.lambda)},
                    {"truncation", r.truncation},
                    {"probability", probs},
                    {"value_at_initial", prob_string(init)}});
        print(out, rep);
        return exit_ok;
      }
      if (!continuous) {
        Dtmdp d = load_dtmdp(in, common.budget());
        RewardStructure r = load_rewards(in, rewards_file, d.states, d.activities, d.controls);
        std::string m = method.empty() ? "vi" : method;
        ValueFunction v;
        if (objective == "total") {
          if (m != "vi") throw LocatedError("total reward supports --method vi only", "--method");
          v = total_reward_dtmdp(d, r, cfg);
        } else if (m == "vi") {
          v = value_iteration_dtmdp(d, r, cfg);
        } else if (m == "pi") {
          v = policy_iteration_dtmdp(d, r, cfg);
        } else {
          throw LocatedError("discrete models support --method vi or pi", "--method");
        }
        double init = 0;
        for (StateId q = 0; q < d.num_states(); ++q) init += d.initial[q] * v.values[q];
        rep.update({{"method", m}, {"time", "discrete"}, {"gamma", cfg.gamma}});
        rep.update(to_json(v, d.states, d.controls));
        rep["value_at_initial"] = prob_string(init);
        print(out, rep);
        return v.converged ? exit_ok : exit_budget;
      }
      if (objective == "total") throw LocatedError("total reward is defined for discrete-time models", "--objective");
      std::string m = method.empty() ? "vi" : method;
      rep.update({{"time", "continuous"}, {"method", m}, {"beta", cfg.beta}});
      if (m == "vi" || m == "pi") {
        Ctmdp c = load_ctmdp(in, common.budget());
        RewardStructure r = load_rewards(in, rewards_file, c.states, c.activities, c.controls);
        auto sol = solve_ctmdp_discounted(c, r, cfg);
        rep.update(to_json(sol.value, c.states, c.controls));
        rep.update({{"lambda", prob_string(sol.lambda)},
                    {"discount", prob_string(sol.discount)},
                    {"value_at_initial", prob_string(sol.value_at_initial)}});
        print(out, rep);
        return sol.value.converged ? exit_ok : exit_budget;
      }
      Csa v = load_csa(in, common.budget());
      RewardStructure r = load_rewards(in, rewards_file, v.base.states, v.base.activities, v.base.controls);
      if (m == "smdp") {
        auto res = smdp_discretized_vi(v, r, cfg);
        rep.update({{"delta", cfg.delta},
                    {"augmented_states", res.states.size()},
                    {"modulus", prob_string(res.modulus)},
                    {"iterations", res.value.iterations},
                    {"contraction", prob_string(res.value.contraction)},
                    {"residual", prob_string(res.value.residual)},
                    {"converged", res.value.converged},
                    {"value_at_initial", prob_string(res.value_at_initial)}});
        print(out, rep);
        return res.value.converged ? exit_ok : exit_budget;
      }
      if (!horizon) throw LocatedError("mc needs --horizon", "--horizon");
      PolicySpec spec = first_admissible_policy(v.base);
      if (!policy_file.empty()) spec = policy_from_json(read_json_file(policy_file), v.base.support());
      MonteCarloOptions mo;
      mo.seed = seed;
      mo.beta = cfg.beta;
      mo.reward_bound = reward_bound;
      mo.threads = 1;
      auto res = monte_carlo_eval(v, spec, r, *horizon, mc_eps, mc_delta, mo);
      rep.update({{"horizon", *horizon},
                  {"seed", seed},
                  {"samples", res.samples},
                  {"reward_bound", prob_string(res.reward_bound)},
                  {"mean", prob_string(res.mean)},
                  {"lower", prob_string(res.lower)},
                  {"upper", prob_string(res.upper)},
                  {"half_width", prob_string(res.half_width)},
                  {"confidence", 1.0 - mc_delta}});
      print(out, rep);
      return exit_ok;
    };
  });

  double sim_horizon = 0;
  std::size_t reps = 1;
  auto* simulate = app.add_subcommand("simulate", "Sample trajectories as CSV");
  simulate->add_option("model", file_a)->required();
  simulate->add_option("--horizon", sim_horizon)->required()->check(CLI::PositiveNumber);
  simulate->add_option("--seed", seed)->required();
  simulate->add_option("--reps", reps)->check(CLI::PositiveNumber);
  simulate->add_option("--policy", policy_file);
  simulate->add_option("--rewards", rewards_file);
  simulate->callback([&] {
    action = [&] {
      Input in = load(file_a);
      Csa v = load_csa(in, common.budget());
      RewardStructure r = load_rewards(in, rewards_file, v.base.states, v.base.activities, v.base.controls);
      PolicySpec spec = first_admissible_policy(v.base);
      if (!policy_file.empty()) spec = policy_from_json(read_json_file(policy_file), v.base.support());
      std::vector<Trajectory> runs;
      for (std::size_t i = 0; i < reps; ++i)
        runs.push_back(simulate_csa(v, spec, sim_horizon, reps == 1 ? seed : substream_seed(seed, 5, i, 0), &r));
      write_trajectory_csv(out, v, runs);
      return exit_ok;
    };
  });

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, err, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, err, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, err, err);
    print(out, error_json("usage", e.what()));
    return exit_usage;
  }
  if (!action) return exit_usage;

  try {
    return action();
  } catch (const LocatedError& e) {
    print(out, error_json("model", e.what(), e.location()));
    return exit_model;
  } catch (const ParseError& e) {
    print(out, error_json("model", e.what(), std::to_string(e.line()) + ":" + std::to_string(e.column())));
    return exit_model;
  } catch (const ZenoError& e) {
    print(out, error_json("zeno", e.what()));
    return exit_budget;
  } catch (const BudgetExceeded& e) {
    print(out, error_json("budget", e.what()));
    return exit_budget;
  } catch (const ModelError& e) {
    print(out, error_json("model", e.what()));
    return exit_model;
  } catch (const DomainError& e) {
    print(out, error_json("domain", e.what()));
    return exit_model;
  } catch (const json::exception& e) {
    print(out, error_json("model", e.what()));
    return exit_model;
  }
}

}  // namespace csan::cli
