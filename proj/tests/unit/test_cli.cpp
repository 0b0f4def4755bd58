#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "csan/cli/commands.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out;
  json doc() const { return json::parse(out); }
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  Run r;
  r.code = csan::cli::run_command(args, out, err);
  r.out = out.str();
  return r;
}

std::string model(const std::string& name) { return std::string(CSAN_MODELS_DIR) + "/" + name; }

fs::path scratch() {
  fs::path d = fs::temp_directory_path() / "csan_cli_test";
  fs::create_directories(d);
  return d;
}

std::string write(const std::string& name, const std::string& text) {
  fs::path p = scratch() / name;
  std::ofstream(p) << text;
  return p.string();
}

double number(const json& j) { return j.is_string() ? std::stod(j.get<std::string>()) : j.get<double>(); }

}  // namespace

TEST_CASE("validate the fig1 model") {
  auto r = run({"validate", model("fig1.json")});
  CHECK(r.code == 0);
  CHECK(r.doc()["ok"] == true);
  CHECK(r.doc()["violations"].empty());
  CHECK(run({"validate", model("anbn.json")}).code == 0);
}

TEST_CASE("accept with the mod-3 policy") {
  auto r = run({"accept", model("aloop.json"), model("mod3.json"), "aaa"});
  CHECK(r.code == 0);
  CHECK(r.doc() == json{{"accepted", true}});
  auto no = run({"accept", model("aloop.json"), model("mod3.json"), "aa"});
  CHECK(no.code == 1);
  CHECK(no.doc()["accepted"] == false);
  CHECK(run({"accept", model("aloop.json"), model("mod3.json"), ""}).code == 0);
}

TEST_CASE("a^n b^n on the command line") {
  auto s = run({"accept", model("anbn.json"), model("anbn_stack.json"), "aaabbb"});
  CHECK(s.code == 0);
  CHECK(run({"accept", model("anbn.json"), model("anbn_stack.json"), "aaabb"}).code == 1);
  auto e = run({"empty", model("anbn.json"), "--class", "stack", "--policy", model("anbn_stack.json")});
  CHECK(e.code == 0);
  CHECK(e.doc()["verdict"] == "nonempty");
  CHECK(e.doc().contains("witness"));
  CHECK(run({"empty", model("anbn.json"), "--class", "stack"}).code == 3);
}

TEST_CASE("simulation output is reproducible") {
  std::vector<std::string> args{"simulate", model("aloop.json"), "--horizon", "20", "--seed", "7"};
  auto a = run(args), b = run(args);
  CHECK(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(a.out.rfind("time,state,activity,control,reward_running\n", 0) == 0);
  args[5] = "8";
  CHECK(run(args).out != a.out);
  auto reps = run({"simulate", model("aloop.json"), "--horizon", "5", "--seed", "7", "--reps", "3"});
  CHECK(reps.out.rfind("rep,time", 0) == 0);
  CHECK(reps.out == run({"simulate", model("aloop.json"), "--horizon", "5", "--seed", "7", "--reps", "3"}).out);
}

TEST_CASE("realize then bisim against the source model") {
  for (std::string kind : {"ca", "cpa", "csa"}) {
    auto r = run({"realize", model("fig1.json"), "--kind", kind});
    REQUIRE(r.code == 0);
    CHECK(r.doc()["kind"] == kind);
    std::string path = write("fig1_" + kind + ".json", r.out);
    auto b = run({"bisim", path, model("fig1.json")});
    CHECK(b.code == 0);
    CHECK(b.doc()["equivalent"] == true);
    CHECK(run({"validate", path}).code == 0);
  }
  json anbn = json::parse(std::ifstream(model("anbn.json")));
  anbn["accepting"] = {"D"};
  auto other = run({"bisim", model("anbn.json"), write("anbn_d.json", anbn.dump())});
  CHECK(other.code == 1);
  CHECK(other.doc()["equivalent"] == false);
  CHECK(run({"bisim", model("aloop.json"), model("fig1.json"), "--kind", "ca"}).code == 3);
}

TEST_CASE("reductions and solvers") {
  auto c = run({"reduce", model("aloop.json"), "--to", "ctmdp"});
  REQUIRE(c.code == 0);
  CHECK(c.doc()["kind"] == "ctmdp");
  CHECK(run({"reduce", model("aloop.json"), "--to", "dtmdp"}).code == 0);
  CHECK(run({"reduce", model("fig1.json"), "--to", "cma"}).code == 3);

  // Reward 1 while in hit; answering on forever keeps it: 1 / beta.
  auto s = run({"solve", model("aloop.json"), "--beta", "0.25", "--epsilon", "1e-10"});
  REQUIRE(s.code == 0);
  CHECK(number(s.doc()["value_at_initial"]) == doctest::Approx(4.0).epsilon(1e-8));
  CHECK(s.doc()["policy"]["(1,0)"] == "on");

  auto d = run({"solve", model("aloop.json"), "--time", "discrete", "--gamma", "0.5", "--method", "pi"});
  REQUIRE(d.code == 0);
  CHECK(number(d.doc()["value_at_initial"]) == doctest::Approx(2.0));

  auto t = run({"solve", model("aloop.json"), "--objective", "timebounded", "--horizon", "1"});
  REQUIRE(t.code == 0);
  CHECK(number(t.doc()["value_at_initial"]) == 1.0);

  auto mc = run({"solve", model("aloop.json"), "--method", "mc", "--horizon", "10", "--mc-epsilon", "0.2"});
  REQUIRE(mc.code == 0);
  CHECK(number(mc.doc()["lower"]) <= number(mc.doc()["mean"]));
  CHECK(mc.out == run({"solve", model("aloop.json"), "--method", "mc", "--horizon", "10", "--mc-epsilon", "0.2"}).out);

  auto sm = run({"solve", model("aloop.json"), "--method", "smdp", "--beta", "0.25", "--delta", "0.05"});
  REQUIRE(sm.code == 0);
  CHECK(number(sm.doc()["value_at_initial"]) == doctest::Approx(4.0).epsilon(1e-6));

  auto w = run({"wordprob", model("aloop.json"), model("mod3.json"), "aaa", "--theta", "0.5"});
  CHECK(w.code == 0);
  CHECK(number(w.doc()["probability"]) == 1.0);
  CHECK(w.doc()["in_language"] == true);
}

TEST_CASE("exit codes and error objects") {
  auto usage = run({"frobnicate"});
  CHECK(usage.code == 2);
  CHECK(usage.doc()["error"]["code"] == "usage");
  CHECK(run({}).code == 2);
  CHECK(run({"accept", model("aloop.json")}).code == 2);
  CHECK(run({"realize", model("fig1.json"), "--kind", "bogus"}).code == 2);

  auto missing = run({"validate", (scratch() / "nope.json").string()});
  CHECK(missing.code == 3);
  CHECK(missing.doc()["error"]["code"] == "model");

  std::string bad_gate = write("bad_gate.json", R"({
  "places": ["P"],
  "activities": [{"name": "T", "kind": "timed"}],
  "controls": ["c"],
  "gates": [{"name": "G", "kind": "input", "arity": 1, "spec": "pred: x1 >= 1;\nfn:  x3"}],
  "relations": {"input": [{"place": "P", "index": 1, "gate": "G", "activity": "T"}]},
  "initial": {"P": 1}
})");
  auto e = run({"validate", bad_gate});
  CHECK(e.code == 3);
  CHECK(e.doc()["error"].contains("location"));

  std::string unknown = write("unknown.json", R"({"places": ["P"], "activities": [], "controls": [],
  "arcs": {"input": [{"place": "Q", "activity": "T"}]}, "initial": {}})");
  auto u = run({"validate", unknown});
  CHECK(u.code == 3);
  CHECK(u.doc()["error"].contains("location"));

  auto budget = run({"--max-states", "1", "realize", model("fig1.json")});
  CHECK(budget.code == 4);
  CHECK(budget.doc()["error"]["code"] == "budget");

  auto nonempty = run({"empty", model("anbn.json"), "--class", "0"});
  CHECK(nonempty.code == 0);
  auto fin = run({"empty", model("anbn.json"), "--class", "F", "--buchi"});
  CHECK(fin.code == 1);
  CHECK(fin.doc()["verdict"] == "empty");
}

TEST_CASE("commands are pure") {
  for (std::vector<std::string> args : {std::vector<std::string>{"realize", model("fig1.json"), "--kind", "cpa"},
                                        {"reduce", model("aloop.json"), "--to", "ctmdp"},
                                        {"empty", model("anbn.json"), "--class", "F"}})
    CHECK(run(args).out == run(args).out);
}
