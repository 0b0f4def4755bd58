#include <doctest.h>

#include <optional>

#include "csan/error.hpp"
#include "csan/gate_lang.hpp"
#include "generators.hpp"

using namespace csan;
using csan::testing::Rng;

namespace {

// Reference tree walk: nullopt means the expression underflows. And, or and
// if-then-else evaluate lazily, like the gate language.
std::optional<Nat> ref_nat(const Expr& e, const std::vector<Nat>& x);

std::optional<bool> ref_bool(const Expr& e, const std::vector<Nat>& x) {
  auto cmp = [&](auto f) -> std::optional<bool> {
    auto a = ref_nat(*e.args[0], x);
    auto b = ref_nat(*e.args[1], x);
    if (!a || !b) return std::nullopt;
    return f(*a, *b);
  };
  switch (e.op) {
    case ExprOp::boolean: return e.value != 0;
    case ExprOp::lt: return cmp([](Nat a, Nat b) { return a < b; });
    case ExprOp::le: return cmp([](Nat a, Nat b) { return a <= b; });
    case ExprOp::gt: return cmp([](Nat a, Nat b) { return a > b; });
    case ExprOp::ge: return cmp([](Nat a, Nat b) { return a >= b; });
    case ExprOp::eq: return cmp([](Nat a, Nat b) { return a == b; });
    case ExprOp::ne: return cmp([](Nat a, Nat b) { return a != b; });
    case ExprOp::logical_not: {
      auto a = ref_bool(*e.args[0], x);
      if (!a) return std::nullopt;
      return !*a;
    }
    case ExprOp::logical_and: {
      auto a = ref_bool(*e.args[0], x);
      if (!a || !*a) return a;
      return ref_bool(*e.args[1], x);
    }
    case ExprOp::logical_or: {
      auto a = ref_bool(*e.args[0], x);
      if (!a || *a) return a;
      return ref_bool(*e.args[1], x);
    }
    case ExprOp::conditional: {
      auto c = ref_bool(*e.args[0], x);
      if (!c) return std::nullopt;
      return ref_bool(*e.args[*c ? 1 : 2], x);
    }
    default: FAIL("not boolean"); return std::nullopt;
  }
}

std::optional<Nat> ref_nat(const Expr& e, const std::vector<Nat>& x) {
  auto bin = [&](auto f) -> std::optional<Nat> {
    auto a = ref_nat(*e.args[0], x);
    auto b = ref_nat(*e.args[1], x);
    if (!a || !b) return std::nullopt;
    return f(*a, *b);
  };
  switch (e.op) {
    case ExprOp::literal: return e.value;
    case ExprOp::variable: return x.at(e.value - 1);
    case ExprOp::add: return bin([](Nat a, Nat b) { return a + b; });
    case ExprOp::mul: return bin([](Nat a, Nat b) { return a * b; });
    case ExprOp::min: return bin([](Nat a, Nat b) { return a < b ? a : b; });
    case ExprOp::max: return bin([](Nat a, Nat b) { return a < b ? b : a; });
    case ExprOp::sub: {
      auto a = ref_nat(*e.args[0], x);
      auto b = ref_nat(*e.args[1], x);
      if (!a || !b || *b > *a) return std::nullopt;
      return *a - *b;
    }
    case ExprOp::conditional: {
      auto c = ref_bool(*e.args[0], x);
      if (!c) return std::nullopt;
      return ref_nat(*e.args[*c ? 1 : 2], x);
    }
    default: FAIL("not numeric"); return std::nullopt;
  }
}

}  // namespace

TEST_CASE("standard input gate parses and fires") {
  GateSpec g = parse_gate_spec("pred: x1 >= 1; fn: x1 - 1", 1);
  CHECK(structurally_equal(g, gates::standard_input()));
  auto on = eval_gate(g, std::vector<Nat>{1});
  REQUIRE(on.enabled.has_value());
  CHECK(*on.enabled);
  CHECK(on.image == std::vector<Nat>{0});
  auto off = eval_gate(g, std::vector<Nat>{0});
  CHECK_FALSE(*off.enabled);
  CHECK(off.image == std::vector<Nat>{0});
}

TEST_CASE("inhibitor and identity gates") {
  CHECK(structurally_equal(parse_gate_spec("pred: x1 == 0; fn: x1", 1), gates::inhibitor()));
  GateSpec id = parse_gate_spec("pred: true; fn: x1", 1);
  CHECK(structurally_equal(id, gates::identity(1)));
  for (Nat k : {0u, 1u, 7u}) {
    auto r = eval_gate(id, std::vector<Nat>{k});
    CHECK(*r.enabled);
    CHECK(r.image == std::vector<Nat>{k});
  }
}

TEST_CASE("output gates have no predicate") {
  GateSpec g = parse_gate_spec("fn: x1 + 1", 1, GateKind::output);
  CHECK(g.predicate == nullptr);
  auto r = eval_gate(g, std::vector<Nat>{2});
  CHECK_FALSE(r.enabled.has_value());
  CHECK(r.image == std::vector<Nat>{3});
  CHECK_THROWS_AS(parse_gate_spec("pred: true; fn: x1", 1, GateKind::output), ParseError);
}

TEST_CASE("parse errors carry positions") {
  try {
    parse_gate_spec("pred: x1 >= 1;\nfn: x3", 2);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(e.column() == 5);
  }
  CHECK_THROWS_AS(parse_gate_spec("fn: x1, x1", 1), ParseError);       // arity mismatch
  CHECK_THROWS_AS(parse_gate_spec("pred: x1; fn: x1", 1), ParseError);  // numeric predicate
  CHECK_THROWS_AS(parse_gate_spec("pred: x1 >= 1 fn: x1", 1), ParseError);
  CHECK_THROWS_AS(parse_gate_spec("fn: y1", 1), ParseError);
  CHECK_THROWS_AS(parse_gate_spec("fn: x0", 1), ParseError);
}

TEST_CASE("checked subtraction reports a domain error") {
  GateSpec g = parse_gate_spec("fn: x1 - 2", 1, GateKind::output);
  CHECK_THROWS_AS(eval_gate(g, std::vector<Nat>{1}), DomainError);
  CHECK(eval_gate(g, std::vector<Nat>{2}).image == std::vector<Nat>{0});
}

TEST_CASE("disabled input gate leaves tokens untouched even if its function would underflow") {
  GateSpec g = parse_gate_spec("pred: x1 >= 5; fn: x1 - 5", 1);
  CHECK(eval_gate(g, std::vector<Nat>{3}).image == std::vector<Nat>{3});
}

TEST_CASE("precedence and operators") {
  auto v = [](const char* s, std::vector<Nat> x) { return eval_nat(*parse_expr(s, x.size()), x); };
  auto b = [](const char* s, std::vector<Nat> x) { return eval_bool(*parse_expr(s, x.size()), x); };
  CHECK(v("1 + 2 * 3", {}) == 7);
  CHECK(v("(1 + 2) * 3", {}) == 9);
  CHECK(v("10 - 3 - 2", {}) == 5);
  CHECK(v("min(x1, x2) + max(x1, x2)", {4, 9}) == 13);
  CHECK(v("if x1 > 2 then x1 else 0", {3}) == 3);
  CHECK(v("if x1 > 2 then x1 else 0", {2}) == 0);
  CHECK(b("not x1 == 0 and x2 != 1 or false", {1, 0}));
  CHECK(b("x1 <= 1 && !(x2 < 1) || x1 = 7", {7, 0}));
  CHECK(b("true or x1 - 1 >= 0", {0}));  // lazy or skips the underflow
}

TEST_CASE("random expressions agree with the reference evaluator") {
  Rng rng(11);
  std::uniform_int_distribution<Nat> tok(0, 4);
  int compared = 0, underflows = 0;
  for (int i = 0; i < 2000; ++i) {
    const std::size_t arity = 1 + i % 3;
    ExprPtr e = i % 2 ? testing::random_nat_expr(rng, arity, 4) : testing::random_bool_expr(rng, arity, 4);
    for (int k = 0; k < 5; ++k) {
      std::vector<Nat> x(arity);
      for (auto& t : x) t = tok(rng);
      if (type_of(*e) == ExprType::nat) {
        auto want = ref_nat(*e, x);
        if (want) {
          CHECK(eval_nat(*e, x) == *want);
        } else {
          CHECK_THROWS_AS(eval_nat(*e, x), DomainError);
          ++underflows;
        }
      } else {
        auto want = ref_bool(*e, x);
        if (want) {
          CHECK(eval_bool(*e, x) == *want);
        } else {
          CHECK_THROWS_AS(eval_bool(*e, x), DomainError);
          ++underflows;
        }
      }
      ++compared;
    }
  }
  CHECK(compared == 10000);
  CHECK(underflows > 0);
}

TEST_CASE("pretty-printing round-trips through the parser") {
  Rng rng(5);
  for (int i = 0; i < 2000; ++i) {
    const std::size_t arity = 1 + i % 4;
    ExprPtr e = i % 2 ? testing::random_nat_expr(rng, arity, 5) : testing::random_bool_expr(rng, arity, 5);
    std::string text = to_string(*e);
    ExprPtr back = parse_expr(text, arity);
    INFO(text);
    CHECK(structurally_equal(*e, *back));
  }
  GateSpec g = parse_gate_spec("pred: x1 + x2 <= 1; fn: x1, if x2 > 0 then x2 - 1 else 0", 2);
  CHECK(structurally_equal(g, parse_gate_spec(to_string(g), 2)));
}
