#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace csan {

using Nat = std::uint64_t;

enum class ExprOp {
  literal,
  boolean,
  variable,
  add,
  sub,
  mul,
  min,
  max,
  lt,
  le,
  gt,
  ge,
  eq,
  ne,
  logical_and,
  logical_or,
  logical_not,
  conditional,
};

enum class ExprType { nat, boolean };

// Immutable expression tree; children are shared.
struct Expr {
  ExprOp op = ExprOp::literal;
  Nat value = 0;  // literal value, boolean value (0/1) or 1-based variable index
  std::vector<std::shared_ptr<const Expr>> args;

  static std::shared_ptr<const Expr> lit(Nat v);
  static std::shared_ptr<const Expr> truth(bool b);
  static std::shared_ptr<const Expr> var(Nat index);
  static std::shared_ptr<const Expr> make(ExprOp op, std::vector<std::shared_ptr<const Expr>> args);
};

using ExprPtr = std::shared_ptr<const Expr>;

bool structurally_equal(const Expr& a, const Expr& b);
ExprType type_of(const Expr& e);

enum class GateKind { input, output };

struct GateSpec {
  GateKind kind = GateKind::input;
  std::size_t arity = 1;
  ExprPtr predicate;  // null for output gates
  std::vector<ExprPtr> function;
};

bool structurally_equal(const GateSpec& a, const GateSpec& b);

GateSpec parse_gate_spec(std::string_view text, std::size_t arity, GateKind kind = GateKind::input);

// Parses a single expression over x1..x<arity>.
ExprPtr parse_expr(std::string_view text, std::size_t arity);

std::string to_string(const Expr& e);
std::string to_string(const GateSpec& g);

struct GateResult {
  std::optional<bool> enabled;
  std::vector<Nat> image;
};

// A disabled input gate returns its tokens unchanged; the function is only
// evaluated when the predicate holds.
GateResult eval_gate(const GateSpec& spec, std::span<const Nat> tokens);

Nat eval_nat(const Expr& e, std::span<const Nat> tokens);
bool eval_bool(const Expr& e, std::span<const Nat> tokens);

namespace gates {
GateSpec standard_input();   // x1 >= 1 / x1 - 1
GateSpec standard_output();  // x1 + 1
GateSpec inhibitor();        // x1 == 0 / x1
GateSpec identity(std::size_t arity);
}  // namespace gates

}  // namespace csan
