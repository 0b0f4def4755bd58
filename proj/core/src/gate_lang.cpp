#include "csan/gate_lang.hpp"

#include <cctype>
#include <limits>

#include "csan/error.hpp"

namespace csan {

ExprPtr Expr::lit(Nat v) {
  auto e = std::make_shared<Expr>();
  e->op = ExprOp::literal;
  e->value = v;
  return e;
}

ExprPtr Expr::truth(bool b) {
  auto e = std::make_shared<Expr>();
  e->op = ExprOp::boolean;
  e->value = b ? 1 : 0;
  return e;
}

ExprPtr Expr::var(Nat index) {
  auto e = std::make_shared<Expr>();
  e->op = ExprOp::variable;
  e->value = index;
  return e;
}

ExprPtr Expr::make(ExprOp op, std::vector<ExprPtr> args) {
  auto e = std::make_shared<Expr>();
  e->op = op;
  e->args = std::move(args);
  return e;
}

bool structurally_equal(const Expr& a, const Expr& b) {
  if (a.op != b.op || a.value != b.value || a.args.size() != b.args.size()) return false;
  for (std::size_t i = 0; i < a.args.size(); ++i)
    if (!structurally_equal(*a.args[i], *b.args[i])) return false;
  return true;
}

bool structurally_equal(const GateSpec& a, const GateSpec& b) {
  if (a.kind != b.kind || a.arity != b.arity || a.function.size() != b.function.size()) return false;
  if ((a.predicate == nullptr) != (b.predicate == nullptr)) return false;
  if (a.predicate && !structurally_equal(*a.predicate, *b.predicate)) return false;
  for (std::size_t i = 0; i < a.function.size(); ++i)
    if (!structurally_equal(*a.function[i], *b.function[i])) return false;
  return true;
}

ExprType type_of(const Expr& e) {
  switch (e.op) {
    case ExprOp::literal:
    case ExprOp::variable:
    case ExprOp::add:
    case ExprOp::sub:
    case ExprOp::mul:
    case ExprOp::min:
    case ExprOp::max:
      return ExprType::nat;
    case ExprOp::conditional:
      return type_of(*e.args[1]);
    default:
      return ExprType::boolean;
  }
}

namespace {

enum class Tok { nat, ident, sym, end };

struct Token {
  Tok kind = Tok::end;
  std::string text;
  Nat value = 0;
  std::size_t line = 1;
  std::size_t column = 1;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_space();
      Token t;
      t.line = line_;
      t.column = col_;
      if (pos_ >= src_.size()) {
        out.push_back(t);
        return out;
      }
      char c = src_[pos_];
      if (std::isdigit(static_cast<unsigned char>(c))) {
        t.kind = Tok::nat;
        Nat v = 0;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
          Nat d = static_cast<Nat>(src_[pos_] - '0');
          if (v > (std::numeric_limits<Nat>::max() - d) / 10)
            throw ParseError("integer literal too large", t.line, t.column);
          v = v * 10 + d;
          t.text.push_back(src_[pos_]);
          advance();
        }
        t.value = v;
      } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        t.kind = Tok::ident;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
          t.text.push_back(src_[pos_]);
          advance();
        }
      } else {
        t.kind = Tok::sym;
        static const char* two[] = {"<=", ">=", "==", "!=", "&&", "||"};
        bool matched = false;
        for (const char* s : two) {
          if (src_.substr(pos_, 2) == s) {
            t.text = s;
            advance();
            advance();
            matched = true;
            break;
          }
        }
        if (!matched) {
          if (std::string_view("+-*(),;:<>=!").find(c) == std::string_view::npos)
            throw ParseError(std::string("unexpected character '") + c + "'", t.line, t.column);
          t.text = std::string(1, c);
          advance();
        }
      }
      out.push_back(t);
    }
  }

 private:
  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_space() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t col_ = 1;
};

class Parser {
 public:
  Parser(std::vector<Token> toks, std::size_t arity) : toks_(std::move(toks)), arity_(arity) {}

  GateSpec spec(GateKind kind) {
    GateSpec g;
    g.kind = kind;
    g.arity = arity_;
    if (is_ident("pred")) {
      const Token& at = peek();
      next();
      expect(":");
      if (kind == GateKind::output) throw ParseError("predicate on output gate", at.line, at.column);
      g.predicate = typed(ExprType::boolean, "predicate");
      expect(";");
    } else if (kind == GateKind::input) {
      g.predicate = Expr::truth(true);
    }
    if (!is_ident("fn")) fail("expected 'fn:'");
    next();
    expect(":");
    g.function.push_back(typed(ExprType::nat, "function component"));
    while (is_sym(",")) {
      next();
      g.function.push_back(typed(ExprType::nat, "function component"));
    }
    if (is_sym(";")) next();
    if (peek().kind != Tok::end) fail("trailing input");
    if (g.function.size() != arity_) {
      const Token& t = toks_.front();
      throw ParseError("function has " + std::to_string(g.function.size()) + " components but arity is " +
                           std::to_string(arity_),
                       t.line, t.column);
    }
    return g;
  }

  ExprPtr single() {
    ExprPtr e = expr();
    if (peek().kind != Tok::end) fail("trailing input");
    return e;
  }

 private:
  ExprPtr typed(ExprType want, const char* what) {
    const Token& at = peek();
    ExprPtr e = expr();
    if (type_of(*e) != want)
      throw ParseError(std::string(what) + " must be " + (want == ExprType::nat ? "numeric" : "boolean"), at.line,
                       at.column);
    return e;
  }

  ExprPtr expr() {
    if (is_ident("if")) {
      const Token& at = peek();
      next();
      ExprPtr c = expr();
      if (type_of(*c) != ExprType::boolean) throw ParseError("condition must be boolean", at.line, at.column);
      if (!is_ident("then")) fail("expected 'then'");
      next();
      ExprPtr t = expr();
      if (!is_ident("else")) fail("expected 'else'");
      next();
      ExprPtr e = expr();
      if (type_of(*t) != type_of(*e)) throw ParseError("branches of 'if' differ in type", at.line, at.column);
      return Expr::make(ExprOp::conditional, {c, t, e});
    }
    return disjunction();
  }

  ExprPtr disjunction() {
    ExprPtr l = conjunction();
    while (is_ident("or") || is_sym("||")) {
      const Token& at = peek();
      next();
      ExprPtr r = conjunction();
      need_bool(*l, at);
      need_bool(*r, at);
      l = Expr::make(ExprOp::logical_or, {l, r});
    }
    return l;
  }

  ExprPtr conjunction() {
    ExprPtr l = negation();
    while (is_ident("and") || is_sym("&&")) {
      const Token& at = peek();
      next();
      ExprPtr r = negation();
      need_bool(*l, at);
      need_bool(*r, at);
      l = Expr::make(ExprOp::logical_and, {l, r});
    }
    return l;
  }

  ExprPtr negation() {
    if (is_ident("not") || is_sym("!")) {
      const Token& at = peek();
      next();
      ExprPtr e = negation();
      need_bool(*e, at);
      return Expr::make(ExprOp::logical_not, {e});
    }
    return comparison();
  }

  ExprPtr comparison() {
    ExprPtr l = sum();
    static const std::pair<const char*, ExprOp> ops[] = {
        {"<=", ExprOp::le}, {">=", ExprOp::ge}, {"==", ExprOp::eq}, {"=", ExprOp::eq},
        {"!=", ExprOp::ne}, {"<", ExprOp::lt},  {">", ExprOp::gt}};
    for (const auto& [s, op] : ops) {
      if (is_sym(s)) {
        const Token& at = peek();
        next();
        ExprPtr r = sum();
        need_nat(*l, at);
        need_nat(*r, at);
        return Expr::make(op, {l, r});
      }
    }
    return l;
  }

  ExprPtr sum() {
    ExprPtr l = product();
    while (is_sym("+") || is_sym("-")) {
      const Token& at = peek();
      ExprOp op = at.text == "+" ? ExprOp::add : ExprOp::sub;
      next();
      ExprPtr r = product();
      need_nat(*l, at);
      need_nat(*r, at);
      l = Expr::make(op, {l, r});
    }
    return l;
  }

  ExprPtr product() {
    ExprPtr l = atom();
    while (is_sym("*")) {
      const Token& at = peek();
      next();
      ExprPtr r = atom();
      need_nat(*l, at);
      need_nat(*r, at);
      l = Expr::make(ExprOp::mul, {l, r});
    }
    return l;
  }

  ExprPtr atom() {
    const Token& t = peek();
    if (t.kind == Tok::nat) {
      next();
      return Expr::lit(t.value);
    }
    if (is_sym("(")) {
      next();
      ExprPtr e = expr();
      expect(")");
      return e;
    }
    if (t.kind == Tok::ident) {
      if (t.text == "true" || t.text == "false") {
        next();
        return Expr::truth(t.text == "true");
      }
      if (t.text == "min" || t.text == "max") {
        ExprOp op = t.text == "min" ? ExprOp::min : ExprOp::max;
        next();
        expect("(");
        ExprPtr a = expr();
        expect(",");
        ExprPtr b = expr();
        expect(")");
        need_nat(*a, t);
        need_nat(*b, t);
        return Expr::make(op, {a, b});
      }
      if (t.text.size() >= 2 && t.text[0] == 'x') {
        bool digits = true;
        for (std::size_t i = 1; i < t.text.size(); ++i)
          digits = digits && std::isdigit(static_cast<unsigned char>(t.text[i]));
        if (digits) {
          Nat idx = std::stoull(t.text.substr(1));
          if (idx == 0 || idx > arity_)
            throw ParseError("variable " + t.text + " out of range for arity " + std::to_string(arity_), t.line,
                             t.column);
          next();
          return Expr::var(idx);
        }
      }
      throw ParseError("unknown identifier '" + t.text + "'", t.line, t.column);
    }
    fail(t.kind == Tok::end ? "unexpected end of input" : "unexpected '" + t.text + "'");
  }

  void need_bool(const Expr& e, const Token& at) {
    if (type_of(e) != ExprType::boolean) throw ParseError("boolean operand expected", at.line, at.column);
  }
  void need_nat(const Expr& e, const Token& at) {
    if (type_of(e) != ExprType::nat) throw ParseError("numeric operand expected", at.line, at.column);
  }

  const Token& peek() const { return toks_[pos_]; }
  void next() {
    if (pos_ + 1 < toks_.size()) ++pos_;
  }
  bool is_sym(const char* s) const { return peek().kind == Tok::sym && peek().text == s; }
  bool is_ident(const char* s) const { return peek().kind == Tok::ident && peek().text == s; }
  void expect(const char* s) {
    if (!is_sym(s)) fail(std::string("expected '") + s + "'");
    next();
  }
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, peek().line, peek().column); }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::size_t arity_;
};

const char* infix(ExprOp op) {
  switch (op) {
    case ExprOp::add: return "+";
    case ExprOp::sub: return "-";
    case ExprOp::mul: return "*";
    case ExprOp::lt: return "<";
    case ExprOp::le: return "<=";
    case ExprOp::gt: return ">";
    case ExprOp::ge: return ">=";
    case ExprOp::eq: return "==";
    case ExprOp::ne: return "!=";
    case ExprOp::logical_and: return "and";
    case ExprOp::logical_or: return "or";
    default: return nullptr;
  }
}

Nat checked_add(Nat a, Nat b) {
  if (a > std::numeric_limits<Nat>::max() - b) throw DomainError("token count overflow in addition");
  return a + b;
}

Nat checked_mul(Nat a, Nat b) {
  if (a != 0 && b > std::numeric_limits<Nat>::max() / a) throw DomainError("token count overflow in product");
  return a * b;
}

}  // namespace

GateSpec parse_gate_spec(std::string_view text, std::size_t arity, GateKind kind) {
  if (arity == 0) throw ModelError("gate arity must be at least 1");
  Parser p(Lexer(text).run(), arity);
  return p.spec(kind);
}

ExprPtr parse_expr(std::string_view text, std::size_t arity) {
  Parser p(Lexer(text).run(), arity);
  return p.single();
}

std::string to_string(const Expr& e) {
  switch (e.op) {
    case ExprOp::literal: return std::to_string(e.value);
    case ExprOp::boolean: return e.value ? "true" : "false";
    case ExprOp::variable: return "x" + std::to_string(e.value);
    case ExprOp::min:
    case ExprOp::max:
      return std::string(e.op == ExprOp::min ? "min(" : "max(") + to_string(*e.args[0]) + ", " +
             to_string(*e.args[1]) + ")";
    case ExprOp::logical_not: return "(not " + to_string(*e.args[0]) + ")";
    case ExprOp::conditional:
      return "(if " + to_string(*e.args[0]) + " then " + to_string(*e.args[1]) + " else " + to_string(*e.args[2]) +
             ")";
    default:
      return "(" + to_string(*e.args[0]) + " " + infix(e.op) + " " + to_string(*e.args[1]) + ")";
  }
}

std::string to_string(const GateSpec& g) {
  std::string out;
  if (g.kind == GateKind::input && g.predicate) out += "pred: " + to_string(*g.predicate) + "; ";
  out += "fn: ";
  for (std::size_t i = 0; i < g.function.size(); ++i) {
    if (i) out += ", ";
    out += to_string(*g.function[i]);
  }
  return out;
}

Nat eval_nat(const Expr& e, std::span<const Nat> x) {
  switch (e.op) {
    case ExprOp::literal: return e.value;
    case ExprOp::variable:
      if (e.value == 0 || e.value > x.size()) throw ModelError("variable index out of range at evaluation");
      return x[e.value - 1];
    case ExprOp::add: return checked_add(eval_nat(*e.args[0], x), eval_nat(*e.args[1], x));
    case ExprOp::sub: {
      Nat a = eval_nat(*e.args[0], x);
      Nat b = eval_nat(*e.args[1], x);
      if (b > a)
        throw DomainError("negative token count: " + std::to_string(a) + " - " + std::to_string(b));
      return a - b;
    }
    case ExprOp::mul: return checked_mul(eval_nat(*e.args[0], x), eval_nat(*e.args[1], x));
    case ExprOp::min: return std::min(eval_nat(*e.args[0], x), eval_nat(*e.args[1], x));
    case ExprOp::max: return std::max(eval_nat(*e.args[0], x), eval_nat(*e.args[1], x));
    case ExprOp::conditional:
      return eval_bool(*e.args[0], x) ? eval_nat(*e.args[1], x) : eval_nat(*e.args[2], x);
    default: throw ModelError("boolean expression used where a number is required");
  }
}

bool eval_bool(const Expr& e, std::span<const Nat> x) {
  switch (e.op) {
    case ExprOp::boolean: return e.value != 0;
    case ExprOp::lt: return eval_nat(*e.args[0], x) < eval_nat(*e.args[1], x);
    case ExprOp::le: return eval_nat(*e.args[0], x) <= eval_nat(*e.args[1], x);
    case ExprOp::gt: return eval_nat(*e.args[0], x) > eval_nat(*e.args[1], x);
    case ExprOp::ge: return eval_nat(*e.args[0], x) >= eval_nat(*e.args[1], x);
    case ExprOp::eq: return eval_nat(*e.args[0], x) == eval_nat(*e.args[1], x);
    case ExprOp::ne: return eval_nat(*e.args[0], x) != eval_nat(*e.args[1], x);
    case ExprOp::logical_and: return eval_bool(*e.args[0], x) && eval_bool(*e.args[1], x);
    case ExprOp::logical_or: return eval_bool(*e.args[0], x) || eval_bool(*e.args[1], x);
    case ExprOp::logical_not: return !eval_bool(*e.args[0], x);
    case ExprOp::conditional:
      return eval_bool(*e.args[0], x) ? eval_bool(*e.args[1], x) : eval_bool(*e.args[2], x);
    default: throw ModelError("numeric expression used where a boolean is required");
  }
}

GateResult eval_gate(const GateSpec& spec, std::span<const Nat> tokens) {
  if (tokens.size() != spec.arity)
    throw ModelError("gate expects " + std::to_string(spec.arity) + " tokens, got " + std::to_string(tokens.size()));
  GateResult r;
  if (spec.kind == GateKind::input) {
    r.enabled = spec.predicate ? eval_bool(*spec.predicate, tokens) : true;
    if (!*r.enabled) {
      r.image.assign(tokens.begin(), tokens.end());
      return r;
    }
  }
  r.image.reserve(spec.arity);
  for (const auto& f : spec.function) r.image.push_back(eval_nat(*f, tokens));
  return r;
}

namespace gates {

GateSpec standard_input() { return parse_gate_spec("pred: x1 >= 1; fn: x1 - 1", 1, GateKind::input); }

GateSpec standard_output() { return parse_gate_spec("fn: x1 + 1", 1, GateKind::output); }

GateSpec inhibitor() { return parse_gate_spec("pred: x1 == 0; fn: x1", 1, GateKind::input); }

GateSpec identity(std::size_t arity) {
  GateSpec g;
  g.kind = GateKind::input;
  g.arity = arity;
  g.predicate = Expr::truth(true);
  for (std::size_t i = 1; i <= arity; ++i) g.function.push_back(Expr::var(i));
  return g;
}

}  // namespace gates

}  // namespace csan
