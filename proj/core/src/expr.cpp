#include "symeval/expr.hpp"

#include <algorithm>
#include <cctype>
#include <random>
#include <sstream>

namespace symeval {

namespace {

bool is_lower(char c) { return c >= 'a' && c <= 'z'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

}  // namespace

char bin_op_char(BinOp op) {
  switch (op) {
    case BinOp::Add: return '+';
    case BinOp::Sub: return '-';
    case BinOp::Mul: return '*';
    case BinOp::Div: return '/';
  }
  return '?';
}

ExprPtr Expr::number(Rational value) {
  return ExprPtr(new Expr(Node(std::move(value))));
}

ExprPtr Expr::variable(std::string name) {
  return ExprPtr(new Expr(Node(std::move(name))));
}

ExprPtr Expr::binary(BinOp op, ExprPtr lhs, ExprPtr rhs) {
  return ExprPtr(new Expr(Node(Binary{op, std::move(lhs), std::move(rhs)})));
}

bool operator==(const Expr& a, const Expr& b) {
  if (a.node_.index() != b.node_.index()) return false;
  if (a.is_number()) return a.number_value() == b.number_value();
  if (a.is_variable()) return a.variable_name() == b.variable_name();
  const auto& x = a.binary_node();
  const auto& y = b.binary_node();
  return x.op == y.op && *x.lhs == *y.lhs && *x.rhs == *y.rhs;
}

// ---------------------------------------------------------------------------
// Parser: recursive descent.
//
//   expr    := term (('+'|'-') term)*
//   term    := unary (('*'|'/') unary)*
//   unary   := '-' unary | primary
//   primary := number | variable | '(' expr ')'
// ---------------------------------------------------------------------------

namespace {

constexpr std::size_t kMaxNestingDepth = 256;

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  ExprPtr run() {
    skip_ws();
    if (pos_ >= text_.size()) throw ParseError("empty expression", pos_);
    ExprPtr e = parse_sum();
    skip_ws();
    if (pos_ < text_.size())
      throw ParseError(std::string("unexpected character '") + text_[pos_] + "'", pos_);
    return e;
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

  ExprPtr parse_sum() {
    ExprPtr lhs = parse_product();
    for (;;) {
      skip_ws();
      char c = peek();
      if (c != '+' && c != '-') return lhs;
      ++pos_;
      ExprPtr rhs = parse_product();
      lhs = Expr::binary(c == '+' ? BinOp::Add : BinOp::Sub, std::move(lhs), std::move(rhs));
    }
  }

  ExprPtr parse_product() {
    ExprPtr lhs = parse_unary();
    for (;;) {
      skip_ws();
      char c = peek();
      if (c != '*' && c != '/') return lhs;
      ++pos_;
      ExprPtr rhs = parse_unary();
      lhs = Expr::binary(c == '*' ? BinOp::Mul : BinOp::Div, std::move(lhs), std::move(rhs));
    }
  }

  ExprPtr parse_unary() {
    skip_ws();
    if (peek() == '-') {
      std::size_t at = pos_;
      ++pos_;
      DepthGuard guard(this, at);
      ExprPtr operand = parse_unary();
      return Expr::binary(BinOp::Sub, Expr::number(Rational(0)), std::move(operand));
    }
    return parse_primary();
  }

  ExprPtr parse_primary() {
    skip_ws();
    char c = peek();
    if (c == '(') {
      std::size_t at = pos_;
      ++pos_;
      DepthGuard guard(this, at);
      ExprPtr inner = parse_sum();
      skip_ws();
      if (peek() != ')') throw ParseError("expected ')'", pos_);
      ++pos_;
      return inner;
    }
    if (is_digit(c)) return parse_number();
    if (is_lower(c)) return parse_variable();
    if (c == '\0') throw ParseError("unexpected end of input", pos_);
    throw ParseError(std::string("unexpected character '") + c + "'", pos_);
  }

  ExprPtr parse_number() {
    std::size_t start = pos_;
    while (is_digit(peek())) ++pos_;
    if (peek() == '.') {
      if (pos_ + 1 >= text_.size() || !is_digit(text_[pos_ + 1]))
        throw ParseError("expected digits after decimal point", pos_);
      ++pos_;
      while (is_digit(peek())) ++pos_;
    }
    auto value = parse_decimal(text_.substr(start, pos_ - start));
    if (!value) throw ParseError("malformed number", start);
    return Expr::number(*value);
  }

  ExprPtr parse_variable() {
    std::size_t start = pos_;
    while (is_lower(peek())) ++pos_;
    return Expr::variable(std::string(text_.substr(start, pos_ - start)));
  }

  struct DepthGuard {
    DepthGuard(Parser* p, std::size_t at) : parser(p) {
      if (++parser->depth_ > kMaxNestingDepth)
        throw ParseError("expression nested too deeply", at);
    }
    ~DepthGuard() { --parser->depth_; }
    Parser* parser;
  };

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t depth_ = 0;
};

}  // namespace

ExprPtr parse_expr(std::string_view text) { return Parser(text).run(); }

ExprPtr try_parse_expr(std::string_view text, std::string* err) {
  try {
    return parse_expr(text);
  } catch (const ParseError& e) {
    if (err) *err = e.what();
    return nullptr;
  }
}

Rational evaluate(const Expr& e, const Bindings& b) {
  if (e.is_number()) return e.number_value();
  if (e.is_variable()) {
    auto it = b.find(e.variable_name());
    if (it == b.end()) throw UnboundVariableError(e.variable_name());
    return it->second;
  }
  const auto& bin = e.binary_node();
  Rational lhs = evaluate(*bin.lhs, b);
  Rational rhs = evaluate(*bin.rhs, b);
  switch (bin.op) {
    case BinOp::Add: return lhs + rhs;
    case BinOp::Sub: return lhs - rhs;
    case BinOp::Mul: return lhs * rhs;
    case BinOp::Div:
      if (rhs == 0) throw DivisionByZeroError();
      return lhs / rhs;
  }
  throw EvalError("unreachable operator");
}

namespace {

void collect_variables(const Expr& e, std::set<std::string>& out) {
  if (e.is_variable()) {
    out.insert(e.variable_name());
  } else if (e.is_binary()) {
    collect_variables(*e.binary_node().lhs, out);
    collect_variables(*e.binary_node().rhs, out);
  }
}

int precedence_of(BinOp op) {
  return (op == BinOp::Add || op == BinOp::Sub) ? 1 : 2;
}

void render(const Expr& e, std::string& out, int parent_prec, bool is_right) {
  if (e.is_number()) {
    out += to_decimal_string(e.number_value());
    return;
  }
  if (e.is_variable()) {
    out += e.variable_name();
    return;
  }
  const auto& bin = e.binary_node();
  int prec = precedence_of(bin.op);
  // Parens when binding looser than the parent, or equal on the right of a
  // non-commutative position (a-(b-c), a/(b*c)).
  bool parens = prec < parent_prec || (prec == parent_prec && is_right);
  if (parens) out += '(';
  render(*bin.lhs, out, prec, false);
  out += bin_op_char(bin.op);
  render(*bin.rhs, out, prec, true);
  if (parens) out += ')';
}

}  // namespace

std::set<std::string> variables_of(const Expr& e) {
  std::set<std::string> out;
  collect_variables(e, out);
  return out;
}

std::string to_string(const Expr& e) {
  std::string out;
  render(e, out, 0, false);
  return out;
}

bool equivalent(const Expr& a, const Expr& b, const EquivalenceOptions& opts,
                EquivalenceTrace* trace) {
  if (opts.trials < 1) throw Error("equivalent() requires at least one trial");

  std::set<std::string> vars = variables_of(a);
  collect_variables(b, vars);

  std::mt19937_64 rng(opts.seed);
  // Uniform integers in [2, 101]; modulo keeps the draw identical across
  // platforms, unlike std::uniform_int_distribution.
  auto draw = [&rng]() { return Rational(2 + static_cast<long>(rng() % 100)); };

  const Rational tol(1, 1000000);
  bool all_matched = true;
  for (int t = 0; t < opts.trials; ++t) {
    bool evaluated = false;
    for (int attempt = 0; attempt < opts.max_resamples_per_trial; ++attempt) {
      Bindings assignment;
      for (const auto& v : vars) assignment[v] = draw();
      try {
        Rational va = evaluate(a, assignment);
        Rational vb = evaluate(b, assignment);
        Rational bound = tol * std::max(Rational(1), rational_abs(va));
        bool matched = rational_abs(va - vb) <= bound;
        if (trace) trace->trials.push_back({std::move(assignment), va, vb, matched});
        if (!matched) all_matched = false;
        evaluated = true;
        break;
      } catch (const DivisionByZeroError&) {
        continue;  // redraw this trial's assignment
      }
    }
    if (!evaluated)
      throw IndeterminateEquivalenceError(
          "no division-free assignment found after " +
          std::to_string(opts.max_resamples_per_trial) + " attempts");
    if (!all_matched && !trace) return false;
  }
  return all_matched;
}

}  // namespace symeval
