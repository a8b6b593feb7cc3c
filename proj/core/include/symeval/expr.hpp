#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "symeval/errors.hpp"
#include "symeval/rational.hpp"

namespace symeval {

class Expr;
using ExprPtr = std::shared_ptr<const Expr>;

enum class BinOp { Add, Sub, Mul, Div };

char bin_op_char(BinOp op);

// Immutable arithmetic expression tree over rational literals and lowercase
// variables. The four operators plus parentheses are the whole grammar;
// unary minus is desugared to (0 - x) at parse time.
class Expr {
 public:
  struct Binary {
    BinOp op;
    ExprPtr lhs;
    ExprPtr rhs;
  };
  using Node = std::variant<Rational, std::string, Binary>;

  static ExprPtr number(Rational value);
  static ExprPtr variable(std::string name);
  static ExprPtr binary(BinOp op, ExprPtr lhs, ExprPtr rhs);

  bool is_number() const { return std::holds_alternative<Rational>(node_); }
  bool is_variable() const { return std::holds_alternative<std::string>(node_); }
  bool is_binary() const { return std::holds_alternative<Binary>(node_); }

  const Rational& number_value() const { return std::get<Rational>(node_); }
  const std::string& variable_name() const { return std::get<std::string>(node_); }
  const Binary& binary_node() const { return std::get<Binary>(node_); }

  friend bool operator==(const Expr& a, const Expr& b);

 private:
  explicit Expr(Node node) : node_(std::move(node)) {}
  Node node_;
};

bool operator==(const Expr& a, const Expr& b);
inline bool operator!=(const Expr& a, const Expr& b) { return !(a == b); }

using Bindings = std::map<std::string, Rational>;

/// Parses an expression string. Standard precedence (* / over + -), left
/// associativity, parentheses, optional unary minus. Implicit multiplication
/// is rejected; the filtering stage inserts explicit '*' beforehand.
/// Throws ParseError with the offending position.
ExprPtr parse_expr(std::string_view text);

/// parse_expr that reports failure through the return value instead of
/// throwing. On failure returns nullptr and, when err is non-null, stores the
/// message.
ExprPtr try_parse_expr(std::string_view text, std::string* err = nullptr);

/// Exact evaluation. Throws UnboundVariableError or DivisionByZeroError.
Rational evaluate(const Expr& e, const Bindings& b);

std::set<std::string> variables_of(const Expr& e);

/// Minimal-parenthesis rendering; parse_expr(to_string(e)) == e for every
/// tree whose literals have finite decimal expansions.
std::string to_string(const Expr& e);

struct EquivalenceOptions {
  int trials = 20;
  std::uint64_t seed = 0;
  // Assignments hitting a division by zero are redrawn up to this many times
  // per trial before giving up.
  int max_resamples_per_trial = 100;
};

// One sampled assignment together with both evaluations, for audit and
// determinism tests.
struct EquivalenceTrial {
  Bindings assignment;
  Rational lhs_value;
  Rational rhs_value;
  bool matched = false;
};

struct EquivalenceTrace {
  std::vector<EquivalenceTrial> trials;
};

/// Randomized equivalence check: draws `trials` assignments with each
/// variable an independent uniform integer in [2, 101] and accepts iff the
/// two evaluations agree within 1e-6 relative on every draw. Deterministic
/// given the seed. Throws IndeterminateEquivalenceError when the resampling
/// budget runs out.
bool equivalent(const Expr& a, const Expr& b, const EquivalenceOptions& opts,
                EquivalenceTrace* trace = nullptr);

inline bool equivalent(const Expr& a, const Expr& b, int trials = 20,
                       std::uint64_t seed = 0) {
  return equivalent(a, b, EquivalenceOptions{trials, seed});
}

}  // namespace symeval
