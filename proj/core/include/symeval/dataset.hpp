#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "symeval/errors.hpp"
#include "symeval/expr.hpp"
#include "symeval/rational.hpp"

namespace symeval {

enum class OperationType { Addition, Subtraction, Multiplication, Division };

std::string_view operation_type_name(OperationType t);
OperationType operation_type_from_name(std::string_view name);

// One SVAMP record. body+question carry 1..4 numeric tokens and `equation`
// evaluates to `answer`.
struct NumericProblem {
  std::string id;
  std::string body;
  std::string question;
  std::string equation;
  Rational answer;
  OperationType type_tag = OperationType::Addition;

  std::string full_text() const { return body + " " + question; }
};

// Exactly four distinct single lowercase letters, e.g. "wxyz".
class VariableSet {
 public:
  static VariableSet from_string(std::string_view letters);

  const std::array<std::string, 4>& names() const { return names_; }
  const std::string& name(std::size_t i) const { return names_[i]; }
  std::string letters() const;
  bool contains_letter(char c) const;

 private:
  std::array<std::string, 4> names_;
};

struct NumberToken {
  std::size_t offset = 0;  // byte offset into the text
  std::size_t length = 0;
  Rational value;
  std::string literal;
};

/// Left-to-right maximal numeric tokens: digit runs with an optional ".digits"
/// tail, skipped when attached to a letter on either side. Words ("two") and
/// comma-grouped digits are not joined.
std::vector<NumberToken> detect_numbers(std::string_view text);

struct TemplatizedProblem {
  std::string body_template;      // numeric tokens replaced by <1>..<4>
  std::string question_template;  // continues the body numbering
  std::vector<NumberToken> values;
};

/// Replaces the i-th numeric token (body first, then question) with the key
/// <i>. Throws DatasetError unless the problem has 1..4 numeric tokens.
TemplatizedProblem templatize(const NumericProblem& p);

struct Binding {
  std::string variable;
  Rational value;
  std::string literal;  // the original numeric token text
};

struct SymbolicProblem {
  std::string source_id;
  std::string body_template;
  std::string question_template;
  VariableSet varset;
  std::vector<Binding> bindings;  // in order of appearance
  std::string symbolic_equation;
  // Set when some equation literal matched more than one unconsumed text
  // occurrence, i.e. the variable choice was arbitrary.
  bool ambiguity_flag = false;

  std::string symbolic_body() const;
  std::string symbolic_question() const;
  Bindings binding_map() const;
};

/// Rewrites each numeric literal of `equation` to the variable of the
/// earliest not-yet-consumed occurrence with an equal value. Returns the
/// rewritten expression string and whether any match step was ambiguous.
/// Throws DatasetError when a literal has no matching occurrence.
std::pair<std::string, bool> symbolize_equation(std::string_view equation,
                                                const std::vector<NumberToken>& values,
                                                const VariableSet& varset);

/// Full symbolization: templatize, substitute variables and rewrite the
/// ground-truth equation.
SymbolicProblem symbolize(const NumericProblem& p, const VariableSet& varset);

/// Round-trip: re-renders the original body/question from the templates and
/// the bindings' literal texts.
std::pair<std::string, std::string> substitute(const SymbolicProblem& sp);

struct RecordError {
  std::string id;
  std::string message;
};

struct LoadedDataset {
  std::vector<NumericProblem> problems;
  std::vector<RecordError> errors;
};

/// Loads an SVAMP JSON array (ID/Body/Question/Equation/Answer/Type).
/// Malformed or inconsistent records land in `errors` with their id; file
/// level failures throw DatasetError.
LoadedDataset load_dataset(const std::filesystem::path& path);

/// Same validation on an already-parsed JSON text.
LoadedDataset load_dataset_text(std::string_view json_text);

}  // namespace symeval
