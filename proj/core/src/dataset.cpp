#include "symeval/dataset.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "symeval/expr.hpp"

namespace symeval {

using nlohmann::json;

std::string_view operation_type_name(OperationType t) {
  switch (t) {
    case OperationType::Addition: return "Addition";
    case OperationType::Subtraction: return "Subtraction";
    case OperationType::Multiplication: return "Multiplication";
    case OperationType::Division: return "Division";
  }
  return "Addition";
}

OperationType operation_type_from_name(std::string_view name) {
  if (name == "Addition") return OperationType::Addition;
  if (name == "Subtraction") return OperationType::Subtraction;
  if (name == "Multiplication") return OperationType::Multiplication;
  if (name == "Division") return OperationType::Division;
  // SVAMP tags multi-step problems like "Common-Division"; keep the primary
  // operation.
  if (name.find("Division") != std::string_view::npos) return OperationType::Division;
  if (name.find("Multiplication") != std::string_view::npos) return OperationType::Multiplication;
  if (name.find("Subtraction") != std::string_view::npos) return OperationType::Subtraction;
  if (name.find("Addition") != std::string_view::npos) return OperationType::Addition;
  throw DatasetError("unknown operation type '" + std::string(name) + "'");
}

VariableSet VariableSet::from_string(std::string_view letters) {
  if (letters.size() != 4)
    throw DatasetError("variable set must have exactly 4 letters, got '" +
                       std::string(letters) + "'");
  VariableSet vs;
  for (std::size_t i = 0; i < 4; ++i) {
    char c = letters[i];
    if (c < 'a' || c > 'z')
      throw DatasetError("variable set letters must be lowercase a-z");
    for (std::size_t j = 0; j < i; ++j)
      if (vs.names_[j][0] == c)
        throw DatasetError("variable set letters must be distinct");
    vs.names_[i] = std::string(1, c);
  }
  return vs;
}

std::string VariableSet::letters() const {
  std::string out;
  for (const auto& n : names_) out += n;
  return out;
}

bool VariableSet::contains_letter(char c) const {
  for (const auto& n : names_)
    if (n[0] == c) return true;
  return false;
}

namespace {

bool is_letter(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}
bool is_digit(char c) { return c >= '0' && c <= '9'; }

}  // namespace

std::vector<NumberToken> detect_numbers(std::string_view text) {
  std::vector<NumberToken> out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_digit(text[i])) {
      ++i;
      continue;
    }
    std::size_t start = i;
    while (i < text.size() && is_digit(text[i])) ++i;
    if (i + 1 < text.size() && text[i] == '.' && is_digit(text[i + 1])) {
      ++i;
      while (i < text.size() && is_digit(text[i])) ++i;
    }
    bool attached = (start > 0 && is_letter(text[start - 1])) ||
                    (i < text.size() && is_letter(text[i]));
    if (!attached) {
      NumberToken tok;
      tok.offset = start;
      tok.length = i - start;
      tok.literal = std::string(text.substr(start, tok.length));
      tok.value = *parse_decimal(tok.literal);
      out.push_back(std::move(tok));
    }
  }
  return out;
}

namespace {

std::string replace_tokens_with_keys(std::string_view text,
                                     const std::vector<NumberToken>& tokens,
                                     std::size_t first_key) {
  std::string out;
  std::size_t cursor = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto& tok = tokens[i];
    out += text.substr(cursor, tok.offset - cursor);
    out += "<" + std::to_string(first_key + i) + ">";
    cursor = tok.offset + tok.length;
  }
  out += text.substr(cursor);
  return out;
}

// Substitutes each key <i> with pieces[i-1]. Unknown keys are left alone.
std::string render_template(std::string_view tmpl,
                            const std::vector<std::string>& pieces) {
  std::string out;
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '<' && i + 2 < tmpl.size() && is_digit(tmpl[i + 1]) &&
        tmpl[i + 2] == '>') {
      std::size_t idx = static_cast<std::size_t>(tmpl[i + 1] - '0');
      if (idx >= 1 && idx <= pieces.size()) {
        out += pieces[idx - 1];
        i += 3;
        continue;
      }
    }
    out += tmpl[i++];
  }
  return out;
}

}  // namespace

TemplatizedProblem templatize(const NumericProblem& p) {
  auto body_tokens = detect_numbers(p.body);
  auto question_tokens = detect_numbers(p.question);
  std::size_t total = body_tokens.size() + question_tokens.size();
  if (total == 0)
    throw DatasetError("problem '" + p.id + "' contains no numeric tokens");
  if (total > 4)
    throw DatasetError("problem '" + p.id + "' contains " +
                       std::to_string(total) + " numeric tokens (max 4)");
  TemplatizedProblem t;
  t.body_template = replace_tokens_with_keys(p.body, body_tokens, 1);
  t.question_template =
      replace_tokens_with_keys(p.question, question_tokens, body_tokens.size() + 1);
  t.values = std::move(body_tokens);
  t.values.insert(t.values.end(), question_tokens.begin(), question_tokens.end());
  return t;
}

std::pair<std::string, bool> symbolize_equation(std::string_view equation,
                                                const std::vector<NumberToken>& values,
                                                const VariableSet& varset) {
  std::string out;
  std::vector<bool> consumed(values.size(), false);
  bool ambiguous = false;
  std::size_t i = 0;
  while (i < equation.size()) {
    if (!is_digit(equation[i])) {
      out += equation[i++];
      continue;
    }
    std::size_t start = i;
    while (i < equation.size() && is_digit(equation[i])) ++i;
    if (i + 1 < equation.size() && equation[i] == '.' && is_digit(equation[i + 1])) {
      ++i;
      while (i < equation.size() && is_digit(equation[i])) ++i;
    }
    auto literal = equation.substr(start, i - start);
    Rational value = *parse_decimal(literal);
    std::size_t match = values.size();
    std::size_t candidates = 0;
    for (std::size_t k = 0; k < values.size(); ++k) {
      if (consumed[k] || values[k].value != value) continue;
      ++candidates;
      if (match == values.size()) match = k;
    }
    if (match == values.size())
      throw DatasetError("equation literal '" + std::string(literal) +
                         "' has no unconsumed occurrence in the problem text");
    if (candidates > 1) ambiguous = true;
    consumed[match] = true;
    out += varset.name(match);
  }
  return {out, ambiguous};
}

std::string SymbolicProblem::symbolic_body() const {
  std::vector<std::string> names;
  for (const auto& b : bindings) names.push_back(b.variable);
  return render_template(body_template, names);
}

std::string SymbolicProblem::symbolic_question() const {
  std::vector<std::string> names;
  for (const auto& b : bindings) names.push_back(b.variable);
  return render_template(question_template, names);
}

Bindings SymbolicProblem::binding_map() const {
  Bindings out;
  for (const auto& b : bindings) out[b.variable] = b.value;
  return out;
}

SymbolicProblem symbolize(const NumericProblem& p, const VariableSet& varset) {
  TemplatizedProblem t = templatize(p);
  SymbolicProblem sp;
  sp.source_id = p.id;
  sp.body_template = std::move(t.body_template);
  sp.question_template = std::move(t.question_template);
  sp.varset = varset;
  for (std::size_t i = 0; i < t.values.size(); ++i)
    sp.bindings.push_back({varset.name(i), t.values[i].value, t.values[i].literal});
  auto [eq, ambiguous] = symbolize_equation(p.equation, t.values, varset);
  sp.symbolic_equation = std::move(eq);
  sp.ambiguity_flag = ambiguous;
  return sp;
}

std::pair<std::string, std::string> substitute(const SymbolicProblem& sp) {
  std::vector<std::string> literals;
  for (const auto& b : sp.bindings) literals.push_back(b.literal);
  return {render_template(sp.body_template, literals),
          render_template(sp.question_template, literals)};
}

namespace {

Rational rational_from_json_number(const json& j) {
  if (j.is_number_integer()) return Rational(j.get<long long>());
  // Round-trip through the shortest decimal form so 0.1 means 1/10, not the
  // nearest double.
  auto parsed = parse_decimal(j.dump());
  if (!parsed) throw DatasetError("unrepresentable numeric value " + j.dump());
  return *parsed;
}

NumericProblem parse_record(const json& rec) {
  for (const char* key : {"ID", "Body", "Question", "Equation", "Answer", "Type"})
    if (!rec.contains(key))
      throw DatasetError(std::string("missing field '") + key + "'");
  NumericProblem p;
  p.id = rec.at("ID").is_string() ? rec.at("ID").get<std::string>()
                                  : rec.at("ID").dump();
  p.body = rec.at("Body").get<std::string>();
  p.question = rec.at("Question").get<std::string>();
  p.equation = rec.at("Equation").get<std::string>();
  if (!rec.at("Answer").is_number())
    throw DatasetError("field 'Answer' is not a number");
  p.answer = rational_from_json_number(rec.at("Answer"));
  p.type_tag = operation_type_from_name(rec.at("Type").get<std::string>());
  return p;
}

void validate_problem(const NumericProblem& p) {
  std::size_t count =
      detect_numbers(p.body).size() + detect_numbers(p.question).size();
  if (count == 0 || count > 4)
    throw DatasetError("expected 1..4 numeric tokens, found " +
                       std::to_string(count));
  ExprPtr eq;
  try {
    eq = parse_expr(p.equation);
  } catch (const ParseError& e) {
    throw DatasetError(std::string("unparseable equation: ") + e.what());
  }
  Rational value;
  try {
    value = evaluate(*eq, {});
  } catch (const EvalError& e) {
    throw DatasetError(std::string("equation does not evaluate: ") + e.what());
  }
  if (!answers_match(value, p.answer))
    throw DatasetError("equation evaluates to " + to_decimal_string(value) +
                       " but Answer is " + to_decimal_string(p.answer));
}

}  // namespace

LoadedDataset load_dataset_text(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw DatasetError(std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_array()) throw DatasetError("dataset root must be a JSON array");
  LoadedDataset out;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    std::string id = "record #" + std::to_string(i);
    try {
      if (doc[i].contains("ID")) {
        id = doc[i].at("ID").is_string() ? doc[i].at("ID").get<std::string>()
                                         : doc[i].at("ID").dump();
      }
      NumericProblem p = parse_record(doc[i]);
      validate_problem(p);
      out.problems.push_back(std::move(p));
    } catch (const Error& e) {
      out.errors.push_back({id, e.what()});
    }
  }
  return out;
}

LoadedDataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open dataset file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return load_dataset_text(buf.str());
}

}  // namespace symeval
