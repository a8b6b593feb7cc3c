#include "symeval/filtering.hpp"

#include <algorithm>
#include <cctype>

#include "symeval/expr.hpp"

namespace symeval {

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_op(char c) { return c == '+' || c == '-' || c == '*' || c == '/'; }

void note_step(FilterOutcome& out, const std::string& before,
               const std::string& after, const char* name) {
  if (before != after) out.applied_steps.push_back(name);
}

std::string lowercased(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string strip_newlines(std::string_view s) {
  std::size_t begin = 0, end = s.size();
  while (begin < end && s[begin] == '\n') ++begin;
  while (end > begin && s[end - 1] == '\n') --end;
  return std::string(s.substr(begin, end - begin));
}

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
  return s;
}

std::string remove_char(std::string_view s, char c) {
  std::string out;
  out.reserve(s.size());
  for (char x : s)
    if (x != c) out += x;
  return out;
}

// ---------------------------------------------------------------------------
// delatexify
// ---------------------------------------------------------------------------

std::string read_brace_group(std::string_view s, std::size_t& i) {
  // i points at '{'; returns the content and advances past the closing '}'.
  std::size_t depth = 0;
  std::size_t start = i + 1;
  for (std::size_t j = i; j < s.size(); ++j) {
    if (s[j] == '{') ++depth;
    if (s[j] == '}') {
      if (--depth == 0) {
        std::string content(s.substr(start, j - start));
        i = j + 1;
        return content;
      }
    }
  }
  // Unterminated group: consume the rest.
  std::string content(s.substr(start));
  i = s.size();
  return content;
}

}  // namespace

std::string delatexify(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  std::size_t i = 0;
  while (i < raw.size()) {
    char c = raw[i];
    if (c == '$') {  // math-mode delimiter
      ++i;
      continue;
    }
    if (c == '{' || c == '}') {
      ++i;
      continue;
    }
    if (c != '\\') {
      out += c;
      ++i;
      continue;
    }
    // A command: backslash followed by letters, or a single symbol.
    std::size_t j = i + 1;
    while (j < raw.size() && std::isalpha(static_cast<unsigned char>(raw[j]))) ++j;
    if (j == i + 1) {
      // \( \) \[ \] delimiters and escaped symbols vanish with the backslash.
      if (j < raw.size()) ++j;
      i = j;
      continue;
    }
    std::string_view name = raw.substr(i + 1, j - i - 1);
    i = j;
    if (name == "frac") {
      while (i < raw.size() && raw[i] == ' ') ++i;
      if (i < raw.size() && raw[i] == '{') {
        std::string numer = read_brace_group(raw, i);
        std::string denom;
        while (i < raw.size() && raw[i] == ' ') ++i;
        if (i < raw.size() && raw[i] == '{') denom = read_brace_group(raw, i);
        out += "(" + delatexify(numer) + ")/(" + delatexify(denom) + ")";
      }
      continue;
    }
    if (name == "cdot" || name == "times") {
      out += '*';
      continue;
    }
    if (name == "div") {
      out += '/';
      continue;
    }
    // Unknown command: drop the backslash-name, keep whatever follows.
  }
  return out;
}

// ---------------------------------------------------------------------------
// filter_numeric
// ---------------------------------------------------------------------------

FilterOutcome filter_numeric(std::string_view raw, FilterMode mode) {
  FilterOutcome out;
  std::string s(raw);
  std::string prev = s;

  s = remove_char(s, ',');
  note_step(out, prev, s, "strip_commas");
  prev = s;
  s = remove_char(s, '$');
  note_step(out, prev, s, "strip_currency");
  prev = s;
  s = strip_newlines(s);
  note_step(out, prev, s, "strip_newlines");

  // First numeric token; Baseline stops at the integer part.
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!is_digit(s[i])) continue;
    std::size_t start = i;
    while (i < s.size() && is_digit(s[i])) ++i;
    if (mode == FilterMode::Extended && i + 1 < s.size() && s[i] == '.' &&
        is_digit(s[i + 1])) {
      ++i;
      while (i < s.size() && is_digit(s[i])) ++i;
    }
    std::string token = s.substr(start, i - start);
    // Canonical integer part, as int() would produce.
    std::size_t nz = 0;
    std::size_t int_end = token.find('.');
    if (int_end == std::string::npos) int_end = token.size();
    while (nz + 1 < int_end && token[nz] == '0') ++nz;
    out.cleaned = token.substr(nz);
    out.applied_steps.push_back("extract_first_number");
    out.parse_ok = true;
    return out;
  }
  out.cleaned = s;
  out.parse_ok = false;
  return out;
}

// ---------------------------------------------------------------------------
// filter_symbolic
// ---------------------------------------------------------------------------

namespace {

bool in_math_set(char c, const VariableSet& varset, bool allow_dot) {
  if (is_digit(c) || is_op(c) || c == '(' || c == ')') return true;
  if (allow_dot && c == '.') return true;
  return varset.contains_letter(c);
}

std::pair<std::size_t, std::size_t> best_math_run(
    const std::vector<std::string>& words, const VariableSet& varset,
    bool allow_dot) {
  std::vector<std::size_t> scores(words.size(), 0);
  for (std::size_t i = 0; i < words.size(); ++i) {
    bool all = !words[i].empty();
    for (char c : words[i])
      if (!in_math_set(c, varset, allow_dot)) {
        all = false;
        break;
      }
    if (all) scores[i] = words[i].size();
  }
  std::size_t best_start = 0, best_len = 0, best_sum = 0;
  std::size_t i = 0;
  while (i < words.size()) {
    if (scores[i] == 0) {
      ++i;
      continue;
    }
    std::size_t j = i, sum = 0;
    while (j < words.size() && scores[j] != 0) sum += scores[j++];
    if (sum > best_sum) {
      best_sum = sum;
      best_start = i;
      best_len = j - i;
    }
    i = j;
  }
  return {best_start, best_len};
}

// Decimal-preserving '.' normalization: digit.digit stays, operand-adjacent
// dots mean multiplication, everything else is sentence punctuation.
std::string contextual_dots(std::string_view s, const VariableSet& varset) {
  auto left_operand = [&](std::size_t i) {
    if (i == 0) return false;
    char c = s[i - 1];
    return is_digit(c) || c == ')' || varset.contains_letter(c);
  };
  auto right_operand = [&](std::size_t i) {
    if (i + 1 >= s.size()) return false;
    char c = s[i + 1];
    return is_digit(c) || c == '(' || varset.contains_letter(c);
  };
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '.') {
      out += s[i];
      continue;
    }
    if (i > 0 && i + 1 < s.size() && is_digit(s[i - 1]) && is_digit(s[i + 1])) {
      out += '.';
    } else if (left_operand(i) && right_operand(i)) {
      out += '*';
    }
    // otherwise drop the dot
  }
  return out;
}

std::string insert_implicit_mul(std::string_view s, bool dot_is_operand) {
  auto digit_like = [&](char c) {
    return is_digit(c) || (dot_is_operand && c == '.');
  };
  std::string out;
  out.reserve(s.size() * 2);
  for (std::size_t i = 0; i < s.size(); ++i) {
    out += s[i];
    if (i + 1 >= s.size()) continue;
    char a = s[i], b = s[i + 1];
    if (is_op(a) || is_op(b)) continue;
    if (a == '(' || b == ')') continue;
    if (digit_like(a) && digit_like(b)) continue;
    out += '*';
  }
  return out;
}

std::string trim_dangling_ops(std::string s) {
  // Leading '-' is a unary minus and stays.
  for (;;) {
    std::size_t before = s.size();
    while (!s.empty() && (s.front() == '+' || s.front() == '*' || s.front() == '/'))
      s.erase(s.begin());
    while (!s.empty() && is_op(s.back())) s.pop_back();
    if (s.size() == before) return s;
  }
}

std::string balance_parens(std::string_view s) {
  std::string pass1;
  int depth = 0;
  for (char c : s) {
    if (c == '(') ++depth;
    if (c == ')') {
      if (depth == 0) continue;  // unmatched close
      --depth;
    }
    pass1 += c;
  }
  if (depth == 0) return pass1;
  std::string out;
  int excess = depth;  // unmatched opens, removed right-to-left
  for (auto it = pass1.rbegin(); it != pass1.rend(); ++it) {
    if (*it == '(' && excess > 0) {
      --excess;
      continue;
    }
    out += *it;
  }
  std::reverse(out.begin(), out.end());
  return out;
}

}  // namespace

std::pair<std::size_t, std::size_t> longest_math_run(
    const std::vector<std::string>& words, const VariableSet& varset) {
  return best_math_run(words, varset, /*allow_dot=*/false);
}

FilterOutcome filter_symbolic(std::string_view raw, const VariableSet& varset,
                              FilterMode mode) {
  const bool extended = mode == FilterMode::Extended;
  FilterOutcome out;
  std::string s(raw);
  std::string prev = s;

  s = lowercased(s);
  note_step(out, prev, s, "lowercase");
  prev = s;
  s = strip_newlines(s);
  note_step(out, prev, s, "strip_newlines");
  prev = s;
  s = delatexify(s);
  note_step(out, prev, s, "delatexify");
  prev = s;
  s = remove_char(s, '$');
  note_step(out, prev, s, "strip_currency");
  prev = s;
  if (extended) {
    s = contextual_dots(s, varset);
    note_step(out, prev, s, "dot_contextual");
  } else {
    std::replace(s.begin(), s.end(), '.', '*');
    note_step(out, prev, s, "dot_to_mul");
  }
  prev = s;
  s = remove_char(s, '%');
  note_step(out, prev, s, "strip_percent");
  prev = s;
  s = replace_all(std::move(s), "÷", "/");
  note_step(out, prev, s, "normalize_division");
  if (extended) {
    prev = s;
    s = replace_all(std::move(s), "×", "*");
    s = replace_all(std::move(s), "·", "*");
    note_step(out, prev, s, "normalize_unicode_ops");
  }
  prev = s;
  s = replace_all(std::move(s), "=", " = ");
  note_step(out, prev, s, "pad_equals");

  std::vector<std::string> words;
  {
    std::size_t i = 0;
    while (i < s.size()) {
      while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
      std::size_t start = i;
      while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
      if (i > start) words.push_back(s.substr(start, i - start));
    }
  }

  auto [run_start, run_len] = best_math_run(words, varset, extended);
  std::string joined;
  for (std::size_t i = run_start; i < run_start + run_len; ++i) joined += words[i];
  if (run_len < words.size()) out.applied_steps.push_back("select_math_run");

  prev = joined;
  joined = insert_implicit_mul(joined, extended);
  note_step(out, prev, joined, "insert_implicit_mul");

  if (extended) {
    for (;;) {
      std::string before = joined;
      joined = trim_dangling_ops(std::move(joined));
      note_step(out, before, joined, "trim_dangling_ops");
      std::string before2 = joined;
      joined = balance_parens(joined);
      note_step(out, before2, joined, "balance_parens");
      if (joined == before) break;
    }
  }

  out.cleaned = joined;
  if (ExprPtr e = try_parse_expr(out.cleaned)) {
    const auto vars = variables_of(*e);
    out.parse_ok = std::all_of(vars.begin(), vars.end(), [&](const std::string& v) {
      return v.size() == 1 && varset.contains_letter(v[0]);
    });
  }
  return out;
}

}  // namespace symeval
