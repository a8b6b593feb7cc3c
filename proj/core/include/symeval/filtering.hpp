#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "symeval/dataset.hpp"

namespace symeval {

// Baseline reproduces the published cleanup recipe verbatim, quirks included
// (every '.' becomes '*', numeric extraction is integer-only). Extended keeps
// decimals intact, trims dangling operators and balances parentheses, and is
// the default for scoring.
enum class FilterMode { Baseline, Extended };

struct FilterOutcome {
  std::string cleaned;
  std::vector<std::string> applied_steps;  // steps that changed the text
  bool parse_ok = false;
};

/// Reduces a verbose numeric answer to a bare number: commas/currency
/// removed, first numeric token extracted (integer-only in Baseline mode).
/// When no token is found, `cleaned` is the stripped input and parse_ok is
/// false.
FilterOutcome filter_numeric(std::string_view raw,
                             FilterMode mode = FilterMode::Extended);

/// Reduces a verbose symbolic answer to a bare expression over the variable
/// set: normalize characters, split into words, keep the highest-scoring
/// contiguous run of math words, then re-join with explicit multiplication.
/// parse_ok means the result parses and uses only varset variables.
FilterOutcome filter_symbolic(std::string_view raw, const VariableSet& varset,
                              FilterMode mode = FilterMode::Extended);

/// Highest-total-score contiguous run of words whose characters all lie in
/// {varset letters, digits, + - * / ( )}; score is word length, ties go to
/// the earliest start. Returns (0, 0) when every word scores zero.
std::pair<std::size_t, std::size_t> longest_math_run(
    const std::vector<std::string>& words, const VariableSet& varset);

/// Strips LaTeX: math delimiters ($, \( \), \[ \]) removed, \frac{a}{b}
/// rewritten to (a)/(b), \cdot and \times to '*', \div to '/'; other
/// commands lose their backslash-name and braces are dropped. Plain text
/// passes through unchanged.
std::string delatexify(std::string_view raw);

}  // namespace symeval
