#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <boost/multiprecision/cpp_int.hpp>

namespace symeval {

// Exact arbitrary-precision rational. All expression evaluation and answer
// comparison happens on this type; doubles appear only at the report edge.
using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

inline Rational rational_abs(const Rational& r) { return r < 0 ? Rational(-r) : r; }

inline bool is_integer(const Rational& r) { return boost::multiprecision::denominator(r) == 1; }

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

/// Parses a plain decimal literal: optional sign, digits, optional ".digits".
/// The whole input must match; no exponents, no whitespace.
std::optional<Rational> parse_decimal(std::string_view text);

/// Renders r as a decimal string when the reduced denominator is of the form
/// 2^a * 5^b (i.e. the value has a finite decimal expansion), otherwise as
/// "num/den". Integers render without a decimal point.
std::string to_decimal_string(const Rational& r);

/// |value - gold| <= tol_num/tol_den * |gold|, computed exactly.
bool within_relative(const Rational& value, const Rational& gold,
                     long tol_num = 1, long tol_den = 1000000);

/// Answer comparison rule: exact match when gold is an integer, otherwise
/// within 1e-6 relative.
bool answers_match(const Rational& value, const Rational& gold);

}  // namespace symeval
