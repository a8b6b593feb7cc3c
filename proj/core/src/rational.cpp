#include "symeval/rational.hpp"

namespace symeval {

std::optional<Rational> parse_decimal(std::string_view text) {
  std::size_t i = 0;
  bool negative = false;
  if (i < text.size() && (text[i] == '-' || text[i] == '+')) {
    negative = text[i] == '-';
    ++i;
  }
  std::size_t int_start = i;
  while (i < text.size() && text[i] >= '0' && text[i] <= '9') ++i;
  if (i == int_start) return std::nullopt;
  BigInt numerator(std::string(text.substr(int_start, i - int_start)));
  BigInt denominator(1);
  if (i < text.size() && text[i] == '.') {
    ++i;
    std::size_t frac_start = i;
    while (i < text.size() && text[i] >= '0' && text[i] <= '9') ++i;
    if (i == frac_start) return std::nullopt;
    for (std::size_t k = frac_start; k < i; ++k) {
      numerator = numerator * 10 + (text[k] - '0');
      denominator *= 10;
    }
  }
  if (i != text.size()) return std::nullopt;
  Rational r(numerator, denominator);
  return negative ? Rational(-r) : r;
}

std::string to_decimal_string(const Rational& r) {
  BigInt num = boost::multiprecision::numerator(r);
  BigInt den = boost::multiprecision::denominator(r);
  bool negative = num < 0;
  if (negative) num = -num;
  // Scale the denominator to a power of ten when it is 2^a * 5^b.
  BigInt d = den;
  int twos = 0, fives = 0;
  while (d % 2 == 0) { d /= 2; ++twos; }
  while (d % 5 == 0) { d /= 5; ++fives; }
  if (d != 1) {
    std::string s = negative ? "-" : "";
    return s + num.str() + "/" + den.str();
  }
  int digits = std::max(twos, fives);
  for (int i = twos; i < digits; ++i) num *= 2;
  for (int i = fives; i < digits; ++i) num *= 5;
  std::string body = num.str();
  std::string out = negative ? "-" : "";
  if (digits == 0) return out + body;
  if (body.size() <= static_cast<std::size_t>(digits))
    body.insert(0, static_cast<std::size_t>(digits) + 1 - body.size(), '0');
  out += body.substr(0, body.size() - digits);
  std::string frac = body.substr(body.size() - digits);
  while (!frac.empty() && frac.back() == '0') frac.pop_back();
  if (!frac.empty()) out += "." + frac;
  return out;
}

bool within_relative(const Rational& value, const Rational& gold,
                     long tol_num, long tol_den) {
  Rational tol(tol_num, tol_den);
  return rational_abs(value - gold) <= tol * rational_abs(gold);
}

bool answers_match(const Rational& value, const Rational& gold) {
  if (is_integer(gold)) return value == gold;
  return within_relative(value, gold);
}

}  // namespace symeval
