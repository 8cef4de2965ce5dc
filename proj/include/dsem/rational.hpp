#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <string>

#include "dsem/errors.hpp"

namespace dsem {

// All probability arithmetic is exact. cpp_rational keeps values in lowest
// terms with a positive denominator, which is exactly the invariant we need.
using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

// Accepts "p/q" or a plain integer, with an optional leading '-'.
// Decimals and everything else are rejected.
inline Rational parse_rational(const std::string& text) {
  auto fail = [&]() -> Rational {
    throw ParseError("invalid rational literal '" + text + "' (expected \"p/q\" or integer)");
  };
  std::size_t pos = 0;
  bool negative = false;
  if (pos < text.size() && (text[pos] == '-' || text[pos] == '+')) {
    negative = text[pos] == '-';
    ++pos;
  }
  auto read_digits = [&](std::size_t& i) -> std::string {
    std::size_t start = i;
    while (i < text.size() && text[i] >= '0' && text[i] <= '9') ++i;
    return text.substr(start, i - start);
  };
  std::string num = read_digits(pos);
  if (num.empty()) return fail();
  std::string den = "1";
  if (pos < text.size() && text[pos] == '/') {
    ++pos;
    den = read_digits(pos);
    if (den.empty()) return fail();
  }
  if (pos != text.size()) return fail();
  BigInt d(den);
  if (d == 0) throw ParseError("zero denominator in rational literal '" + text + "'");
  Rational r(BigInt(num), d);
  return negative ? Rational(-r) : r;
}

inline std::string to_string(const Rational& r) {
  std::string s = numerator(r).str();
  if (denominator(r) != 1) s += "/" + denominator(r).str();
  return s;
}

inline bool is_probability(const Rational& r) { return r >= 0 && r <= 1; }

}  // namespace dsem
