#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <boost/rational.hpp>

namespace ope {

using Rational = boost::rational<std::int64_t>;

// Accepts "p", "p/q" and decimal literals with a finite expansion ("1.5").
Rational parse_rational(std::string_view text);

// Always "p/q", also for integers ("2/1").
std::string to_string(const Rational& r);

inline double to_double(const Rational& r) {
  return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator());
}

// Comparing a boost::rational with an integer literal via == recurses forever
// under C++20 rewritten comparisons; use this instead.
inline bool is_zero(const Rational& r) { return r.numerator() == 0; }

Rational rational_gcd(const Rational& a, const Rational& b);

}  // namespace ope
