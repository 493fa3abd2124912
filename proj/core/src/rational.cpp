#include "ope/rational.hpp"

#include <boost/integer/common_factor.hpp>
#include <charconv>

#include "ope/error.hpp"

namespace ope {

namespace {

std::int64_t parse_int(std::string_view s) {
  std::int64_t v = 0;
  auto first = s.data();
  if (!s.empty() && s.front() == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || first == s.data() + s.size())
    throw invalid_argument("not an integer: '" + std::string(s) + "'");
  return v;
}

}  // namespace

Rational parse_rational(std::string_view text) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  if (text.empty()) throw invalid_argument("empty rational");
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    auto den = parse_int(text.substr(slash + 1));
    if (den == 0) throw invalid_argument("zero denominator");
    return {parse_int(text.substr(0, slash)), den};
  }
  if (auto dot = text.find('.'); dot != std::string_view::npos) {
    auto frac = text.substr(dot + 1);
    if (frac.size() > 15) throw invalid_argument("too many decimals: " + std::string(text));
    std::int64_t scale = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
    auto whole = text.substr(0, dot);
    bool neg = !whole.empty() && whole.front() == '-';
    std::int64_t w = whole.empty() || whole == "-" || whole == "+" ? 0 : parse_int(whole);
    std::int64_t f = frac.empty() ? 0 : parse_int(frac);
    std::int64_t num = (neg ? -1 : 1) * (std::abs(w) * scale + f);
    return {num, scale};
  }
  return {parse_int(text), 1};
}

std::string to_string(const Rational& r) {
  return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

Rational rational_gcd(const Rational& a, const Rational& b) {
  if (is_zero(a)) return abs(b);
  if (is_zero(b)) return abs(a);
  auto num = boost::integer::gcd(a.numerator() * b.denominator(), b.numerator() * a.denominator());
  return Rational(num, a.denominator() * b.denominator());
}

}  // namespace ope
