#include "ope/multi_index.hpp"

#include <cassert>

namespace ope {

namespace {
std::int64_t fact(int n) {
  std::int64_t r = 1;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}
}  // namespace

double MultiIndex::factorial() const { return static_cast<double>(factorial_int()); }

std::int64_t MultiIndex::factorial_int() const {
  return fact(c[0]) * fact(c[1]) * fact(c[2]) * fact(c[3]);
}

MultiIndex MultiIndex::operator+(const MultiIndex& o) const {
  MultiIndex r;
  for (int a = 0; a < kDim; ++a) r.c[a] = static_cast<std::uint8_t>(c[a] + o.c[a]);
  return r;
}

MultiIndex MultiIndex::operator-(const MultiIndex& o) const {
  assert(o.le(*this));
  MultiIndex r;
  for (int a = 0; a < kDim; ++a) r.c[a] = static_cast<std::uint8_t>(c[a] - o.c[a]);
  return r;
}

std::vector<MultiIndex> multi_indices_of_order(int n) {
  std::vector<MultiIndex> out;
  for (int a = n; a >= 0; --a)
    for (int b = n - a; b >= 0; --b)
      for (int c = n - a - b; c >= 0; --c) {
        MultiIndex m;
        m.c = {static_cast<std::uint8_t>(a), static_cast<std::uint8_t>(b),
               static_cast<std::uint8_t>(c), static_cast<std::uint8_t>(n - a - b - c)};
        out.push_back(m);
      }
  return out;
}

std::vector<MultiIndex> multi_indices_up_to(int n) {
  std::vector<MultiIndex> out;
  for (int k = 0; k <= n; ++k) {
    auto layer = multi_indices_of_order(k);
    out.insert(out.end(), layer.begin(), layer.end());
  }
  return out;
}

std::string to_string(const MultiIndex& m) {
  std::string s = "(";
  for (int a = 0; a < kDim; ++a) {
    if (a) s += ",";
    s += std::to_string(m.c[a]);
  }
  return s + ")";
}

}  // namespace ope
