#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <string>
#include <vector>

namespace ope {

constexpr int kDim = 4;

struct MultiIndex {
  std::array<std::uint8_t, kDim> c{};

  static MultiIndex unit(int axis) {
    MultiIndex m;
    m.c[axis] = 1;
    return m;
  }

  int order() const { return c[0] + c[1] + c[2] + c[3]; }
  double factorial() const;
  std::int64_t factorial_int() const;
  bool is_zero() const { return order() == 0; }

  // componentwise <=
  bool le(const MultiIndex& o) const {
    return c[0] <= o.c[0] && c[1] <= o.c[1] && c[2] <= o.c[2] && c[3] <= o.c[3];
  }

  MultiIndex operator+(const MultiIndex& o) const;
  // requires o.le(*this)
  MultiIndex operator-(const MultiIndex& o) const;

  auto operator<=>(const MultiIndex&) const = default;
  bool operator==(const MultiIndex&) const = default;
};

// All multi-indices of exactly the given order, lexicographically descending
// in the first component (so d_1^n comes first).
std::vector<MultiIndex> multi_indices_of_order(int n);
std::vector<MultiIndex> multi_indices_up_to(int n);

std::string to_string(const MultiIndex& m);

}  // namespace ope
