#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <vector>

#include "ope/operator.hpp"
#include "ope/theory.hpp"

namespace ope {

constexpr std::size_t kDefaultBasisGuard = 100000;

struct OperatorBasis {
  Rational d_max{0};
  Rational delta{1};
  std::vector<CompositeOperator> operators;  // operators[0] is the unit

  std::size_t size() const { return operators.size(); }
  std::optional<std::size_t> find(const CompositeOperator& op) const;
  // Operators with dimension exactly d, in basis order.
  std::vector<std::size_t> with_dimension(const Rational& d) const;

 private:
  friend OperatorBasis enumerate_basis(const Theory&, const Rational&, std::size_t);
  std::map<CompositeOperator, std::size_t> index_;
};

OperatorBasis enumerate_basis(const Theory& theory, const Rational& d_max,
                              std::size_t guard = kDefaultBasisGuard);

}  // namespace ope
