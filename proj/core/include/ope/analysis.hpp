#pragma once

#include <functional>
#include <vector>

#include "ope/covariance.hpp"
#include "ope/operator.hpp"
#include "ope/theory.hpp"

namespace ope {

struct ScalingGrid {
  int points = 12;
  double tau_min = 1e-3;
  int fit_points = 8;  // least squares over the smallest taus
};

struct ScalingFit {
  std::vector<double> tau;
  std::vector<double> values;
  double slope = 0;
  double stderr_slope = 0;
  double ci_low = 0;   // 95% interval
  double ci_high = 0;
  bool underflow = false;

  bool passes(double expected, double margin = 0.05) const { return !underflow && slope >= expected - margin; }
};

using PointFunction = std::function<double(const std::vector<Vec4>&)>;

std::vector<double> tau_grid(const ScalingGrid& grid);

// Fit of log|f(tau x)| against log tau; points are scaled about the last one.
ScalingFit scaling_degree(const PointFunction& f, const std::vector<Vec4>& x,
                          const ScalingGrid& grid = {});

struct AssociativityResult {
  double lhs = 0;
  double rhs = 0;
  double residual = 0;  // relative to max(|lhs|, |rhs|, 1e-30)
  std::size_t terms = 0;
};

// C^B_{A1 A2 A3}(x) against sum_{[C] <= d_trunc} C^C_{A1 A2}(x1,x2) C^B_{C A3}(x2,x3);
// requires |x1 - x2| < |x3 - x2|.
AssociativityResult check_associativity(const Theory& theory, const CompositeOperator& a1,
                                        const CompositeOperator& a2, const CompositeOperator& a3,
                                        const CompositeOperator& b, const Vec4& x1, const Vec4& x2,
                                        const Vec4& x3, const Rational& d_trunc, double mu);

}  // namespace ope
