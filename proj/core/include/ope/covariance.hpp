#pragma once

#include <array>

#include <Eigen/Core>

#include "ope/multi_index.hpp"

namespace ope {

using Vec4 = std::array<double, kDim>;

double norm2(const Vec4& x);
double norm(const Vec4& x);
Vec4 operator-(const Vec4& a, const Vec4& b);
Vec4 operator+(const Vec4& a, const Vec4& b);
Vec4 operator*(double t, const Vec4& a);

// R^Lambda(p) = exp(-p^2/Lambda^2); Lambda = 0 gives 0 and Lambda = +inf gives 1.
double regulator(double p2, double lambda);

// C^{mu,inf}(x) = exp(-mu^2 x^2/4) / (4 pi^2 x^2).
double eval_covariance(const Vec4& x, double mu);

struct CovarianceOptions {
  int max_order = 8;
};

// Exact d^u C^{mu,inf}(x), from the polynomial-times-derivative form of
// d^u h(x^2) with h(s) = exp(-mu^2 s/4)/(4 pi^2 s).
double eval_covariance_deriv(const MultiIndex& u, const Vec4& x, double mu,
                             const CovarianceOptions& opts = {});

// (4/x^2)^{(|u|+delta)/2+1} Gamma(|u|+delta+1) / (4 pi^2 mu^delta)
double covariance_deriv_bound(int order, double x2, double mu, double delta);

// Components ordered (A_1..A_4, B, cbar, c).
using MomentumCovariance = Eigen::Matrix<double, 7, 7>;

// Feynman-gauge block matrix times (R^{Lambda0}(p) - R^{Lambda}(p))/p^2.
// Lambda == Lambda0 throws unless allow_zero is set.
MomentumCovariance covariance_matrix_momentum(const Vec4& p, double xi, double lambda,
                                              double lambda0, bool allow_zero = false);

// d/dLambda of the matrix above (closed form), used by the derivative bound test.
MomentumCovariance covariance_matrix_momentum_dlambda(const Vec4& p, double xi,
                                                      double lambda);

}  // namespace ope
