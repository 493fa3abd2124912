#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "ope/covariance.hpp"
#include "oracles.hpp"

using namespace ope;

TEST(Covariance, ClosedFormValue) {
  // |x|^2 = 4, mu = 1: e^-1 / (16 pi^2)
  EXPECT_NEAR(eval_covariance({2, 0, 0, 0}, 1), 2.32962e-3, 1e-8);
  EXPECT_DOUBLE_EQ(eval_covariance({2, 0, 0, 0}, 1), std::exp(-1.0) / (16 * std::numbers::pi * std::numbers::pi));
}

TEST(Covariance, MasslessLimit) {
  EXPECT_NEAR(eval_covariance({1, 0, 0, 0}, 1e-9), 1 / (4 * std::numbers::pi * std::numbers::pi), 1e-15);
}

TEST(Covariance, RotationInvariant) {
  const Vec4 x{0.3, -0.4, 1.2, 0.0};
  const double c = std::cos(0.7), s = std::sin(0.7);
  const Vec4 r{c * x[0] - s * x[2], x[1], s * x[0] + c * x[2], x[3]};
  EXPECT_NEAR(eval_covariance(x, 1.3), eval_covariance(r, 1.3), 1e-15);
}

TEST(Covariance, ZeroDerivativeIsValue) {
  const Vec4 x{0.3, 0.2, -0.1, 0.5};
  EXPECT_DOUBLE_EQ(eval_covariance_deriv({}, x, 0.8), eval_covariance(x, 0.8));
}

TEST(Covariance, OddDerivativeAlongEmptyAxis) {
  const Vec4 x{0.7, 0, 0, 0};
  for (int order : {1, 3}) {
    MultiIndex u;
    u.c[2] = static_cast<std::uint8_t>(order);
    EXPECT_EQ(eval_covariance_deriv(u, x, 1), 0.0);
  }
}

TEST(Covariance, DerivativesMatchHeatKernel) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> coord(-1.5, 1.5);
  for (int k = 0; k < 40; ++k) {
    Vec4 x{coord(rng), coord(rng), coord(rng), coord(rng)};
    const auto all = multi_indices_up_to(4);
    const auto& u = all[static_cast<std::size_t>(k) % all.size()];
    const double want = oracle::heat_kernel_deriv(u, x, 1.0);
    const double got = eval_covariance_deriv(u, x, 1.0);
    EXPECT_NEAR(got, want, 1e-9 * std::max(1.0, std::abs(want))) << to_string(u);
  }
}

TEST(Covariance, DerivativesMatchFiniteDifferences) {
  const Vec4 x{0.4, -0.3, 0.2, 0.6};
  auto c = [](const Vec4& y) { return eval_covariance(y, 1.0); };
  for (const auto& u : multi_indices_up_to(2)) {
    const double fd = oracle::finite_difference(c, u, x, 1e-4);
    EXPECT_NEAR(eval_covariance_deriv(u, x, 1.0), fd, 1e-5 * std::max(1.0, std::abs(fd))) << to_string(u);
  }
}

TEST(Covariance, DerivativeBound) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> coord(-2, 2);
  const auto all = multi_indices_up_to(4);
  for (int k = 0; k < 200; ++k) {
    Vec4 x{coord(rng), coord(rng), coord(rng), coord(rng)};
    const auto& u = all[std::uniform_int_distribution<std::size_t>(0, all.size() - 1)(rng)];
    EXPECT_LE(std::abs(eval_covariance_deriv(u, x, 1)), covariance_deriv_bound(u.order(), norm2(x), 1, 0.5));
  }
}

TEST(Covariance, Regulator) {
  EXPECT_EQ(regulator(3.0, 0), 0.0);
  EXPECT_EQ(regulator(3.0, std::numeric_limits<double>::infinity()), 1.0);
  EXPECT_NEAR(regulator(4.0, 2.0), std::exp(-1.0), 1e-15);
}

TEST(CovarianceMatrix, EqualCutoffsVanish) {
  const Vec4 p{0.3, 0.1, 0, 0.2};
  EXPECT_THROW(covariance_matrix_momentum(p, 1, 2, 2), std::exception);
  EXPECT_EQ(covariance_matrix_momentum(p, 1, 2, 2, true).norm(), 0.0);
}

TEST(CovarianceMatrix, FeynmanGaugeBlock) {
  const Vec4 p{0.3, 0.1, -0.5, 0.2};
  const double p2 = norm2(p);
  const double r = (regulator(p2, 10) - regulator(p2, 1)) / p2;
  const auto m = covariance_matrix_momentum(p, 1, 1, 10);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) EXPECT_NEAR(m(a, b), a == b ? r : 0.0, 1e-15);
}

TEST(CovarianceMatrix, AntisymmetricPair) {
  const Vec4 p{0.3, 0.1, -0.5, 0.2};
  const double p2 = norm2(p);
  const double r = (regulator(p2, 10) - regulator(p2, 1)) / p2;
  const auto m = covariance_matrix_momentum(p, 0.5, 1, 10);
  EXPECT_NEAR(m(4, 5), -r, 1e-15);
  EXPECT_NEAR(m(5, 4), r, 1e-15);
}

TEST(CovarianceMatrix, LambdaDerivative) {
  const Vec4 p{0.3, 0.1, -0.5, 0.2};
  const double h = 1e-6;
  const auto d = covariance_matrix_momentum_dlambda(p, 0.5, 1.3);
  const auto fd = (covariance_matrix_momentum(p, 0.5, 1.3 + h, 10) - covariance_matrix_momentum(p, 0.5, 1.3 - h, 10)) / (2 * h);
  EXPECT_LT((d - fd).cwiseAbs().maxCoeff(), 1e-6);
}
