#include <gtest/gtest.h>

#include "ope/analysis.hpp"
#include "ope/error.hpp"
#include "ope/wick.hpp"

using namespace ope;

namespace {

const Theory& scalar() {
  static const Theory th = scalar_theory();
  return th;
}
CompositeOperator op(const char* s) { return parse_operator(scalar(), s); }

ScalingFit fit_free(const char* a1, const char* a2, const char* b) {
  CompiledCoefficient c(free_ope_coefficient(scalar(), {op(a1), op(a2)}, op(b)));
  return scaling_degree([&](const std::vector<Vec4>& y) { return c(y, 1.0); }, {{0.3, 0.2, -0.1, 0.15}, {0, 0, 0, 0}});
}

}  // namespace

TEST(Scaling, Grid) {
  const auto t = tau_grid({});
  ASSERT_EQ(t.size(), 12u);
  EXPECT_NEAR(t.front(), 1.0, 1e-15);
  EXPECT_NEAR(t.back(), 1e-3, 1e-15);
  for (std::size_t i = 1; i < t.size(); ++i) EXPECT_NEAR(t[i] / t[i - 1], t[1] / t[0], 1e-12);
  ScalingGrid tiny;
  tiny.points = 3;
  EXPECT_THROW(tau_grid(tiny), Error);
}

TEST(Scaling, Propagator) {
  const auto f = fit_free("phi", "phi", "1");
  EXPECT_NEAR(f.slope, -2.0, 0.02);
  EXPECT_LE(f.ci_low, f.slope);
  EXPECT_GE(f.ci_high, f.slope);
  EXPECT_TRUE(f.passes(-2.0));
}

TEST(Scaling, Constant) {
  EXPECT_NEAR(fit_free("phi", "phi", "phi^2").slope, 0.0, 1e-9);
}

TEST(Scaling, SquareToSquare) {
  EXPECT_NEAR(fit_free("phi^2", "phi^2", "phi^2").slope, -2.0, 0.05);
}

TEST(Scaling, Underflow) {
  const auto f = scaling_degree([](const std::vector<Vec4>&) { return 0.0; }, {{1, 0, 0, 0}, {0, 0, 0, 0}});
  EXPECT_TRUE(f.underflow);
  EXPECT_FALSE(f.passes(0));
}

TEST(Associativity, SmallSeparation) {
  const Vec4 x1{0.1, 0, 0, 0}, x2{0, 0, 0, 0}, x3{0, 10, 0, 0};
  const auto r = check_associativity(scalar(), op("phi"), op("phi"), op("phi^2"), op("1"), x1, x2, x3, Rational(6), 1.0);
  EXPECT_LT(r.residual, 1e-4);
}

TEST(Associativity, UnitOperators) {
  const auto r = check_associativity(scalar(), op("1"), op("1"), op("1"), op("1"), {0.1, 0, 0, 0}, {0, 0, 0, 0},
                                     {1, 0, 0, 0}, Rational(2), 1.0);
  EXPECT_EQ(r.residual, 0.0);
  EXPECT_EQ(r.lhs, 1.0);
}

TEST(Associativity, DomainViolation) {
  try {
    check_associativity(scalar(), op("phi"), op("phi"), op("phi^2"), op("1"), {1, 0, 0, 0}, {0, 0, 0, 0},
                        {0.5, 0, 0, 0}, Rational(4), 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "DOMAIN_VIOLATION");
  }
}

TEST(Associativity, ResidualShrinksWithTruncation) {
  const Vec4 x1{0.1, 0.05, 0, 0}, x2{0, 0, 0, 0}, x3{0.2, 0.6, 0.1, 0};
  double last = 1e300;
  for (int d : {2, 4, 6}) {
    const auto r = check_associativity(scalar(), op("phi"), op("phi^2"), op("phi"), op("phi^2"), x1, x2, x3,
                                       Rational(d), 1.0);
    EXPECT_LT(r.residual, last) << d;
    last = r.residual;
  }
}
