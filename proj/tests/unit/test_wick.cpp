#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "ope/basis.hpp"
#include "ope/error.hpp"
#include "ope/wick.hpp"
#include "oracles.hpp"

using namespace ope;

namespace {

const Theory& scalar() {
  static const Theory th = scalar_theory();
  return th;
}
CompositeOperator op(const char* s) { return parse_operator(scalar(), s); }

}  // namespace

TEST(WickGraphs, SinglePropagator) {
  EXPECT_EQ(enumerate_wick_graphs(scalar(), {op("phi"), op("phi")}, op("1")).size(), 1u);
}

TEST(WickGraphs, TwoCrossPairings) {
  EXPECT_EQ(enumerate_wick_graphs(scalar(), {op("phi^2"), op("phi^2")}, op("1")).size(), 2u);
}

TEST(WickGraphs, OddParityHasNoGraph) {
  EXPECT_TRUE(enumerate_wick_graphs(scalar(), {op("phi"), op("phi")}, op("phi")).empty());
}

TEST(WickGraphs, FactorialCounts) {
  for (int n = 1; n <= 5; ++n) {
    const auto a = parse_operator(scalar(), n == 1 ? "phi" : "phi^" + std::to_string(n));
    EXPECT_EQ(static_cast<long long>(enumerate_wick_graphs(scalar(), {a, a}, op("1")).size()),
              oracle::cross_matchings(n));
  }
}

TEST(WickGraphs, Guard) {
  const auto a = op("phi^4");
  EXPECT_THROW(enumerate_wick_graphs(scalar(), {a, a, a}, op("1"), 10), Error);
}

TEST(FreeCoefficient, Propagator) {
  const auto c = free_ope_coefficient(scalar(), {op("phi"), op("phi")}, op("1"));
  const std::vector<Vec4> x{{2, 0, 0, 0}, {0, 0, 0, 0}};
  EXPECT_NEAR(evaluate(c, x, 1), std::exp(-1.0) / (16 * std::numbers::pi * std::numbers::pi), 1e-17);
}

TEST(FreeCoefficient, SquaredPropagator) {
  const auto c = free_ope_coefficient(scalar(), {op("phi^2"), op("phi^2")}, op("1"));
  const std::vector<Vec4> x{{0.3, -0.2, 0.1, 0.4}, {0.1, 0, 0, 0}};
  const double g = eval_covariance(x[0] - x[1], 1.0);
  EXPECT_NEAR(evaluate(c, x, 1), 2 * g * g, 1e-14 * g * g);
}

TEST(FreeCoefficient, ConstantProjection) {
  const auto c = free_ope_coefficient(scalar(), {op("phi"), op("phi")}, op("phi^2"));
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(evaluate(c, {{0.5, 0, 0, 0}, {0, 0, 0, 0}}, 1), 1.0);
}

TEST(FreeCoefficient, TaylorWeights) {
  // phi(x1) = phi(x2) + (x1 - x2)_1 d1 phi(x2) + ...
  const auto c = free_ope_coefficient(scalar(), {op("phi"), op("1")}, op("d11.phi"));
  const std::vector<Vec4> x{{0.3, 0.2, 0, 0}, {0, 0, 0, 0}};
  EXPECT_NEAR(evaluate(c, x, 1), 0.3 * 0.3 / 2, 1e-15);
}

TEST(FreeCoefficient, MatchesBruteForceOracle) {
  const auto basis = enumerate_basis(scalar(), Rational(3));
  for (const auto& a1 : basis.operators)
    for (const auto& a2 : basis.operators)
      for (const auto& b : basis.operators) {
        const auto got = oracle::term_map(free_ope_coefficient(scalar(), {a1, a2}, b));
        EXPECT_EQ(got, oracle::brute_force_pair(a1, a2, b))
            << to_string(scalar(), a1) << " " << to_string(scalar(), a2) << " -> " << to_string(scalar(), b);
      }
}

TEST(FreeCoefficient, ExpansionAgreesWithSingleCoefficients) {
  const std::vector<CompositeOperator> a{op("phi^2"), op("d1.phi")};
  const auto all = free_ope_expansion(scalar(), a, Rational(4));
  for (const auto& b : enumerate_basis(scalar(), Rational(4)).operators) {
    const auto single = free_ope_coefficient(scalar(), a, b);
    auto it = all.find(b);
    if (single.is_zero()) {
      EXPECT_TRUE(it == all.end() || it->second.is_zero());
    } else {
      ASSERT_NE(it, all.end());
      EXPECT_EQ(it->second, single);
    }
  }
}

TEST(FreeCoefficient, GhostSign) {
  const auto th = maxwell_ghost_theory();
  const auto c = parse_operator(th, "c"), cbar = parse_operator(th, "cbar");
  const std::vector<Vec4> x{{0.5, 0.1, 0, 0}, {0, 0, 0, 0}};
  const double cc = evaluate(free_ope_coefficient(th, {c, cbar}, parse_operator(th, "1")), x, 1);
  const double bc = evaluate(free_ope_coefficient(th, {cbar, c}, parse_operator(th, "1")), x, 1);
  EXPECT_NEAR(cc, eval_covariance(x[0], 1), 1e-16);
  EXPECT_NEAR(bc, -eval_covariance(x[0], 1), 1e-16);
}

TEST(Symbolic, ZeroEvaluatesToZero) {
  SymbolicCoefficient z(2, 1);
  EXPECT_EQ(evaluate(z, {{1, 0, 0, 0}, {0, 0, 0, 0}}, 1), 0.0);
}

TEST(Symbolic, SumIsLinear) {
  const auto c = free_ope_coefficient(scalar(), {op("phi"), op("phi")}, op("1"));
  auto two = c;
  two += c;
  const std::vector<Vec4> x{{0.2, 0.3, 0, 0}, {0, 0, 0.1, 0}};
  EXPECT_DOUBLE_EQ(evaluate(two, x, 1), 2 * evaluate(c, x, 1));
  two -= c;
  two -= c;
  EXPECT_TRUE(two.is_zero());
}

TEST(Symbolic, CompiledMatchesInterpreted) {
  const auto c = free_ope_coefficient(scalar(), {op("phi^3"), op("phi*d2.phi")}, op("phi^2"));
  CompiledCoefficient cc(c);
  const std::vector<Vec4> x{{0.2, 0.3, -0.1, 0.05}, {0.01, 0, 0.1, 0}};
  EXPECT_NEAR(cc(x, 0.7), evaluate(c, x, 0.7), 1e-12 * std::abs(evaluate(c, x, 0.7)));
}

TEST(Symbolic, AtomsAreShared) {
  EXPECT_EQ(intern_atom(FAtom{0, 1, MultiIndex::unit(2)}), intern_atom(FAtom{0, 1, MultiIndex::unit(2)}));
  const auto [id, sign] = make_atom(1, 0, MultiIndex::unit(0));
  EXPECT_EQ(sign, -1);
  EXPECT_EQ(atom(id).p, 0);
}
