#include <benchmark/benchmark.h>

#include "ope/basis.hpp"
#include "ope/covariance.hpp"
#include "ope/recursion.hpp"
#include "ope/trees.hpp"
#include "ope/ward.hpp"
#include "ope/wick.hpp"

using namespace ope;

namespace {

void BM_CovarianceDeriv(benchmark::State& state) {
  MultiIndex u;
  u.c[0] = static_cast<std::uint8_t>(state.range(0));
  u.c[2] = 1;
  const Vec4 x{0.3, -0.2, 0.5, 0.1};
  for (auto _ : state) benchmark::DoNotOptimize(eval_covariance_deriv(u, x, 1.0));
}
BENCHMARK(BM_CovarianceDeriv)->DenseRange(0, 6, 2);

void BM_BasisEnumeration(benchmark::State& state) {
  const Theory th = maxwell_ghost_theory();
  const Rational d(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(enumerate_basis(th, d).size());
}
BENCHMARK(BM_BasisEnumeration)->DenseRange(2, 4);

void BM_FreeCoefficient(benchmark::State& state) {
  const Theory th = scalar_theory();
  const auto a = parse_operator(th, "phi^" + std::to_string(state.range(0)));
  const auto b = parse_operator(th, "phi^2");
  for (auto _ : state) benchmark::DoNotOptimize(free_ope_coefficient(th, {a, a}, b).size());
}
BENCHMARK(BM_FreeCoefficient)->DenseRange(2, 5);

void BM_FreeExpansion(benchmark::State& state) {
  const Theory th = scalar_theory();
  const std::vector<CompositeOperator> a{parse_operator(th, "phi^2"), parse_operator(th, "phi*d1.phi")};
  const Rational d(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(free_ope_expansion(th, a, d).size());
}
BENCHMARK(BM_FreeExpansion)->DenseRange(2, 6, 2);

void BM_CompiledEvaluation(benchmark::State& state) {
  const Theory th = scalar_theory();
  const auto c = free_ope_coefficient(th, {parse_operator(th, "phi^3"), parse_operator(th, "phi^3")},
                                      parse_operator(th, "phi^2"));
  CompiledCoefficient cc(c);
  const std::vector<Vec4> x{{0.2, 0.1, -0.3, 0.05}, {0, 0, 0, 0}};
  for (auto _ : state) benchmark::DoNotOptimize(cc(x, 1.0));
}
BENCHMARK(BM_CompiledEvaluation);

void BM_RecursionIntegrand(benchmark::State& state) {
  const Theory th = scalar_theory();
  const auto i = build_interaction_operator(th, {{single(parse_operator(th, "phi^4")), Rational(1, 24), 1}}).layers[0];
  RecursionIntegrand ig(th, {parse_operator(th, "phi^2"), parse_operator(th, "phi^2")}, parse_operator(th, "phi^2"), i);
  const auto f = ig.bind({{0.3, 0.1, 0, 0}, {0, 0, 0, 0}}, 1.0);
  const Vec4 y{0.7, -0.2, 0.4, 0.1};
  for (auto _ : state) benchmark::DoNotOptimize(f(y));
}
BENCHMARK(BM_RecursionIntegrand);

void BM_WardResiduals(benchmark::State& state) {
  const Theory th = maxwell_ghost_theory();
  const std::vector<OperatorPolynomial> a{single(parse_operator(th, "cbar*d2.A_1")), single(parse_operator(th, "A_2*c"))};
  for (auto _ : state) benchmark::DoNotOptimize(ward_residuals(th, a, Rational(3)).size());
}
BENCHMARK(BM_WardResiduals);

void BM_TreeWeight(benchmark::State& state) {
  std::mt19937_64 rng(1);
  auto s = random_tree(rng, {});
  for (auto _ : state) benchmark::DoNotOptimize(log_weight_factor(s.tree, s.q, 1.0, 2.0));
}
BENCHMARK(BM_TreeWeight);

}  // namespace

BENCHMARK_MAIN();
