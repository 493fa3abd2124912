#pragma once

#include <cstddef>
#include <map>
#include <vector>

#include "ope/operator.hpp"
#include "ope/rational.hpp"
#include "ope/symbolic.hpp"
#include "ope/theory.hpp"

namespace ope {

constexpr std::size_t kDefaultGraphGuard = 2000000;

// Endpoint of an edge: factor `slot` of vertex `vertex`; vertex == s is the
// target vertex B.
struct FactorRef {
  int vertex = 0;
  int slot = 0;
  auto operator<=>(const FactorRef&) const = default;
};

struct WickEdge {
  FactorRef a;
  FactorRef b;
  bool target = false;  // b lies on the target vertex
};

struct WickGraph {
  std::vector<WickEdge> edges;
};

// Propagator edges join factors of distinct A-vertices whose fields contract;
// target edges join an A-factor to a B-factor of the same field component
// with a non-vanishing Taylor weight. Graphs are labelled by factor slots.
std::vector<WickGraph> enumerate_wick_graphs(const Theory& theory,
                                             const std::vector<CompositeOperator>& a,
                                             const CompositeOperator& b,
                                             std::size_t guard = kDefaultGraphGuard);

// Contribution of one graph (including its Grassmann sign and the 1/prod m!
// symmetry weight of identical B-factors).
SymbolicCoefficient graph_value(const Theory& theory, const std::vector<CompositeOperator>& a,
                                const CompositeOperator& b, const WickGraph& g);

// C^B_{A_1..A_s}(x_1..x_s) of the free theory, expansion point x_s.
SymbolicCoefficient free_ope_coefficient(const Theory& theory,
                                         const std::vector<CompositeOperator>& a,
                                         const CompositeOperator& b);

// Multilinear extension to linear combinations of monomials.
SymbolicCoefficient free_ope_coefficient(const Theory& theory,
                                         const std::vector<OperatorPolynomial>& a,
                                         const CompositeOperator& b);

// All coefficients C^B_{A} with [B] <= d_max at once: cross-vertex contractions
// first, then Taylor expansion of the uncontracted factors about x_s.
std::map<CompositeOperator, SymbolicCoefficient> free_ope_expansion(
    const Theory& theory, const std::vector<CompositeOperator>& a, const Rational& d_max);

std::map<CompositeOperator, SymbolicCoefficient> free_ope_expansion(
    const Theory& theory, const std::vector<OperatorPolynomial>& a, const Rational& d_max);

}  // namespace ope
