#pragma once

#include <functional>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "ope/basis.hpp"
#include "ope/operator.hpp"
#include "ope/recursion.hpp"
#include "ope/symbolic.hpp"
#include "ope/theory.hpp"

namespace ope {

// Graded left action of the free BRST differential; canonicalized output.
OperatorPolynomial apply_free_brst(const Theory& theory, const CompositeOperator& op);
OperatorPolynomial apply_free_brst(const Theory& theory, const OperatorPolynomial& p);

// Exact Q_0 on a basis: rows A, columns B.
using ExactMatrix = std::map<std::pair<CompositeOperator, CompositeOperator>, Rational>;
ExactMatrix free_q_matrix(const Theory& theory, const OperatorBasis& basis);
// Entries of Q_0 Q_0 that do not vanish (empty when nilpotent).
ExactMatrix square_nonzero(const ExactMatrix& q);
QMatrix to_q_matrix(const ExactMatrix& q);

// Monomials C with Q_0 C^B != 0, together with the coefficient.
std::vector<std::pair<CompositeOperator, Rational>> brst_preimages(const Theory& theory,
                                                                    const CompositeOperator& b);

// Symbolic K^B_{A;D} of the free theory:
//   sum_k (-1)^{sum_{j<k}|A_j|} sum_C Q_{A_k}^C C^B_{..C..} - sum_{[C]<D} Q_C^B C^C_A.
SymbolicCoefficient ward_residual(const Theory& theory, const std::vector<OperatorPolynomial>& a,
                                  const CompositeOperator& b, const Rational& d);

// K for every B with [B] <= d_max at once (D = d_max + 1). B missing from the
// map receive no contribution at all, so K^B vanishes identically for them.
std::map<CompositeOperator, SymbolicCoefficient> ward_residuals(
    const Theory& theory, const std::vector<OperatorPolynomial>& a, const Rational& d_max);

// A contact term C^B_{..E at x_k..}(x without x_l) B^{E,w}_{A_k A_l} d^w delta(x_k - x_l).
struct ContactTerm {
  int k = 0;
  int l = 0;
  CompositeOperator e;
  MultiIndex w;
  double coefficient = 0;
};

using CoefficientProvider = std::function<double(const std::vector<CompositeOperator>& a,
                                                 const CompositeOperator& b,
                                                 const std::vector<Vec4>& x)>;

// Free-theory provider backed by the Wick engine (memoized symbolic forms).
CoefficientProvider free_coefficient_provider(const Theory& theory, double mu);

struct WardValue {
  double value = 0;
  std::vector<ContactTerm> contact_terms;  // flagged, not included in value
};

// Pointwise K at pairwise distinct points, using the g = 0 layers of Q and
// the reduced antibracket entries of Bm for the contact line.
WardValue evaluate_K(const Theory& theory, const CompositeOperator& b,
                     const std::vector<CompositeOperator>& a, const Rational& d,
                     const std::vector<Vec4>& x, const CoefficientProvider& coefficients,
                     const QMatrix& q, const BMatrix& bm, const OperatorBasis& basis);

// Contact line integrated against a Gaussian test function in x_l of width sigma
// centred at x_k + shift: -sum C^B(..E..) B^{E,w} d^w h(x_k).
double smeared_contact(const std::vector<ContactTerm>& terms,
                       const std::function<double(const ContactTerm&)>& coefficient_at_xk,
                       const Vec4& shift, double sigma);

}  // namespace ope
