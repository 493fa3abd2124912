#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ope/multi_index.hpp"
#include "ope/rational.hpp"
#include "ope/theory.hpp"

namespace ope {

// One derivatived field component d^deriv phi_{field, index}.
struct Factor {
  std::uint8_t field = 0;
  std::uint8_t index = 0;  // Lorentz component 0..3, 0 for scalars
  MultiIndex deriv;

  auto operator<=>(const Factor&) const = default;
  bool operator==(const Factor&) const = default;
};

struct CanonicalForm;

class CompositeOperator {
 public:
  CompositeOperator() = default;

  const std::vector<Factor>& factors() const { return factors_; }
  std::size_t size() const { return factors_.size(); }
  bool is_unit() const { return factors_.empty(); }
  const Rational& dimension() const { return dimension_; }
  int ghost_number() const { return ghost_number_; }
  int parity() const { return parity_; }

  // Ordering and equality look at the factor list only; dimension and
  // gradings are functions of it.
  auto operator<=>(const CompositeOperator& o) const { return factors_ <=> o.factors_; }
  bool operator==(const CompositeOperator& o) const { return factors_ == o.factors_; }

 private:
  friend CanonicalForm canonicalize(const Theory&, std::vector<Factor>);
  std::vector<Factor> factors_;
  Rational dimension_{0};
  int ghost_number_ = 0;
  int parity_ = 0;
};

struct CanonicalForm {
  CompositeOperator op;
  int sign = 1;
  bool zero = false;
};

// Stable sort into canonical order. The sign is the parity of the permutation
// restricted to Grassmann-odd factors; a repeated odd factor gives zero.
CanonicalForm canonicalize(const Theory& theory, std::vector<Factor> factors);

// Canonicalize and require a nonzero result; the sign is dropped.
CompositeOperator make_operator(const Theory& theory, std::vector<Factor> factors);

Rational factor_dimension(const Theory& theory, const Factor& f);
int factor_parity(const Theory& theory, const Factor& f);

// Linear combinations of monomials with exact coefficients.
using OperatorPolynomial = std::map<CompositeOperator, Rational>;

void add_term(OperatorPolynomial& p, const CompositeOperator& op, const Rational& c);
OperatorPolynomial single(const CompositeOperator& op);

// Leibniz expansion of d^w op into canonical monomials. Multiplicities are
// signed because reordering odd factors can flip signs.
std::vector<std::pair<CompositeOperator, std::int64_t>> derivative_expand(
    const Theory& theory, const MultiIndex& w, const CompositeOperator& op);

OperatorPolynomial derivative_expand(const Theory& theory, const MultiIndex& w,
                                     const OperatorPolynomial& p);

// delta(O_B, d^w O_C): multiplicity of B in the expansion of d^w C.
std::int64_t derivative_multiplicity(const Theory& theory, const CompositeOperator& b,
                                     const MultiIndex& w, const CompositeOperator& c);

// Text form: factors separated by '*' or whitespace; each factor is
// [d<axes>.]name[_<index>][^<power>], e.g. "phi^2", "d11.phi", "d1.A_2*c".
// Axes and indices are 1-based. "1" is the unit operator.
CompositeOperator parse_operator(const Theory& theory, std::string_view text);
std::string to_string(const Theory& theory, const CompositeOperator& op);
std::string to_string(const Theory& theory, const Factor& f);

// F_{mu nu} = d_mu A_nu - d_nu A_mu for a theory with a vector field "A";
// mu, nu are 0-based.
OperatorPolynomial field_strength(const Theory& theory, int mu, int nu);
OperatorPolynomial multiply(const Theory& theory, const OperatorPolynomial& a,
                            const OperatorPolynomial& b);

}  // namespace ope
