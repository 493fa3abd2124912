#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ope/multi_index.hpp"
#include "ope/rational.hpp"

namespace ope {

enum class FieldKind { boson, fermion, ghost, antighost, auxiliary, antifield };

std::string_view to_string(FieldKind k);

struct FieldSpec {
  std::string name;
  FieldKind kind = FieldKind::boson;
  Rational dimension{1};
  int grassmann_parity = 0;
  int ghost_number = 0;
  int lorentz_arity = 0;  // 0 or 1: vector fields carry one concrete index 0..3

  int components() const { return lorentz_arity == 0 ? 1 : kDim; }
};

// One term of a two-point function <phi_a(x) phi_b(y)> = sum coef * d^deriv C(x - y),
// with derivatives taken with respect to the argument x - y.
struct PropagatorTerm {
  Rational coef;
  MultiIndex deriv;
};

enum class PropagatorShape {
  plain,        // coef * C
  index_delta,  // coef * delta_{ia ib} C
  deriv_a,      // coef * d_{ia} C
  deriv_b,      // coef * d_{ib} C
};

struct PropagatorRule {
  int field_a;
  int field_b;
  PropagatorShape shape;
  Rational coef;
};

enum class BrstShape {
  plain,                 // s0 phi_a = coef * phi_b
  derivative_along_index // s0 A_mu = coef * d_mu phi_b
};

struct BrstRule {
  int source;
  int target;
  BrstShape shape;
  Rational coef{1};
};

class Theory {
 public:
  Theory() = default;
  Theory(std::string name, std::vector<FieldSpec> fields);

  const std::string& name() const { return name_; }
  const std::vector<FieldSpec>& fields() const { return fields_; }
  const FieldSpec& field(int id) const { return fields_.at(static_cast<std::size_t>(id)); }
  int field_count() const { return static_cast<int>(fields_.size()); }
  std::optional<int> find_field(std::string_view name) const;
  int field_id(std::string_view name) const;  // throws on unknown names

  void add_propagator(PropagatorRule rule);
  void add_brst(BrstRule rule);

  // Empty when the two components do not contract.
  std::vector<PropagatorTerm> propagator(int fa, int ia, int fb, int ib) const;
  bool contracts(int fa, int fb) const;

  const std::vector<BrstRule>& brst_rules() const { return brst_; }
  const BrstRule* brst_rule(int source) const;
  bool declares_brst() const { return !brst_.empty(); }

  // gcd of 1 and all field dimensions; the smallest gap any basis can show.
  Rational dimension_quantum() const;

 private:
  std::string name_;
  std::vector<FieldSpec> fields_;
  std::map<std::pair<int, int>, PropagatorRule> propagators_;
  std::vector<BrstRule> brst_;
};

// Single massless real scalar phi, [phi] = 1.
Theory scalar_theory();
// Free Maxwell field in Feynman gauge with Nakanishi-Lautrup field and ghosts:
// fields declared in the order A, B, cbar, c.
Theory maxwell_ghost_theory();
// Grassmann-odd psi, psibar of dimension 3/2 without propagator; used to
// exercise half-integer dimension bookkeeping.
Theory dirac_like_theory();

Theory theory_by_name(std::string_view name);

}  // namespace ope
