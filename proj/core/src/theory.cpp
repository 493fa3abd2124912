#include "ope/theory.hpp"

#include "ope/error.hpp"

namespace ope {

std::string_view to_string(FieldKind k) {
  switch (k) {
    case FieldKind::boson: return "boson";
    case FieldKind::fermion: return "fermion";
    case FieldKind::ghost: return "ghost";
    case FieldKind::antighost: return "antighost";
    case FieldKind::auxiliary: return "auxiliary";
    case FieldKind::antifield: return "antifield";
  }
  return "?";
}

Theory::Theory(std::string name, std::vector<FieldSpec> fields)
    : name_(std::move(name)), fields_(std::move(fields)) {
  if (fields_.size() > 200) throw invalid_argument("too many fields");
  for (const auto& f : fields_) {
    if (f.dimension < 1) throw invalid_argument("field dimension must be >= 1: " + f.name);
    if (f.lorentz_arity < 0 || f.lorentz_arity > 1)
      throw invalid_argument("only scalar and vector components are supported: " + f.name);
    if (f.grassmann_parity != 0 && f.grassmann_parity != 1)
      throw invalid_argument("parity must be 0 or 1: " + f.name);
  }
}

std::optional<int> Theory::find_field(std::string_view name) const {
  for (std::size_t i = 0; i < fields_.size(); ++i)
    if (fields_[i].name == name) return static_cast<int>(i);
  return std::nullopt;
}

int Theory::field_id(std::string_view name) const {
  if (auto id = find_field(name)) return *id;
  throw invalid_argument("unknown field '" + std::string(name) + "' in theory " + name_);
}

void Theory::add_propagator(PropagatorRule rule) {
  propagators_[{rule.field_a, rule.field_b}] = rule;
}

void Theory::add_brst(BrstRule rule) {
  for (auto& r : brst_)
    if (r.source == rule.source) {
      r = rule;
      return;
    }
  brst_.push_back(rule);
}

std::vector<PropagatorTerm> Theory::propagator(int fa, int ia, int fb, int ib) const {
  auto it = propagators_.find({fa, fb});
  if (it == propagators_.end()) return {};
  const auto& r = it->second;
  switch (r.shape) {
    case PropagatorShape::plain: return {{r.coef, {}}};
    case PropagatorShape::index_delta:
      if (ia != ib) return {};
      return {{r.coef, {}}};
    case PropagatorShape::deriv_a: return {{r.coef, MultiIndex::unit(ia)}};
    case PropagatorShape::deriv_b: return {{r.coef, MultiIndex::unit(ib)}};
  }
  return {};
}

bool Theory::contracts(int fa, int fb) const { return propagators_.count({fa, fb}) > 0; }

const BrstRule* Theory::brst_rule(int source) const {
  for (const auto& r : brst_)
    if (r.source == source) return &r;
  return nullptr;
}

Rational Theory::dimension_quantum() const {
  Rational g(1);
  for (const auto& f : fields_) g = rational_gcd(g, f.dimension);
  return g;
}

Theory scalar_theory() {
  Theory t("scalar", {FieldSpec{"phi", FieldKind::boson, Rational(1), 0, 0, 0}});
  t.add_propagator({0, 0, PropagatorShape::plain, Rational(1)});
  return t;
}

Theory maxwell_ghost_theory() {
  Theory t("maxwell-ghost", {
                                FieldSpec{"A", FieldKind::boson, Rational(1), 0, 0, 1},
                                FieldSpec{"B", FieldKind::auxiliary, Rational(2), 0, 0, 0},
                                FieldSpec{"cbar", FieldKind::antighost, Rational(1), 1, -1, 0},
                                FieldSpec{"c", FieldKind::ghost, Rational(1), 1, 1, 0},
                            });
  const int A = 0, B = 1, cbar = 2, c = 3;
  // <A_mu(x) A_nu(y)> = delta C, <A_mu(x) B(y)> = -d_mu C(x-y), <B(x) A_nu(y)> = d_nu C(x-y),
  // <c(x) cbar(y)> = C, <cbar(x) c(y)> = -C. These make <s0(phi phi)> vanish.
  t.add_propagator({A, A, PropagatorShape::index_delta, Rational(1)});
  t.add_propagator({A, B, PropagatorShape::deriv_a, Rational(-1)});
  t.add_propagator({B, A, PropagatorShape::deriv_b, Rational(1)});
  t.add_propagator({c, cbar, PropagatorShape::plain, Rational(1)});
  t.add_propagator({cbar, c, PropagatorShape::plain, Rational(-1)});
  t.add_brst({A, c, BrstShape::derivative_along_index, Rational(1)});
  t.add_brst({cbar, B, BrstShape::plain, Rational(1)});
  return t;
}

Theory dirac_like_theory() {
  return Theory("dirac-like", {
                                  FieldSpec{"psi", FieldKind::fermion, Rational(3, 2), 1, 0, 0},
                                  FieldSpec{"psibar", FieldKind::fermion, Rational(3, 2), 1, 0, 0},
                              });
}

Theory theory_by_name(std::string_view name) {
  if (name == "scalar") return scalar_theory();
  if (name == "maxwell-ghost" || name == "qed") return maxwell_ghost_theory();
  if (name == "dirac-like") return dirac_like_theory();
  throw invalid_argument("unknown theory '" + std::string(name) + "'");
}

}  // namespace ope
