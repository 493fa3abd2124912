#include "ope/ward.hpp"

#include <cmath>
#include <limits>
#include <mutex>
#include <set>
#include <shared_mutex>

#include "ope/error.hpp"
#include "ope/wick.hpp"

namespace ope {

namespace {

// s0 on a single factor: (image factor, coefficient), or nothing.
std::optional<std::pair<Factor, Rational>> brst_factor(const Theory& theory, const Factor& f) {
  const BrstRule* rule = theory.brst_rule(f.field);
  if (!rule) return std::nullopt;
  Factor g = f;
  g.field = static_cast<std::uint8_t>(rule->target);
  if (rule->shape == BrstShape::derivative_along_index) {
    g.deriv = f.deriv + MultiIndex::unit(f.index);
    g.index = 0;
  } else if (theory.field(rule->target).lorentz_arity == 0) {
    g.index = 0;
  }
  return std::pair{g, rule->coef};
}

int parity_of(const OperatorPolynomial& p) {
  int parity = -1;
  for (const auto& [op, c] : p) {
    if (parity >= 0 && parity != op.parity())
      throw invalid_argument("operator polynomial mixes Grassmann parities");
    parity = op.parity();
  }
  return parity < 0 ? 0 : parity;
}

}  // namespace

OperatorPolynomial apply_free_brst(const Theory& theory, const CompositeOperator& op) {
  if (!theory.declares_brst())
    throw invalid_argument("theory '" + theory.name() + "' declares no BRST transformation");
  OperatorPolynomial out;
  const auto& fs = op.factors();
  int odd_before = 0;
  for (std::size_t i = 0; i < fs.size(); ++i) {
    if (auto image = brst_factor(theory, fs[i])) {
      auto factors = fs;
      factors[i] = image->first;
      auto cf = canonicalize(theory, std::move(factors));
      if (!cf.zero) add_term(out, cf.op, image->second * cf.sign * ((odd_before % 2) ? -1 : 1));
    }
    odd_before += factor_parity(theory, fs[i]);
  }
  return out;
}

OperatorPolynomial apply_free_brst(const Theory& theory, const OperatorPolynomial& p) {
  OperatorPolynomial out;
  for (const auto& [op, c] : p)
    for (const auto& [img, m] : apply_free_brst(theory, op)) add_term(out, img, c * m);
  return out;
}

ExactMatrix free_q_matrix(const Theory& theory, const OperatorBasis& basis) {
  ExactMatrix q;
  std::set<CompositeOperator> rows(basis.operators.begin(), basis.operators.end());
  // rows for the images too, so that Q_0^2 is complete on the basis rows
  for (const auto& a : basis.operators)
    for (const auto& [b, c] : apply_free_brst(theory, a)) rows.insert(b);
  for (const auto& a : rows)
    for (const auto& [b, c] : apply_free_brst(theory, a)) q[{a, b}] = c;
  return q;
}

ExactMatrix square_nonzero(const ExactMatrix& q) {
  ExactMatrix sq;
  for (const auto& [ab, x] : q) {
    const auto& [a, b] = ab;
    for (auto it = q.lower_bound({b, CompositeOperator{}}); it != q.end() && it->first.first == b; ++it) {
      auto& slot = sq[{a, it->first.second}];
      slot += x * it->second;
    }
  }
  for (auto it = sq.begin(); it != sq.end();) it = is_zero(it->second) ? sq.erase(it) : std::next(it);
  return sq;
}

QMatrix to_q_matrix(const ExactMatrix& q) {
  QMatrix out;
  for (const auto& [ab, x] : q) out.set({0, 0}, ab.first, ab.second, to_double(x));
  return out;
}

std::vector<std::pair<CompositeOperator, Rational>> brst_preimages(const Theory& theory,
                                                                    const CompositeOperator& b) {
  std::set<CompositeOperator> candidates;
  const auto& fs = b.factors();
  for (std::size_t i = 0; i < fs.size(); ++i) {
    for (const auto& rule : theory.brst_rules()) {
      if (rule.target != fs[i].field) continue;
      const auto& src = theory.field(rule.source);
      std::vector<Factor> origins;
      if (rule.shape == BrstShape::derivative_along_index) {
        for (int mu = 0; mu < kDim; ++mu) {
          if (fs[i].deriv.c[static_cast<std::size_t>(mu)] == 0) continue;
          Factor f{static_cast<std::uint8_t>(rule.source), static_cast<std::uint8_t>(mu),
                   fs[i].deriv - MultiIndex::unit(mu)};
          origins.push_back(f);
        }
      } else {
        const int n = src.lorentz_arity ? kDim : 1;
        for (int idx = 0; idx < n; ++idx)
          origins.push_back({static_cast<std::uint8_t>(rule.source), static_cast<std::uint8_t>(idx), fs[i].deriv});
      }
      for (const auto& f : origins) {
        auto factors = fs;
        factors[i] = f;
        auto cf = canonicalize(theory, std::move(factors));
        if (!cf.zero) candidates.insert(cf.op);
      }
    }
  }
  std::vector<std::pair<CompositeOperator, Rational>> out;
  for (const auto& c : candidates) {
    auto img = apply_free_brst(theory, c);
    if (auto it = img.find(b); it != img.end()) out.emplace_back(c, it->second);
  }
  return out;
}

SymbolicCoefficient ward_residual(const Theory& theory, const std::vector<OperatorPolynomial>& a,
                                  const CompositeOperator& b, const Rational& d) {
  if (a.empty()) throw invalid_argument("need at least one operator");
  if (!(d > b.dimension() - 1)) throw domain_violation("K^B_{A;D} needs D > [B] - 1");
  const int s = static_cast<int>(a.size());
  SymbolicCoefficient k(s, s - 1);
  int odd_before = 0;
  for (int i = 0; i < s; ++i) {
    auto swapped = a;
    swapped[static_cast<std::size_t>(i)] = apply_free_brst(theory, a[static_cast<std::size_t>(i)]);
    if (!swapped[static_cast<std::size_t>(i)].empty()) {
      auto term = free_ope_coefficient(theory, swapped, b);
      if (odd_before % 2) term *= Rational(-1);
      k += term;
    }
    odd_before += parity_of(a[static_cast<std::size_t>(i)]);
  }
  for (const auto& [c, qcb] : brst_preimages(theory, b)) {
    if (!(c.dimension() < d)) continue;
    auto term = free_ope_coefficient(theory, a, c);
    term *= qcb;
    k -= term;
  }
  return k;
}

std::map<CompositeOperator, SymbolicCoefficient> ward_residuals(
    const Theory& theory, const std::vector<OperatorPolynomial>& a, const Rational& d_max) {
  if (a.empty()) throw invalid_argument("need at least one operator");
  const int s = static_cast<int>(a.size());
  std::map<CompositeOperator, SymbolicCoefficient> out;
  auto slot = [&](const CompositeOperator& b) -> SymbolicCoefficient& {
    return out.try_emplace(b, SymbolicCoefficient(s, s - 1)).first->second;
  };
  int odd_before = 0;
  for (int i = 0; i < s; ++i) {
    auto swapped = a;
    swapped[static_cast<std::size_t>(i)] = apply_free_brst(theory, a[static_cast<std::size_t>(i)]);
    if (!swapped[static_cast<std::size_t>(i)].empty())
      for (auto& [b, coef] : free_ope_expansion(theory, swapped, d_max)) {
        if (odd_before % 2) coef *= Rational(-1);
        slot(b) += coef;
      }
    odd_before += parity_of(a[static_cast<std::size_t>(i)]);
  }
  // Q_C^B pushed forward from every C in the plain expansion; s0 raises the
  // dimension by one, so all preimages of B with [B] <= d_max are present.
  for (const auto& [c, coef] : free_ope_expansion(theory, a, d_max))
    for (const auto& [b, qcb] : apply_free_brst(theory, c)) {
      if (b.dimension() > d_max) continue;
      auto term = coef;
      term *= qcb;
      slot(b) -= term;
    }
  for (auto it = out.begin(); it != out.end();)
    it = it->first.dimension() > d_max ? out.erase(it) : std::next(it);
  return out;
}

CoefficientProvider free_coefficient_provider(const Theory& theory, double mu) {
  struct Memo {
    std::shared_mutex mutex;
    std::map<std::pair<std::vector<CompositeOperator>, CompositeOperator>, CompiledCoefficient> forms;
  };
  auto memo = std::make_shared<Memo>();
  return [theory, mu, memo](const std::vector<CompositeOperator>& a, const CompositeOperator& b,
                            const std::vector<Vec4>& x) {
    std::pair key{a, b};
    {
      std::shared_lock lock(memo->mutex);
      if (auto it = memo->forms.find(key); it != memo->forms.end()) return it->second(x, mu);
    }
    CompiledCoefficient compiled(free_ope_coefficient(theory, a, b));
    std::unique_lock lock(memo->mutex);
    auto it = memo->forms.emplace(std::move(key), std::move(compiled)).first;
    return it->second(x, mu);
  };
}

WardValue evaluate_K(const Theory& theory, const CompositeOperator& b,
                     const std::vector<CompositeOperator>& a, const Rational& d,
                     const std::vector<Vec4>& x, const CoefficientProvider& coefficients,
                     const QMatrix& q, const BMatrix& bm, const OperatorBasis& basis) {
  (void)theory;
  if (a.size() != x.size()) throw invalid_argument("need one point per operator");
  if (!(d > b.dimension() - 1)) throw domain_violation("K^B_{A;D} needs D > [B] - 1");
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      Vec4 diff;
      for (int c = 0; c < kDim; ++c) diff[c] = x[i][c] - x[j][c];
      if (norm(diff) == 0) throw singular_input("K is evaluated at pairwise distinct points only");
    }
  if (!coefficients) throw missing_layer("no OPE coefficients supplied");

  WardValue out;
  int odd_before = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double sign = (odd_before % 2) ? -1.0 : 1.0;
    for (const auto& [c, qv] : q.row(a[k], 1)) {
      if (c.dimension() > a[k].dimension() + 1) continue;
      auto swapped = a;
      swapped[k] = c;
      out.value += sign * qv * coefficients(swapped, b, x);
    }
    odd_before += a[k].parity();
  }
  const auto into_b = q.column(b, 1);
  for (const auto& c : basis.operators) {
    if (!(c.dimension() < d)) continue;
    if (auto it = into_b.find(c); it != into_b.end()) out.value -= it->second * coefficients(a, c, x);
  }
  for (const auto& [g, entries] : bm.full())
    for (const auto& [key, v] : entries)
      for (std::size_t k = 0; k < a.size(); ++k)
        for (std::size_t l = k + 1; l < a.size(); ++l)
          if (key.a == a[k] && key.b == a[l])
            out.contact_terms.push_back({static_cast<int>(k), static_cast<int>(l), key.c, key.w, v});
  return out;
}

namespace {

// probabilists' Hermite polynomial He_n
double hermite_he(int n, double t) {
  double h0 = 1, h1 = t;
  if (n == 0) return h0;
  for (int k = 1; k < n; ++k) {
    const double h2 = t * h1 - k * h0;
    h0 = h1;
    h1 = h2;
  }
  return h1;
}

}  // namespace

double smeared_contact(const std::vector<ContactTerm>& terms,
                       const std::function<double(const ContactTerm&)>& coefficient_at_xk,
                       const Vec4& shift, double sigma) {
  if (!(sigma > 0)) throw invalid_argument("test function width must be positive");
  constexpr double pi = 3.14159265358979323846;
  // h(y) = exp(-|y - c|^2 / 2 sigma^2) / (2 pi sigma^2)^2 with c = x_k + shift,
  // and d^w h evaluated at y = x_k, i.e. at t = -shift.
  double total = 0;
  for (const auto& term : terms) {
    double dh = 1.0 / ((2 * pi * sigma * sigma) * (2 * pi * sigma * sigma));
    for (int axis = 0; axis < kDim; ++axis) {
      const int n = term.w.c[static_cast<std::size_t>(axis)];
      const double t = -shift[axis] / sigma;
      dh *= std::pow(-1.0 / sigma, n) * hermite_he(n, t) * std::exp(-0.5 * t * t);
    }
    total -= term.coefficient * coefficient_at_xk(term) * dh;
  }
  return total;
}

}  // namespace ope
