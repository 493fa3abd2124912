#pragma once

// Independent reference computations for the unit and acceptance tests. None
// of them call into the Wick engine or the quadrature of the core library.

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/hermite.hpp>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <utility>
#include <vector>

#include "ope/covariance.hpp"
#include "ope/operator.hpp"
#include "ope/symbolic.hpp"

namespace ope::oracle {

// Term-by-term form of a coefficient: (monomial, sorted atoms) -> prefactor.
using TermMap = std::map<std::pair<Monomial, std::vector<FAtom>>, Rational>;

inline TermMap term_map(const SymbolicCoefficient& c) {
  TermMap out;
  for (const auto& t : c.canonical_terms()) {
    auto atoms = t.atoms;
    std::sort(atoms.begin(), atoms.end());
    auto& slot = out[{t.mono, atoms}];
    slot += t.coef;
    if (is_zero(slot)) out.erase({t.mono, atoms});
  }
  return out;
}

// Free scalar OPE coefficient C^B_{A1 A2} by brute force: every partial perfect
// matching of the factors with cross-vertex pairs only, then each leftover
// factor of A1 Taylor-expanded about x2 and the product projected onto B as a
// commutative polynomial. Scalar fields only, so there are no signs.
inline TermMap brute_force_pair(const CompositeOperator& a1, const CompositeOperator& a2,
                                const CompositeOperator& b) {
  struct Slot {
    int vertex;
    MultiIndex d;
  };
  std::vector<Slot> slots;
  for (const auto& f : a1.factors()) slots.push_back({0, f.deriv});
  for (const auto& f : a2.factors()) slots.push_back({1, f.deriv});
  std::vector<MultiIndex> target;
  for (const auto& f : b.factors()) target.push_back(f.deriv);
  std::sort(target.begin(), target.end());
  const int n = static_cast<int>(slots.size());

  TermMap out;
  std::vector<int> partner(static_cast<std::size_t>(n), -2);  // -2 unset, -1 open

  // Leftover factors: pick a Taylor shift for each A1 factor so the multiset of
  // derivatives equals B's; the weight is prod 1/v! with monomial prod (x1-x2)^v.
  auto project = [&](std::vector<FAtom> atoms, Rational sign) {
    std::vector<int> open;
    for (int i = 0; i < n; ++i)
      if (partner[static_cast<std::size_t>(i)] == -1) open.push_back(i);
    if (open.size() != target.size()) return;
    std::sort(atoms.begin(), atoms.end());
    int max_shift = 0;
    for (const auto& t : target) max_shift = std::max(max_shift, t.order());
    std::vector<MultiIndex> shifts(open.size());
    std::function<void(std::size_t)> rec = [&](std::size_t k) {
      if (k == open.size()) {
        std::vector<MultiIndex> got;
        MultiIndex total;
        Rational w(1);
        for (std::size_t j = 0; j < open.size(); ++j) {
          got.push_back(slots[static_cast<std::size_t>(open[j])].d + shifts[j]);
          total = total + shifts[j];
          w /= Rational(shifts[j].factorial_int());
        }
        std::sort(got.begin(), got.end());
        if (got != target) return;
        auto& slot = out[{Monomial::of(0, total), atoms}];
        slot += sign * w;
        if (is_zero(slot)) out.erase({Monomial::of(0, total), atoms});
        return;
      }
      const auto& s = slots[static_cast<std::size_t>(open[k])];
      if (s.vertex == 1) {
        shifts[k] = MultiIndex{};
        rec(k + 1);
        return;
      }
      for (const auto& v : multi_indices_up_to(max_shift)) {
        shifts[k] = v;
        rec(k + 1);
      }
    };
    rec(0);
  };

  // d^a_x1 d^b_x2 C(x1 - x2) = (-1)^{|b|} d^{a+b} C(x1 - x2).
  std::function<void(int, std::vector<FAtom>, Rational)> match = [&](int i, std::vector<FAtom> atoms,
                                                                     Rational sign) {
    while (i < n && partner[static_cast<std::size_t>(i)] != -2) ++i;
    if (i == n) {
      project(atoms, sign);
      return;
    }
    partner[static_cast<std::size_t>(i)] = -1;
    match(i + 1, atoms, sign);
    for (int j = i + 1; j < n; ++j) {
      if (partner[static_cast<std::size_t>(j)] != -2) continue;
      if (slots[static_cast<std::size_t>(i)].vertex == slots[static_cast<std::size_t>(j)].vertex) continue;
      const auto& lo = slots[static_cast<std::size_t>(i)].vertex == 0 ? slots[static_cast<std::size_t>(i)]
                                                                       : slots[static_cast<std::size_t>(j)];
      const auto& hi = slots[static_cast<std::size_t>(i)].vertex == 0 ? slots[static_cast<std::size_t>(j)]
                                                                       : slots[static_cast<std::size_t>(i)];
      partner[static_cast<std::size_t>(i)] = j;
      partner[static_cast<std::size_t>(j)] = i;
      auto next = atoms;
      next.push_back(FAtom{0, 1, lo.d + hi.d});
      match(i + 1, next, hi.d.order() % 2 ? -sign : sign);
      partner[static_cast<std::size_t>(j)] = -2;
    }
    partner[static_cast<std::size_t>(i)] = -2;
  };
  match(0, {}, Rational(1));
  return out;
}

// Number of perfect matchings of n factors at x1 with n factors at x2.
inline long long cross_matchings(int n) {
  long long f = 1;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

// Heat-kernel form C^{mu,inf}(x) = (16 pi^2)^-1 int_{mu^2}^inf exp(-t x^2/4) dt,
// differentiated under the integral with Hermite polynomials.
inline double heat_kernel_deriv(const MultiIndex& u, const Vec4& x, double mu) {
  const double x2 = norm2(x);
  auto integrand = [&](double t) {
    double v = std::exp(-t * x2 / 4);
    for (int a = 0; a < kDim; ++a) {
      const unsigned n = u.c[static_cast<std::size_t>(a)];
      if (n == 0) continue;
      // d^n/dx^n exp(-t x^2/4) = (-sqrt(t)/2)^n H_n(sqrt(t) x / 2) exp(-t x^2/4)
      v *= std::pow(-std::sqrt(t) / 2, n) * boost::math::hermite(n, std::sqrt(t) * x[static_cast<std::size_t>(a)] / 2);
    }
    return v;
  };
  const double scale = 4 / x2;
  double err = 0;
  const double head = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      integrand, mu * mu, mu * mu + 40 * scale, 15, 1e-13, &err);
  const double tail = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      integrand, mu * mu + 40 * scale, std::numeric_limits<double>::infinity(), 15, 1e-13, &err);
  return (head + tail) / (16 * std::numbers::pi * std::numbers::pi);
}

// Central difference of order |u| of a smooth function of x, step h.
inline double finite_difference(const std::function<double(const Vec4&)>& f, const MultiIndex& u,
                                const Vec4& x, double h) {
  for (int a = 0; a < kDim; ++a) {
    if (u.c[static_cast<std::size_t>(a)] == 0) continue;
    MultiIndex rest = u;
    rest.c[static_cast<std::size_t>(a)] -= 1;
    Vec4 xp = x, xm = x;
    xp[static_cast<std::size_t>(a)] += h;
    xm[static_cast<std::size_t>(a)] -= h;
    return (finite_difference(f, rest, xp, h) - finite_difference(f, rest, xm, h)) / (2 * h);
  }
  return f(x);
}

// int d^4y C(y - x) C(y) for the mu-regulated covariance. In heat-kernel form
// both propagators have proper time in (0, 1/mu^2), so the convolution is
// int_0^{2T} min(s, 2T - s) K_s(x) ds with K_s(x) = (4 pi s)^-2 exp(-x^2/4s).
inline double covariance_convolution(const Vec4& x, double mu) {
  const double big_t = 1 / (mu * mu);
  const double x2 = norm2(x);
  auto k = [&](double s) {
    if (s <= 0) return 0.0;
    return std::min(s, 2 * big_t - s) * std::exp(-x2 / (4 * s)) / std::pow(4 * std::numbers::pi * s, 2);
  };
  double err = 0;
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(k, 0.0, big_t, 20, 1e-13, &err) +
         boost::math::quadrature::gauss_kronrod<double, 61>::integrate(k, big_t, 2 * big_t, 20, 1e-13, &err);
}

}  // namespace ope::oracle
