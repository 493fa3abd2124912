#include "ope/covariance.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <vector>

#include "ope/error.hpp"

namespace ope {

double norm2(const Vec4& x) { return x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3]; }
double norm(const Vec4& x) { return std::sqrt(norm2(x)); }

Vec4 operator-(const Vec4& a, const Vec4& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]};
}
Vec4 operator+(const Vec4& a, const Vec4& b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]};
}
Vec4 operator*(double t, const Vec4& a) { return {t * a[0], t * a[1], t * a[2], t * a[3]}; }

double regulator(double p2, double lambda) {
  if (lambda == 0.0) return 0.0;
  if (std::isinf(lambda)) return 1.0;
  return std::exp(-p2 / (lambda * lambda));
}

namespace {

constexpr double kFourPi2 = 4.0 * std::numbers::pi * std::numbers::pi;

double check_point(const Vec4& x, double mu) {
  const double s = norm2(x);
  if (s == 0.0) throw singular_input("covariance evaluated at coincident points");
  if (!(mu >= 0.0)) throw invalid_argument("mu must be >= 0");
  return s;
}

// d^u h(x^2) = sum_k P_k(x) h^(k)(x^2) with integer polynomials P_k.
struct Poly {
  std::vector<std::pair<MultiIndex, std::int64_t>> terms;
};
using Expansion = std::vector<Poly>;  // index k

class ExpansionCache {
 public:
  const Expansion& get(const MultiIndex& u) {
    std::lock_guard lock(mu_);
    return build(u);
  }

 private:
  const Expansion& build(const MultiIndex& u) {
    if (auto it = cache_.find(u); it != cache_.end()) return it->second;
    Expansion out;
    if (u.is_zero()) {
      out.push_back(Poly{{{MultiIndex{}, 1}}});
    } else {
      int axis = 0;
      while (u.c[axis] == 0) ++axis;
      const Expansion prev = build(u - MultiIndex::unit(axis));
      std::vector<std::map<MultiIndex, std::int64_t>> acc(prev.size() + 1);
      for (std::size_t k = 0; k < prev.size(); ++k)
        for (const auto& [e, c] : prev[k].terms) {
          if (e.c[axis] > 0) {
            MultiIndex d = e;
            d.c[axis] -= 1;
            acc[k][d] += c * e.c[axis];
          }
          acc[k + 1][e + MultiIndex::unit(axis)] += 2 * c;
        }
      for (auto& m : acc) {
        Poly p;
        for (const auto& [e, c] : m)
          if (c != 0) p.terms.emplace_back(e, c);
        out.push_back(std::move(p));
      }
    }
    return cache_.emplace(u, std::move(out)).first->second;
  }

  std::mutex mu_;
  std::map<MultiIndex, Expansion> cache_;
};

ExpansionCache& cache() {
  static ExpansionCache c;
  return c;
}

// h^(k)(s) for h(s) = exp(-a s)/(4 pi^2 s)
double h_deriv(int k, double s, double a) {
  double sum = 0.0;
  double binom = 1.0;
  double jfact = 1.0;
  for (int j = 0; j <= k; ++j) {
    if (j > 0) {
      binom = binom * (k - j + 1) / j;
      jfact *= j;
    }
    const double sign = (j % 2) ? -1.0 : 1.0;
    sum += binom * std::pow(-a, k - j) * sign * jfact * std::pow(s, -1.0 - j);
  }
  return std::exp(-a * s) * sum / kFourPi2;
}

}  // namespace

double eval_covariance(const Vec4& x, double mu) {
  const double s = check_point(x, mu);
  return std::exp(-0.25 * mu * mu * s) / (kFourPi2 * s);
}

double eval_covariance_deriv(const MultiIndex& u, const Vec4& x, double mu,
                             const CovarianceOptions& opts) {
  const double s = check_point(x, mu);
  const int n = u.order();
  if (n > opts.max_order)
    throw invalid_argument("derivative order " + std::to_string(n) + " exceeds max " +
                           std::to_string(opts.max_order));
  const Expansion& ex = cache().get(u);
  const double a = 0.25 * mu * mu;

  std::array<std::array<double, 32>, kDim> pw{};
  for (int d = 0; d < kDim; ++d) {
    pw[d][0] = 1.0;
    for (int e = 1; e <= n && e < 32; ++e) pw[d][e] = pw[d][e - 1] * x[d];
  }
  double total = 0.0;
  for (std::size_t k = 0; k < ex.size(); ++k) {
    if (ex[k].terms.empty()) continue;
    double poly = 0.0;
    for (const auto& [e, c] : ex[k].terms)
      poly += static_cast<double>(c) * pw[0][e.c[0]] * pw[1][e.c[1]] * pw[2][e.c[2]] * pw[3][e.c[3]];
    total += poly * h_deriv(static_cast<int>(k), s, a);
  }
  return total;
}

double covariance_deriv_bound(int order, double x2, double mu, double delta) {
  const double e = order + delta;
  return std::pow(4.0 / x2, e / 2.0 + 1.0) * std::tgamma(e + 1.0) /
         (kFourPi2 * std::pow(mu, delta));
}

namespace {

// Block structure without the scalar regulator factor; p = 0 drops the
// longitudinal term (it multiplies a finite limit there).
MomentumCovariance block_matrix(const Vec4& p, double xi) {
  if (!(xi > 0.0)) throw invalid_argument("gauge parameter xi must be > 0");
  MomentumCovariance m = MomentumCovariance::Zero();
  const double p2 = norm2(p);
  for (int i = 0; i < kDim; ++i) {
    m(i, i) = 1.0;
    if (p2 > 0.0)
      for (int j = 0; j < kDim; ++j) m(i, j) += (1.0 / xi - 1.0) * p[i] * p[j] / p2;
  }
  m(4, 5) = -1.0;
  m(5, 4) = 1.0;
  m(6, 6) = p2;
  return m;
}

}  // namespace

MomentumCovariance covariance_matrix_momentum(const Vec4& p, double xi, double lambda,
                                              double lambda0, bool allow_zero) {
  if (lambda < 0.0 || lambda0 <= 0.0) throw invalid_argument("cutoffs must be >= 0");
  if (lambda > lambda0) throw domain_violation("Lambda must not exceed Lambda0");
  if (lambda == lambda0) {
    if (!allow_zero) throw invalid_argument("degenerate cutoff: Lambda == Lambda0");
    if (!(xi > 0.0)) throw invalid_argument("gauge parameter xi must be > 0");
    return MomentumCovariance::Zero();
  }
  const double p2 = norm2(p);
  double factor;
  if (p2 == 0.0) {
    if (lambda == 0.0) throw singular_input("p = 0 with Lambda = 0");
    factor = 1.0 / (lambda * lambda) - (std::isinf(lambda0) ? 0.0 : 1.0 / (lambda0 * lambda0));
  } else {
    factor = (regulator(p2, lambda0) - regulator(p2, lambda)) / p2;
  }
  return block_matrix(p, xi) * factor;
}

MomentumCovariance covariance_matrix_momentum_dlambda(const Vec4& p, double xi, double lambda) {
  if (!(lambda > 0.0) || std::isinf(lambda)) throw invalid_argument("Lambda must be finite and > 0");
  const double p2 = norm2(p);
  const double factor = -2.0 / (lambda * lambda * lambda) * std::exp(-p2 / (lambda * lambda));
  return block_matrix(p, xi) * factor;
}

}  // namespace ope
