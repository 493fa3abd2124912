#include "ope/analysis.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <limits>

#include "ope/error.hpp"
#include "ope/symbolic.hpp"
#include "ope/wick.hpp"

namespace ope {

std::vector<double> tau_grid(const ScalingGrid& grid) {
  if (grid.points < 6 || grid.fit_points < 6 || grid.fit_points > grid.points)
    throw invalid_argument("scaling fit needs at least 6 points");
  if (!(grid.tau_min > 0 && grid.tau_min < 1)) throw invalid_argument("need 0 < tau_min < 1");
  std::vector<double> tau(static_cast<std::size_t>(grid.points));
  for (int i = 0; i < grid.points; ++i)
    tau[static_cast<std::size_t>(i)] = std::pow(grid.tau_min, static_cast<double>(i) / (grid.points - 1));
  return tau;
}

ScalingFit scaling_degree(const PointFunction& f, const std::vector<Vec4>& x, const ScalingGrid& grid) {
  if (x.empty()) throw invalid_argument("need at least one point");
  ScalingFit fit;
  fit.tau = tau_grid(grid);
  const Vec4& origin = x.back();
  for (double t : fit.tau) {
    auto scaled = x;
    for (auto& p : scaled)
      for (int a = 0; a < kDim; ++a) p[a] = origin[a] + t * (p[a] - origin[a]);
    fit.values.push_back(f(scaled));
  }
  // least squares over the smallest taus
  const std::size_t n = static_cast<std::size_t>(grid.fit_points);
  const std::size_t first = fit.tau.size() - n;
  std::vector<double> lx, ly;
  for (std::size_t i = first; i < fit.tau.size(); ++i) {
    const double v = std::abs(fit.values[i]);
    if (!(v > std::numeric_limits<double>::min()) || !std::isfinite(v)) {
      fit.underflow = true;
      continue;
    }
    lx.push_back(std::log(fit.tau[i]));
    ly.push_back(std::log(v));
  }
  if (lx.size() < 3) {
    fit.underflow = true;
    return fit;
  }
  const double m = static_cast<double>(lx.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sx += lx[i];
    sy += ly[i];
  }
  const double mx = sx / m, my = sy / m;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  fit.slope = sxy / sxx;
  double rss = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double r = ly[i] - (my + fit.slope * (lx[i] - mx));
    rss += r * r;
  }
  fit.stderr_slope = std::sqrt(rss / (m - 2) / sxx);
  const boost::math::students_t dist(m - 2);
  const double t = boost::math::quantile(boost::math::complement(dist, 0.025));
  fit.ci_low = fit.slope - t * fit.stderr_slope;
  fit.ci_high = fit.slope + t * fit.stderr_slope;
  return fit;
}

AssociativityResult check_associativity(const Theory& theory, const CompositeOperator& a1,
                                        const CompositeOperator& a2, const CompositeOperator& a3,
                                        const CompositeOperator& b, const Vec4& x1, const Vec4& x2,
                                        const Vec4& x3, const Rational& d_trunc, double mu) {
  auto dist = [](const Vec4& p, const Vec4& q) {
    Vec4 d;
    for (int a = 0; a < kDim; ++a) d[a] = p[a] - q[a];
    return norm(d);
  };
  if (!(dist(x1, x2) < dist(x3, x2)))
    throw domain_violation("associativity needs |x1 - x2| < |x3 - x2|");
  AssociativityResult out;
  out.lhs = evaluate(free_ope_coefficient(theory, {a1, a2, a3}, b), {x1, x2, x3}, mu);
  for (const auto& [c, inner] : free_ope_expansion(theory, {a1, a2}, d_trunc)) {
    auto outer = free_ope_coefficient(theory, {c, a3}, b);
    if (outer.is_zero() || inner.is_zero()) continue;
    out.rhs += evaluate(inner, {x1, x2}, mu) * evaluate(outer, {x2, x3}, mu);
    ++out.terms;
  }
  out.residual = std::abs(out.lhs - out.rhs) / std::max({std::abs(out.lhs), std::abs(out.rhs), 1e-30});
  return out;
}

}  // namespace ope
