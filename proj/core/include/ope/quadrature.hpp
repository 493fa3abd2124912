#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "ope/covariance.hpp"

namespace ope {

using Integrand4 = std::function<double(const Vec4&)>;

struct QuadratureOptions {
  double rel_tol = 1e-6;
  double abs_floor = 1e-300;
  double mu = 1.0;
  int uv_panels = 6;      // halving radial panels inside uv_radius
  int ir_panels = 10;     // log-spaced radial panels outside it, before the 1/r map
  int max_refinements = 14;
  int partition_power = 8;  // p in the partition weights |y - x_k|^-p
};

struct RegionReport {
  std::string name;
  double value = 0;
  double error = 0;
  bool converged = false;
  std::array<double, 2> last_values{};
  int radial_order = 0;
  int angular_order = 0;
  std::size_t evaluations = 0;
};

struct QuadratureResult {
  double value = 0;
  double error = 0;
  bool converged = true;
  std::string worst_region;
  std::array<double, 2> last_values{};
  std::vector<RegionReport> regions;
  std::size_t evaluations = 0;
};

// Radius of the UV balls: half the minimal pairwise distance (1/mu for one point).
double uv_radius(const std::vector<Vec4>& centers, double mu);

// 0 for the IR region, k >= 1 when y lies in the closed ball of radius
// uv_radius around centers[k-1]. The balls are pairwise disjoint except for
// touching boundaries; ties on a boundary go to the lower k.
int classify_region(const Vec4& y, const std::vector<Vec4>& centers, double mu);

// Integral of f over R^4 for f singular (but integrable) only at the centers.
// f is split as sum_k w_k f with w_k = |y - x_k|^-p / sum_j |y - x_j|^-p; piece
// k is integrated in spherical coordinates around x_k, with panels halving
// towards x_k inside uv_radius, log-spaced panels outside and r -> 1/r beyond
// the last one. w_k vanishes like |y - x_j|^p at the other centers. A term
// P(y)/|y - x_j|^(2m) of degree -d becomes homogeneous of degree p - d there,
// which is smooth only for p >= 2m; a low p - d leaves a kink the Gauss
// refinement neither resolves nor notices (p = 4 against d = 3 gave a stable
// bias of 1e-6 on an exactly vanishing integral). Each radial panel refines
// its radial and angular Gauss orders independently.
QuadratureResult integrate_r4(const Integrand4& f, const std::vector<Vec4>& centers,
                              const QuadratureOptions& opts = {});

// Integral of f over |y - center| > radius (same outer machinery).
QuadratureResult integrate_outside(const Integrand4& f, const Vec4& center, double radius,
                                   const QuadratureOptions& opts = {});

// Angular mean of |f| on the sphere of radius r around center.
double sphere_mean_abs(const Integrand4& f, const Vec4& center, double r, int order = 8);

// Gauss-Legendre nodes/weights on [-1, 1] (cached).
const std::pair<std::vector<double>, std::vector<double>>& gauss_legendre(int n);

}  // namespace ope
