#include "ope/trees.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>

#include "ope/error.hpp"

namespace ope {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_size(std::size_t n) {
  if (n > static_cast<std::size_t>(kMaxSubsetMomenta))
    throw size_guard("subset scan over " + std::to_string(n) + " momenta exceeds " +
                     std::to_string(kMaxSubsetMomenta));
}

Vec4 sum_of(const std::vector<Vec4>& q, std::uint32_t mask) {
  Vec4 s{};
  for (std::size_t i = 0; i < q.size(); ++i)
    if (mask & (1u << i))
      for (int a = 0; a < kDim; ++a) s[a] += q[i][a];
  return s;
}

// inf over subsets Q of `allowed` (bitmask, excluding i) of |q_i + sum Q|
double eta_scan(const std::vector<Vec4>& q, std::size_t i, std::uint32_t allowed) {
  allowed &= ~(1u << i);
  double best = kInf;
  // enumerate submasks of `allowed`, including the empty one
  for (std::uint32_t m = allowed;; m = (m - 1) & allowed) {
    best = std::min(best, norm(sum_of(q, m | (1u << i))));
    if (m == 0) break;
  }
  return best;
}

double sup_log(double a, double b) { return std::log(std::max(a, b)); }

// e * log(base), with 0 * log(0) = 0
double power_log(double e, double log_base) { return e == 0.0 ? 0.0 : e * log_base; }

}  // namespace

double Kinematics::abs_sup() const {
  check_size(q.size());
  double best = 0;
  const std::uint32_t n = static_cast<std::uint32_t>(q.size());
  for (std::uint32_t m = 0; m < (1u << n); ++m) best = std::max(best, norm(sum_of(q, m)));
  return best;
}

double Kinematics::eta_i(std::size_t i) const {
  check_size(q.size());
  if (i >= q.size()) throw invalid_argument("momentum index out of range");
  if (q.size() == 1) return norm(q[0]);
  const std::uint32_t allowed = (1u << (q.size() - 1)) - 1;  // q_1..q_{n-1}
  return eta_scan(q, i, allowed);
}

double Kinematics::eta() const {
  if (q.empty()) return 0;
  if (q.size() == 1) return norm(q[0]);
  double best = kInf;
  for (std::size_t i = 0; i + 1 < q.size(); ++i) best = std::min(best, eta_i(i));
  return best;
}

double Kinematics::bar_eta_i(std::size_t i) const {
  check_size(q.size());
  if (i >= q.size()) throw invalid_argument("momentum index out of range");
  const std::uint32_t allowed = (1u << q.size()) - 1;
  return eta_scan(q, i, allowed);
}

double Kinematics::bar_eta() const {
  if (q.empty()) return mu;
  double best = kInf;
  for (std::size_t i = 0; i < q.size(); ++i) best = std::min(best, bar_eta_i(i));
  return best;
}

int WeightedTree::add_vertex(VertexKind k, double dim, MultiIndex w) {
  vertices.push_back({k, dim, w});
  return static_cast<int>(vertices.size()) - 1;
}

void WeightedTree::connect(int a, int b) { lines.emplace_back(a, b); }

bool WeightedTree::has_special() const { return special() >= 0; }

int WeightedTree::special() const {
  for (std::size_t v = 0; v < vertices.size(); ++v)
    if (vertices[v].kind == VertexKind::special) return static_cast<int>(v);
  return -1;
}

std::vector<int> WeightedTree::externals() const {
  std::vector<int> out;
  for (std::size_t v = 0; v < vertices.size(); ++v)
    if (vertices[v].kind == VertexKind::external) out.push_back(static_cast<int>(v));
  return out;
}

int WeightedTree::valence(int v) const {
  int k = 0;
  for (const auto& [a, b] : lines) k += (a == v) + (b == v);
  return k;
}

std::vector<int> WeightedTree::neighbours(int v) const {
  std::vector<int> out;
  for (const auto& [a, b] : lines) {
    if (a == v) out.push_back(b);
    if (b == v) out.push_back(a);
  }
  return out;
}

int WeightedTree::total_w() const {
  int s = 0;
  for (const auto& v : vertices)
    if (v.kind == VertexKind::external) s += v.w.order();
  return s;
}

std::optional<std::string> WeightedTree::validate() const {
  const int n = static_cast<int>(vertices.size());
  int specials = 0, internals = 0, ext = 0;
  for (const auto& v : vertices) {
    specials += v.kind == VertexKind::special;
    internals += v.kind == VertexKind::internal;
    ext += v.kind == VertexKind::external;
  }
  if (specials > 1) return "more than one special vertex";
  if (specials == 0 && (ext < 1 || internals < 1))
    return "a tree without special vertex needs an external and an internal vertex";
  if (n == 0) return "empty tree";
  if (static_cast<int>(lines.size()) != n - 1) return "line count is not vertex count - 1";
  for (const auto& [a, b] : lines) {
    if (a < 0 || b < 0 || a >= n || b >= n) return "line endpoint out of range";
    if (a == b) return "self loop";
  }
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int reached = 1;
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    for (int u : neighbours(v))
      if (!seen[static_cast<std::size_t>(u)]) {
        seen[static_cast<std::size_t>(u)] = 1;
        ++reached;
        stack.push_back(u);
      }
  }
  if (reached != n) return "not connected";
  for (int v = 0; v < n; ++v) {
    const auto& vx = vertices[static_cast<std::size_t>(v)];
    const int k = valence(v);
    if (vx.kind == VertexKind::external) {
      if (k != 1) return "external vertex " + std::to_string(v) + " has valence " + std::to_string(k);
      if (vertices[static_cast<std::size_t>(neighbours(v)[0])].kind == VertexKind::external)
        return "external vertices " + std::to_string(v) + " joined directly";
      if (vx.dim < 1 || vx.dim > 3) return "external dimension outside [1,3]";
    } else if (vx.kind == VertexKind::internal) {
      if (k < 1 || k > 4) return "internal vertex " + std::to_string(v) + " has valence " + std::to_string(k);
    }
  }
  if (specials == 0) {
    auto e = externals();
    if (!vertices[static_cast<std::size_t>(e.back())].w.is_zero())
      return "last external vertex carries derivatives in a momentum-conserving tree";
  }
  return std::nullopt;
}

std::vector<double> line_momenta(const WeightedTree& t, const std::vector<Vec4>& q) {
  const auto ext = t.externals();
  if (q.size() != ext.size()) throw invalid_argument("one momentum per external vertex required");
  const int sp = t.special();
  if (sp < 0) {
    Vec4 total{};
    double scale = 1;
    for (const auto& p : q) {
      for (int a = 0; a < kDim; ++a) total[a] += p[a];
      scale = std::max(scale, norm(p));
    }
    if (norm(total) > 1e-9 * scale)
      throw domain_violation("momenta of a tree without special vertex must sum to zero");
  }
  std::vector<int> ext_pos(t.vertices.size(), -1);
  for (std::size_t i = 0; i < ext.size(); ++i) ext_pos[static_cast<std::size_t>(ext[i])] = static_cast<int>(i);

  std::vector<double> out;
  out.reserve(t.lines.size());
  for (std::size_t l = 0; l < t.lines.size(); ++l) {
    auto [a, b] = t.lines[l];
    // component of b with line l removed
    std::vector<char> in(t.vertices.size(), 0);
    std::vector<int> stack{b};
    in[static_cast<std::size_t>(b)] = 1;
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      for (std::size_t m = 0; m < t.lines.size(); ++m) {
        if (m == l) continue;
        auto [c, d] = t.lines[m];
        int u = c == v ? d : (d == v ? c : -1);
        if (u >= 0 && !in[static_cast<std::size_t>(u)]) {
          in[static_cast<std::size_t>(u)] = 1;
          stack.push_back(u);
        }
      }
    }
    const bool flip = sp >= 0 && in[static_cast<std::size_t>(sp)];
    Vec4 s{};
    for (std::size_t v = 0; v < t.vertices.size(); ++v)
      if (ext_pos[v] >= 0 && (static_cast<bool>(in[v]) != flip))
        for (int c = 0; c < kDim; ++c) s[c] += q[static_cast<std::size_t>(ext_pos[v])][c];
    out.push_back(norm(s));
  }
  return out;
}

double log_weight_factor(const WeightedTree& t, const std::vector<Vec4>& q, double mu,
                         double lambda) {
  if (lambda < 0 || mu <= 0) throw invalid_argument("need lambda >= 0 and mu > 0");
  const auto lq = line_momenta(t, q);
  const auto ext = t.externals();
  double lg = 0;
  for (double m : lq) lg += power_log(-2, sup_log(m, lambda));

  for (std::size_t v = 0; v < t.vertices.size(); ++v) {
    const auto& vx = t.vertices[v];
    const int k = t.valence(static_cast<int>(v));
    if (vx.kind == VertexKind::external) {
      const auto e = static_cast<std::size_t>(std::find(ext.begin(), ext.end(), static_cast<int>(v)) - ext.begin());
      lg += power_log(3 - vx.dim, sup_log(norm(q[e]), lambda));
    } else if (vx.kind == VertexKind::internal) {
      // momentum of the largest incident line; ties give the same magnitude
      double m = 0;
      for (std::size_t l = 0; l < t.lines.size(); ++l)
        if (t.lines[l].first == static_cast<int>(v) || t.lines[l].second == static_cast<int>(v))
          m = std::max(m, lq[l]);
      lg += power_log(4 - k, sup_log(m, lambda));
    } else {
      lg += power_log(-k, sup_log(mu, lambda));
    }
  }

  Kinematics kin{q, mu};
  lg += power_log(t.v_p, std::log(std::max({kin.abs_sup(), mu, lambda})));
  const bool special = t.has_special();
  for (std::size_t i = 0; i < ext.size(); ++i) {
    const int w = t.vertices[static_cast<std::size_t>(ext[i])].w.order();
    if (w == 0) continue;
    const double e = special ? kin.bar_eta_i(i) : kin.eta_i(i);
    lg += power_log(-w, sup_log(e, lambda));
  }
  return lg;
}

double weight_factor(const WeightedTree& t, const std::vector<Vec4>& q, double mu, double lambda) {
  return std::exp(log_weight_factor(t, q, mu, lambda));
}

double tree_dimension(const WeightedTree& t) {
  double d = t.v_p - t.total_w();
  for (const auto& v : t.vertices)
    if (v.kind == VertexKind::external) d -= v.dim;
  return t.has_special() ? d : d + 4;
}

double tree_exponent_sum(const WeightedTree& t) {
  double d = t.v_p - t.total_w() - 2.0 * static_cast<double>(t.lines.size());
  for (std::size_t v = 0; v < t.vertices.size(); ++v) {
    const auto& vx = t.vertices[v];
    const int k = t.valence(static_cast<int>(v));
    if (vx.kind == VertexKind::external) d += 3 - vx.dim;
    else if (vx.kind == VertexKind::internal) d += 4 - k;
    else d -= k;
  }
  return d;
}

Relevance classify(const WeightedTree& t, double eps) {
  const double d = tree_dimension(t);
  if (d > eps) return Relevance::relevant;
  if (d < -eps) return Relevance::irrelevant;
  return Relevance::marginal;
}

namespace {

WeightedTree remove_vertex(const WeightedTree& t, int v) {
  WeightedTree out;
  out.v_p = t.v_p;
  for (std::size_t u = 0; u < t.vertices.size(); ++u)
    if (static_cast<int>(u) != v) out.vertices.push_back(t.vertices[u]);
  for (auto [a, b] : t.lines) {
    if (a == v || b == v) continue;
    out.lines.emplace_back(a > v ? a - 1 : a, b > v ? b - 1 : b);
  }
  return out;
}

}  // namespace

std::optional<WeightedTree> reduce_once(const WeightedTree& t) {
  auto kind = [&](int v) { return t.vertices[static_cast<std::size_t>(v)].kind; };
  for (std::size_t i = 0; i < t.vertices.size(); ++i) {
    const int v = static_cast<int>(i);
    if (kind(v) != VertexKind::internal) continue;
    const auto nb = t.neighbours(v);
    if (nb.size() == 2) {
      // fusing two external lines would join externals directly
      if (kind(nb[0]) == VertexKind::external && kind(nb[1]) == VertexKind::external) continue;
      auto out = remove_vertex(t, v);
      out.connect(nb[0] > v ? nb[0] - 1 : nb[0], nb[1] > v ? nb[1] - 1 : nb[1]);
      return out;
    }
    if (nb.size() == 1 && kind(nb[0]) != VertexKind::external) return remove_vertex(t, v);
  }
  return std::nullopt;
}

WeightedTree reduce(const WeightedTree& t) {
  WeightedTree cur = t;
  while (auto next = reduce_once(cur)) cur = std::move(*next);
  return cur;
}

bool fully_reduced(const WeightedTree& t) { return !reduce_once(t).has_value(); }

namespace {

double distance_of(const Vec4& a, const Vec4& b) {
  Vec4 d;
  for (int i = 0; i < kDim; ++i) d[i] = a[i] + b[i];
  return norm(d);
}

// Append t2 to t1 (vertex ids of t2 shifted), returning the shift.
int append(WeightedTree& t1, const WeightedTree& t2) {
  const int shift = static_cast<int>(t1.vertices.size());
  t1.vertices.insert(t1.vertices.end(), t2.vertices.begin(), t2.vertices.end());
  for (auto [a, b] : t2.lines) t1.lines.emplace_back(a + shift, b + shift);
  return shift;
}

}  // namespace

FusedTree fuse(const WeightedTree& t1, const std::vector<Vec4>& q1, const WeightedTree& t2,
               const std::vector<Vec4>& q2, FuseMode mode, int v1, int v2, int w_target) {
  const auto e1 = t1.externals();
  const auto e2 = t2.externals();
  if (q1.size() != e1.size() || q2.size() != e2.size())
    throw invalid_argument("one momentum per external vertex required");
  FusedTree out;
  if (mode == FuseMode::special_merge) {
    const int s1 = t1.special(), s2 = t2.special();
    if (s1 < 0 || s2 < 0) throw incompatible("special merge needs a special vertex in both trees");
    out.tree = t1;
    const int shift = append(out.tree, t2);
    const int merged = s2 + shift;
    for (auto& [a, b] : out.tree.lines) {
      if (a == merged) a = s1;
      if (b == merged) b = s1;
    }
    out.tree.vertices.erase(out.tree.vertices.begin() + merged);
    for (auto& [a, b] : out.tree.lines) {
      if (a > merged) --a;
      if (b > merged) --b;
    }
    out.tree.v_p = t1.v_p + t2.v_p;
    out.momenta = q1;
    out.momenta.insert(out.momenta.end(), q2.begin(), q2.end());
    return out;
  }

  if (t1.has_special() && t2.has_special())
    throw incompatible("line join needs at most one special vertex");
  if (!t1.has_special()) v1 = static_cast<int>(e1.size()) - 1;
  if (!t2.has_special()) v2 = 0;
  if (v1 < 0 || v1 >= static_cast<int>(e1.size()) || v2 < 0 || v2 >= static_cast<int>(e2.size()))
    throw incompatible("joined external vertex out of range");
  const double scale = std::max({1.0, norm(q1[static_cast<std::size_t>(v1)]), norm(q2[static_cast<std::size_t>(v2)])});
  if (distance_of(q1[static_cast<std::size_t>(v1)], q2[static_cast<std::size_t>(v2)]) > 1e-9 * scale)
    throw incompatible("joined external vertices carry momenta -k and k' with k != k'");
  const int x1 = e1[static_cast<std::size_t>(v1)];
  const int x2 = e2[static_cast<std::size_t>(v2)];
  if (!t1.vertices[static_cast<std::size_t>(x1)].w.is_zero())
    throw incompatible("the joined external vertex of the first tree carries derivatives");
  if (w_target == v1 || w_target < 0 || w_target >= static_cast<int>(e1.size()))
    throw incompatible("derivative target must be another external vertex of the first tree");

  out.divisor_exponent = t1.vertices[static_cast<std::size_t>(x1)].dim +
                         t2.vertices[static_cast<std::size_t>(x2)].dim - 4;
  out.join_momentum_index = v1;

  WeightedTree a = t1;
  auto& target = a.vertices[static_cast<std::size_t>(e1[static_cast<std::size_t>(w_target)])].w;
  target = target + t2.vertices[static_cast<std::size_t>(x2)].w;
  const int u1 = t1.neighbours(x1).at(0);
  const int u2 = t2.neighbours(x2).at(0);
  const int shift = append(a, t2);
  a.vertices[static_cast<std::size_t>(x2 + shift)].w = {};
  a.connect(u1, u2 + shift);
  // remove the two joined externals (higher id first)
  a = remove_vertex(a, x2 + shift);
  a = remove_vertex(a, x1);
  a.v_p = t1.v_p + t2.v_p;
  out.tree = std::move(a);
  for (std::size_t i = 0; i < q1.size(); ++i)
    if (static_cast<int>(i) != v1) out.momenta.push_back(q1[i]);
  for (std::size_t i = 0; i < q2.size(); ++i)
    if (static_cast<int>(i) != v2) out.momenta.push_back(q2[i]);
  return out;
}

WeightedTree amputate(const WeightedTree& t, int ext) {
  const auto e = t.externals();
  if (ext < 0 || ext >= static_cast<int>(e.size())) throw invalid_argument("external index out of range");
  return remove_vertex(t, e[static_cast<std::size_t>(ext)]);
}

double gs(int s, double dim, int r, int w_abs) {
  if (s < 1 || dim < 0 || r < 0) throw domain_violation("g^(s) needs s >= 1, [O] >= 0, r >= 0");
  return (dim + s) * (r + 3 * s - 3) + std::max(dim + s - w_abs, 0.0);
}

double xi(XiVariant v, const XiParams& params, const std::vector<Vec4>& x, double lambda,
          double lambda1, double mu) {
  if (!(lambda1 > 0 && lambda1 <= mu)) throw domain_violation("need 0 < Lambda_1 <= mu");
  if (params.rho < 0) throw domain_violation("need rho >= 0");
  if (x.size() < 2) throw invalid_argument("need at least two points");
  const std::size_t s = x.size();
  auto dist = [&](std::size_t i, std::size_t j) {
    Vec4 d;
    for (int a = 0; a < kDim; ++a) d[a] = x[i][a] - x[j][a];
    return norm(d);
  };
  double inf_d = kInf, sup_s = 0;
  for (std::size_t i = 0; i < s; ++i) {
    sup_s = std::max(sup_s, dist(i, s - 1));
    for (std::size_t j = i + 1; j < s; ++j) inf_d = std::min(inf_d, dist(i, j));
  }
  if (inf_d == 0) throw singular_input("coincident insertion points");

  auto xi1 = [&] {
    const double e = params.p_prime + params.rho;
    return std::pow(sup_s / inf_d, params.p) * std::pow(mu * inf_d, -e) * std::pow(mu / lambda1, e);
  };
  auto xi2 = [&] { return std::pow(std::max(1.0, mu * sup_s), params.p); };
  auto varxi1 = [&] {
    const auto sp = static_cast<std::size_t>(params.s_prime);
    if (sp < 1 || sp >= s) throw domain_violation("need 1 <= s' < s");
    const double e = params.p + params.rho;
    double best = 0;
    for (std::size_t k = 0; k < sp; ++k)
      for (std::size_t kp = sp; kp < s; ++kp) best = std::max(best, std::pow(mu * dist(k, kp), -e));
    return std::pow(mu / lambda1, e) * best;
  };

  switch (v) {
    case XiVariant::xi1: return xi1();
    case XiVariant::xi2: return xi2();
    case XiVariant::xi: return lambda >= lambda1 ? xi1() : std::max(xi1(), xi2());
    case XiVariant::varxi1: return varxi1();
    case XiVariant::varxi: return lambda >= lambda1 ? varxi1() : std::max(1.0, varxi1());
  }
  return 0;
}

std::vector<Vec4> random_momenta(std::mt19937_64& rng, int n, bool conserve) {
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unit;
  std::vector<Vec4> q(static_cast<std::size_t>(std::max(n, 0)));
  const int free = conserve ? n - 1 : n;
  for (int i = 0; i < free; ++i) {
    const double scale = std::pow(10.0, -2 + 4 * unit(rng));
    for (auto& c : q[static_cast<std::size_t>(i)]) c = scale * gauss(rng);
    if (i > 0 && unit(rng) < 0.15) {
      // nearly cancels an earlier momentum: an almost exceptional partial sum
      const auto j = static_cast<std::size_t>(std::uniform_int_distribution<int>(0, i - 1)(rng));
      for (int a = 0; a < kDim; ++a)
        q[static_cast<std::size_t>(i)][a] = -q[j][a] * (1 + 1e-3 * gauss(rng));
    }
  }
  if (conserve && n > 0) {
    Vec4 s{};
    for (int i = 0; i < n - 1; ++i)
      for (int a = 0; a < kDim; ++a) s[a] -= q[static_cast<std::size_t>(i)][a];
    q.back() = s;
  }
  return q;
}

namespace {

MultiIndex random_w(std::mt19937_64& rng, int max_w) {
  std::uniform_int_distribution<int> order(0, max_w), axis(0, kDim - 1);
  MultiIndex w;
  const int n = order(rng);
  for (int i = 0; i < n; ++i) ++w.c[static_cast<std::size_t>(axis(rng))];
  return w;
}

}  // namespace

TreeSample random_tree(std::mt19937_64& rng, const RandomTreeOptions& opts) {
  std::uniform_real_distribution<double> unit;
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  for (int attempt = 0; attempt < 10000; ++attempt) {
    WeightedTree t;
    const int r = pick(opts.special ? 0 : 1, opts.max_internal);
    const int e = pick(1, opts.max_external);
    std::vector<int> nodes;
    if (opts.special) nodes.push_back(t.add_vertex(VertexKind::special));
    for (int i = 0; i < r; ++i) nodes.push_back(t.add_vertex(VertexKind::internal));
    auto has_room = [&](int v) {
      return t.vertices[static_cast<std::size_t>(v)].kind == VertexKind::special || t.valence(v) < 4;
    };
    bool ok = true;
    for (std::size_t i = 1; i < nodes.size() && ok; ++i) {
      std::vector<int> room;
      for (std::size_t j = 0; j < i; ++j)
        if (has_room(nodes[j])) room.push_back(nodes[j]);
      if (room.empty()) ok = false;
      else t.connect(nodes[i], room[static_cast<std::size_t>(pick(0, static_cast<int>(room.size()) - 1))]);
    }
    static constexpr double dims[] = {1, 1.5, 2, 2.5, 3};
    for (int i = 0; i < e && ok; ++i) {
      std::vector<int> room;
      for (int v : nodes)
        if (has_room(v)) room.push_back(v);
      if (room.empty()) {
        ok = false;
        break;
      }
      const int host = room[static_cast<std::size_t>(pick(0, static_cast<int>(room.size()) - 1))];
      MultiIndex w = unit(rng) < 0.3 ? random_w(rng, opts.max_w) : MultiIndex{};
      const int v = t.add_vertex(VertexKind::external, dims[pick(0, 4)], w);
      t.connect(host, v);
    }
    if (!ok) continue;
    if (!opts.special) {
      auto ext = t.externals();
      t.vertices[static_cast<std::size_t>(ext.back())].w = {};
    }
    t.v_p = 0.5 * pick(opts.allow_negative_vp ? -6 : 0, 12);
    if (t.validate()) continue;
    auto q = random_momenta(rng, e, !opts.special);
    return {std::move(t), std::move(q)};
  }
  throw size_guard("random tree rejection sampling did not terminate");
}

namespace {

LemmaReport named(std::string name) {
  LemmaReport r;
  r.name = std::move(name);
  return r;
}

struct Tracker {
  LemmaReport report;
  double tol;

  // records log(lhs) <= log(rhs)
  void check(double log_lhs, double log_rhs, const std::function<std::string()>& describe) {
    ++report.samples;
    const double diff = log_lhs - log_rhs;
    report.worst_log_ratio = std::max(report.worst_log_ratio, diff);
    if (diff > tol * (1 + std::abs(log_lhs) + std::abs(log_rhs))) {
      if (report.violations++ == 0) report.counterexample = describe();
    }
  }
};

std::string describe_tree(const WeightedTree& t) {
  std::ostringstream os;
  os << "vertices=" << t.vertices.size() << " lines=" << t.lines.size() << " v_p=" << t.v_p
     << " [T]=" << tree_dimension(t) << " special=" << t.has_special();
  return os.str();
}

TreeSample reduced_sample(std::mt19937_64& rng, bool special,
                          const std::function<bool(const WeightedTree&)>& accept) {
  RandomTreeOptions o;
  o.special = special;
  for (int attempt = 0; attempt < 100000; ++attempt) {
    auto s = random_tree(rng, o);
    s.tree = reduce(s.tree);
    if (accept(s.tree)) return s;
  }
  throw size_guard("no tree accepted by the sampling condition");
}

double log_uniform(std::mt19937_64& rng, double lo_exp, double hi_exp) {
  return std::pow(10.0, std::uniform_real_distribution<double>(lo_exp, hi_exp)(rng));
}

}  // namespace

std::vector<LemmaReport> run_tree_lemmas(const LemmaOptions& opts) {
  std::vector<LemmaReport> out;
  const double mu = 1.0;
  std::uniform_real_distribution<double> unit;
  auto bern = [&](std::mt19937_64& rng) { return unit(rng) < 0.5; };

  {
    Tracker tr{named("irrelevant_scale_shift"), opts.log_tolerance};
    Tracker wide{named("irrelevant_scale_shift[sup(|q|,mu)]"), opts.log_tolerance};
    std::mt19937_64 rng(opts.seed + 1);
    for (std::size_t n = 0; n < opts.samples; ++n) {
      const bool special = bern(rng);
      auto s = reduced_sample(rng, special, [](const WeightedTree& t) { return tree_dimension(t) <= 0; });
      const double lam = log_uniform(rng, -3, 3);
      const double lam2 = lam * log_uniform(rng, 0, 3);
      const double eps = -tree_dimension(s.tree) * unit(rng);
      Kinematics kin{s.q, mu};
      const double e = std::min(mu, special ? kin.bar_eta() : kin.eta());
      const double lhs = log_weight_factor(s.tree, s.q, mu, lam2);
      const double rhs = eps * (sup_log(e, lam) - sup_log(e, lam2)) + log_weight_factor(s.tree, s.q, mu, lam);
      tr.check(lhs, rhs, [&] {
        std::ostringstream os;
        os << describe_tree(s.tree) << " Lambda=" << lam << " lambda=" << lam2 << " eps=" << eps
           << " inf(mu,eta)=" << e << " |q|=" << kin.abs_sup();
        return os.str();
      });
      // same inequality with sup(|q|, mu) in place of inf(mu, eta)
      const double big = std::max(mu, kin.abs_sup());
      wide.check(lhs, eps * (sup_log(big, lam) - sup_log(big, lam2)) + log_weight_factor(s.tree, s.q, mu, lam),
                 [&] { return describe_tree(s.tree); });
    }
    out.push_back(tr.report);
    out.push_back(wide.report);
  }
  {
    Tracker tr{named("relevant_momentum_rescale"), opts.log_tolerance};
    std::mt19937_64 rng(opts.seed + 2);
    for (std::size_t n = 0; n < opts.samples; ++n) {
      const bool special = bern(rng);
      auto s = reduced_sample(rng, special, [](const WeightedTree& t) { return tree_dimension(t) >= 0; });
      const double lam = log_uniform(rng, -3, 3);
      const double t = unit(rng);
      auto tq = s.q;
      for (auto& p : tq)
        for (auto& c : p) c *= t;
      tr.check(log_weight_factor(s.tree, tq, lam, lam), log_weight_factor(s.tree, s.q, lam, lam),
               [&] { return describe_tree(s.tree) + " t=" + std::to_string(t); });
    }
    out.push_back(tr.report);
  }
  {
    Tracker tr{named("relevant_cutoff_monotone"), opts.log_tolerance};
    std::mt19937_64 rng(opts.seed + 3);
    for (std::size_t n = 0; n < opts.samples; ++n) {
      auto s = reduced_sample(rng, true, [](const WeightedTree& t) { return tree_dimension(t) >= 0; });
      const double lam = mu * log_uniform(rng, -4, 0);
      const double lam2 = lam + (mu - lam) * unit(rng);
      tr.check(log_weight_factor(s.tree, s.q, mu, lam2), log_weight_factor(s.tree, s.q, mu, lam),
               [&] { return describe_tree(s.tree); });
    }
    out.push_back(tr.report);
  }
  {
    Tracker tr{named("fused_special_merge"), opts.log_tolerance};
    std::mt19937_64 rng(opts.seed + 4);
    auto any = [](const WeightedTree&) { return true; };
    for (std::size_t n = 0; n < opts.samples; ++n) {
      auto a = reduced_sample(rng, true, any);
      auto b = reduced_sample(rng, true, any);
      if (a.q.size() + b.q.size() > static_cast<std::size_t>(kMaxSubsetMomenta)) {
        --n;
        continue;
      }
      auto f = fuse(a.tree, a.q, b.tree, b.q, FuseMode::special_merge);
      const double lam = log_uniform(rng, -3, 3);
      tr.check(log_weight_factor(a.tree, a.q, mu, lam) + log_weight_factor(b.tree, b.q, mu, lam),
               log_weight_factor(f.tree, f.momenta, mu, lam), [&] { return describe_tree(f.tree); });
    }
    out.push_back(tr.report);
  }
  {
    Tracker tr{named("fused_joined_leg"), opts.log_tolerance};
    std::mt19937_64 rng(opts.seed + 5);
    auto two_ext = [](const WeightedTree& t) { return t.externals().size() >= 2; };
    for (std::size_t n = 0; n < opts.samples; ++n) {
      const int which = std::uniform_int_distribution<int>(0, 2)(rng);  // 0 none, 1 T1, 2 T2 special
      auto a = reduced_sample(rng, which == 1, two_ext);
      auto b = reduced_sample(rng, which == 2, two_ext);
      if (a.q.size() + b.q.size() > static_cast<std::size_t>(kMaxSubsetMomenta) + 2) {
        --n;
        continue;
      }
      const int n1 = static_cast<int>(a.q.size()), n2 = static_cast<int>(b.q.size());
      const int v1 = which == 1 ? std::uniform_int_distribution<int>(0, n1 - 1)(rng) : n1 - 1;
      const int v2 = which == 2 ? std::uniform_int_distribution<int>(0, n2 - 1)(rng) : 0;
      // k is the sum of the other momenta of T1; the joined legs carry -k and k
      Vec4 k{};
      for (int i = 0; i < n1; ++i)
        if (i != v1)
          for (int c = 0; c < kDim; ++c) k[c] += a.q[static_cast<std::size_t>(i)][c];
      for (int c = 0; c < kDim; ++c) a.q[static_cast<std::size_t>(v1)][c] = -k[c];
      a.tree.vertices[static_cast<std::size_t>(a.tree.externals()[static_cast<std::size_t>(v1)])].w = {};
      b.q[static_cast<std::size_t>(v2)] = k;
      if (which != 2) {
        // T2 conserves momentum: fix its last leg
        Vec4 s{};
        for (int i = 0; i + 1 < n2; ++i)
          for (int c = 0; c < kDim; ++c) s[c] -= b.q[static_cast<std::size_t>(i)][c];
        b.q.back() = s;
      }
      int target = std::uniform_int_distribution<int>(0, n1 - 2)(rng);
      if (target >= v1) ++target;
      auto f = fuse(a.tree, a.q, b.tree, b.q, FuseMode::line_join, v1, v2, target);
      const double lam = log_uniform(rng, -3, 3);
      const double rhs = log_weight_factor(f.tree, f.momenta, mu, lam) -
                         f.divisor_exponent * sup_log(norm(k), lam);
      tr.check(log_weight_factor(a.tree, a.q, mu, lam) + log_weight_factor(b.tree, b.q, mu, lam), rhs,
               [&] { return describe_tree(f.tree) + " case=" + std::to_string(which); });
    }
    out.push_back(tr.report);
  }
  {
    Tracker tr{named("amputation"), opts.log_tolerance};
    std::mt19937_64 rng(opts.seed + 6);
    auto two_ext = [](const WeightedTree& t) { return t.externals().size() >= 2; };
    for (std::size_t n = 0; n < opts.samples; ++n) {
      const bool special = bern(rng);
      auto s = reduced_sample(rng, special, two_ext);
      auto& t = s.tree;
      const auto ext = t.externals();
      t.vertices[static_cast<std::size_t>(ext[0])].w = {};
      s.q[0] = Vec4{};
      if (!special) {
        Vec4 sum{};
        for (std::size_t i = 0; i + 1 < s.q.size(); ++i)
          for (int c = 0; c < kDim; ++c) sum[c] -= s.q[i][c];
        s.q.back() = sum;
      }
      const double dv = t.vertices[static_cast<std::size_t>(ext[0])].dim;
      auto tp = amputate(t, 0);
      std::vector<Vec4> rest(s.q.begin() + 1, s.q.end());
      const double lam = log_uniform(rng, -3, 3);
      Kinematics kin{rest, mu};
      const double e = std::min(mu, special ? kin.bar_eta() : kin.eta());
      const double rhs = (1 - dv) * std::log(lam) - sup_log(e, lam) + log_weight_factor(tp, rest, mu, lam);
      tr.check(log_weight_factor(t, s.q, mu, lam), rhs, [&] { return describe_tree(t); });
    }
    out.push_back(tr.report);
  }
  {
    Tracker tr{named("reduction_monotone"), opts.log_tolerance};
    std::mt19937_64 rng(opts.seed + 7);
    for (std::size_t n = 0; n < opts.samples; ++n) {
      RandomTreeOptions o;
      o.special = bern(rng);
      auto s = random_tree(rng, o);
      const double lam = log_uniform(rng, -3, 3);
      tr.check(log_weight_factor(s.tree, s.q, mu, lam), log_weight_factor(reduce(s.tree), s.q, mu, lam),
               [&] { return describe_tree(s.tree); });
    }
    out.push_back(tr.report);
  }
  {
    // |G Lambda^{-[T]} - 1| <= 1e-3 at Lambda = 1e6 mu
    LemmaReport r = named("tree_homogeneity");
    std::mt19937_64 rng(opts.seed + 8);
    const double big = 1e6 * mu;
    for (std::size_t n = 0; n < opts.samples; ++n) {
      auto s = reduced_sample(rng, bern(rng), [](const WeightedTree&) { return true; });
      const double dev = std::abs(std::expm1(log_weight_factor(s.tree, s.q, mu, big) -
                                             tree_dimension(s.tree) * std::log(big)));
      ++r.samples;
      r.worst_log_ratio = std::max(r.worst_log_ratio, dev);
      if (dev > 1e-3 && r.violations++ == 0) r.counterexample = describe_tree(s.tree);
    }
    out.push_back(r);
  }

  // g^(s) properties: exhaustive scans over small arguments
  auto scan = [&](const std::string& name, auto&& body) {
    LemmaReport r = named(name);
    body(r);
    out.push_back(r);
  };
  auto record = [](LemmaReport& r, double lhs, double rhs, const std::function<std::string()>& d) {
    ++r.samples;
    r.worst_log_ratio = std::max(r.worst_log_ratio, lhs - rhs);
    if (lhs > rhs + 1e-12 && r.violations++ == 0) r.counterexample = d();
  };
  auto args = [](int s, double o, int r, int w) {
    std::ostringstream os;
    os << "s=" << s << " [O]=" << o << " r=" << r << " |w|=" << w;
    return os.str();
  };
  scan("g_raise_r", [&](LemmaReport& rep) {
    for (int s = 1; s <= 4; ++s)
      for (int o2 = 0; o2 <= 16; ++o2)
        for (int r = 0; r <= 10; ++r)
          for (int w = 0; w <= 8; ++w)
            for (int v = 0; v <= w; ++v)
              record(rep, gs(s, o2 / 2.0, r, v), gs(s, o2 / 2.0, r + 1, w), [&] { return args(s, o2 / 2.0, r, w); });
  });
  scan("g_monotone_w", [&](LemmaReport& rep) {
    for (int s = 1; s <= 4; ++s)
      for (int o2 = 0; o2 <= 16; ++o2)
        for (int r = 0; r <= 10; ++r)
          for (int w = 0; w <= 8; ++w)
            for (int v = 0; v <= w; ++v)
              record(rep, gs(s, o2 / 2.0, r, w), gs(s, o2 / 2.0, r, v), [&] { return args(s, o2 / 2.0, r, w); });
  });
  scan("g_step_w", [&](LemmaReport& rep) {
    for (int s = 1; s <= 4; ++s)
      for (int o2 = 0; o2 <= 16; ++o2)
        for (int r = 0; r <= 10; ++r)
          for (int w = 0; w <= 8; ++w)
            if (w <= o2 / 2.0 + s - 1)
              record(rep, gs(s, o2 / 2.0, r, w + 1) + 1, gs(s, o2 / 2.0, r, w), [&] { return args(s, o2 / 2.0, r, w); });
  });
  scan("g_shift_r", [&](LemmaReport& rep) {
    for (int s = 1; s <= 4; ++s)
      for (int o2 = 0; o2 <= 16; ++o2)
        for (int r = 0; r <= 10; ++r)
          for (int rp = 0; rp <= 10; ++rp)
            for (int w = 0; w <= 8; ++w)
              record(rep, gs(s, o2 / 2.0, r, w), gs(s, o2 / 2.0, r + rp, w) - rp * (o2 / 2.0 + s),
                     [&] { return args(s, o2 / 2.0, r, w); });
  });
  auto prop3 = [&](LemmaReport& rep, bool application_domain) {
    for (int s = 1; s <= 4; ++s)
      for (int sp = 1; sp <= 4; ++sp)
        for (int o = 0; o <= 8; ++o)
          for (int op = 0; op <= 8; ++op)
            for (int r = 0; r <= 10; ++r)
              for (int rp = 0; rp <= 10; ++rp) {
                if (r + rp < 2) continue;
                if (application_domain && (r + 3 * s < 4 || rp + 3 * sp < 4)) continue;
                for (int u = 0; u <= 8; ++u)
                  for (int v = 0; u + v <= 8; ++v)
                    for (int wp = 0; wp <= 8; ++wp)
                      record(rep, gs(s, o, r, u) + gs(sp, op, rp, v),
                             gs(s + sp, o + op, r + rp - 2, wp) - (o + op + s + sp), [&] {
                               std::ostringstream os;
                               os << "s=" << s << " s'=" << sp << " [O]=" << o << " [O']=" << op
                                  << " r=" << r << " r'=" << rp << " |u|=" << u << " |v|=" << v
                                  << " |w'|=" << wp;
                               return os.str();
                             });
              }
  };
  scan("g_merge", [&](LemmaReport& rep) { prop3(rep, false); });
  scan("g_merge[r+3s>=4]", [&](LemmaReport& rep) { prop3(rep, true); });
  return out;
}

}  // namespace ope
