#include "ope/recursion.hpp"

#include <algorithm>
#include <cmath>

#include "ope/error.hpp"
#include "ope/ward.hpp"
#include "ope/wick.hpp"

namespace ope {

Rational InteractionOperator::max_dimension() const {
  Rational d(0);
  for (const auto& [op, c] : coefficients) d = std::max(d, op.dimension());
  return d;
}

namespace {

// Left partial derivative d P / d(factor): removes one copy of the factor,
// moving it to the front first (Grassmann sign).
OperatorPolynomial factor_derivative(const Theory& theory, const OperatorPolynomial& p,
                                     const Factor& f) {
  OperatorPolynomial out;
  const bool odd = factor_parity(theory, f) == 1;
  for (const auto& [op, c] : p) {
    const auto& fs = op.factors();
    int odd_before = 0;
    for (std::size_t i = 0; i < fs.size(); ++i) {
      if (fs[i] == f) {
        auto rest = fs;
        rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(i));
        auto cf = canonicalize(theory, std::move(rest));
        if (!cf.zero) {
          const int sign = (odd && odd_before % 2) ? -1 : 1;
          add_term(out, cf.op, c * sign * cf.sign);
        }
        // identical odd factors cannot repeat; identical even ones each count once
      }
      if (factor_parity(theory, fs[i])) ++odd_before;
    }
  }
  return out;
}

// Euler operator: a polynomial without constant term is a total derivative
// iff every component vanishes.
bool is_total_derivative(const Theory& theory, const OperatorPolynomial& p) {
  std::map<std::pair<int, int>, int> orders;
  for (const auto& [op, c] : p)
    for (const auto& f : op.factors()) {
      auto& o = orders[{f.field, f.index}];
      o = std::max(o, f.deriv.order());
    }
  for (const auto& [key, max_order] : orders) {
    OperatorPolynomial euler;
    for (const auto& w : multi_indices_up_to(max_order)) {
      Factor f;
      f.field = static_cast<std::uint8_t>(key.first);
      f.index = static_cast<std::uint8_t>(key.second);
      f.deriv = w;
      auto d = factor_derivative(theory, p, f);
      if (d.empty()) continue;
      auto expanded = derivative_expand(theory, w, d);
      const int sign = (w.order() % 2) ? -1 : 1;
      for (const auto& [op, c] : expanded) add_term(euler, op, c * sign);
    }
    if (!euler.empty()) return false;
  }
  return true;
}

}  // namespace

InteractionBuild build_interaction_operator(const Theory& theory,
                                            const std::vector<LagrangianTerm>& lagrangian) {
  InteractionBuild out;
  for (const auto& term : lagrangian) {
    for (const auto& [op, c] : term.op)
      if (op.dimension() > 4)
        throw domain_violation("Lagrangian term " + to_string(theory, op) + " has dimension " +
                               to_string(op.dimension()) + " > 4");
    if (term.g_power <= 0) continue;  // g-independent: no contribution to d_g L
    const auto layer = static_cast<std::size_t>(term.g_power - 1);
    if (out.layers.size() <= layer) out.layers.resize(layer + 1);
    for (std::size_t n = 0; n < out.layers.size(); ++n) out.layers[n].g_order = static_cast<int>(n);
    auto& target = out.layers[layer].coefficients;
    for (const auto& [op, c] : term.op) {
      if (op.is_unit()) continue;  // constants drop out of every functional
      const Rational v = c * term.coef * term.g_power;
      auto [it, inserted] = target.try_emplace(op, v);
      if (!inserted) {
        it->second += v;
        if (is_zero(it->second)) target.erase(it);
      }
    }
  }
  if (out.layers.empty()) out.layers.emplace_back();
  if (theory.declares_brst()) {
    OperatorPolynomial oi;
    for (const auto& [op, c] : out.layers[0].coefficients) add_term(oi, op, c);
    if (!is_total_derivative(theory, apply_free_brst(theory, oi)))
      out.warnings.push_back("free BRST image of the order-g^0 interaction operator is not a total derivative");
  }
  return out;
}

InteractionOperator add_total_derivative(const Theory& theory, const InteractionOperator& i,
                                         const MultiIndex& a, const CompositeOperator& o,
                                         const Rational& c) {
  if (o.dimension() + a.order() > 4)
    throw domain_violation("total derivative term has dimension > 4");
  InteractionOperator out = i;
  for (const auto& [op, m] : derivative_expand(theory, a, o)) {
    auto [it, inserted] = out.coefficients.try_emplace(op, c * m);
    if (!inserted) {
      it->second += c * m;
      if (is_zero(it->second)) out.coefficients.erase(it);
    }
  }
  return out;
}

RecursionIntegrand::RecursionIntegrand(const Theory& theory, const std::vector<CompositeOperator>& a,
                                       const CompositeOperator& b, const InteractionOperator& i) {
  build(theory, a, b, i, std::nullopt);
}

RecursionIntegrand::RecursionIntegrand(const Theory& theory, const std::vector<CompositeOperator>& a,
                                       const CompositeOperator& b, const InteractionOperator& i,
                                       const Rational& d_trunc) {
  build(theory, a, b, i, d_trunc);
}

void RecursionIntegrand::build(const Theory& theory, const std::vector<CompositeOperator>& a,
                               const CompositeOperator& b, const InteractionOperator& i,
                               const std::optional<Rational>& d_trunc) {
  if (a.empty()) throw invalid_argument("need at least one operator");
  const int s = static_cast<int>(a.size());
  const int n = s + 1;  // points y, x_1..x_s
  expr_ = SymbolicCoefficient(n, s);

  auto keep = [&](const CompositeOperator& c) {
    if (d_trunc && c.dimension() > *d_trunc) {
      truncated_ = true;
      return false;
    }
    return true;
  };
  std::vector<int> shift(s);
  for (int k = 0; k < s; ++k) shift[k] = k + 1;

  // C^C_{A}(x) for [C] < [B]
  std::map<CompositeOperator, SymbolicCoefficient> lower;
  if (b.dimension() > 0) {
    for (auto& [c, coef] : free_ope_expansion(theory, a, b.dimension()))
      if (c.dimension() < b.dimension() && keep(c)) lower.emplace(c, coef.embed(shift, n, s));
  }

  for (const auto& [e, ie] : i.coefficients) {
    std::vector<CompositeOperator> ea{e};
    ea.insert(ea.end(), a.begin(), a.end());
    auto term = free_ope_coefficient(theory, ea, b);
    term *= -ie;
    expr_ += term;

    for (const auto& [c, cc] : lower) {
      auto ec = free_ope_coefficient(theory, {e, c}, b);
      if (ec.is_zero()) continue;
      auto prod = ec.embed({0, s}, n, s) * cc;
      prod *= ie;
      expr_ += prod;
    }

    for (int k = 0; k < s; ++k) {
      for (auto& [c, eak] : free_ope_expansion(theory, {e, a[k]}, a[k].dimension())) {
        if (c.dimension() > a[k].dimension() || !keep(c)) continue;
        auto swapped = a;
        swapped[k] = c;
        auto rest = free_ope_coefficient(theory, swapped, b);
        if (rest.is_zero()) continue;
        auto prod = eak.embed({0, k + 1}, n, s) * rest.embed(shift, n, s);
        prod *= ie;
        expr_ += prod;
      }
    }
  }
  compiled_ = CompiledCoefficient(expr_);
}

std::size_t RecursionIntegrand::unsubtracted_terms() const {
  std::size_t count = 0;
  for (const auto& [key, c] : expr_.terms()) {
    bool touches_y = false;
    for (AtomId id : key.atoms)
      if (atom(id).p == 0) touches_y = true;
    if (!touches_y) ++count;
  }
  return count;
}

double RecursionIntegrand::operator()(const Vec4& y, const std::vector<Vec4>& x, double mu) const {
  std::vector<Vec4> pts;
  pts.reserve(x.size() + 1);
  pts.push_back(y);
  pts.insert(pts.end(), x.begin(), x.end());
  return compiled_(pts, mu);
}

Integrand4 RecursionIntegrand::bind(const std::vector<Vec4>& x, double mu) const {
  std::vector<Vec4> pts;
  pts.push_back(Vec4{});
  pts.insert(pts.end(), x.begin(), x.end());
  return [compiled = compiled_, pts, mu](const Vec4& y) mutable {
    pts[0] = y;
    return compiled(pts, mu);
  };
}

double recursion_integrand(const Theory& theory, const std::vector<CompositeOperator>& a,
                           const CompositeOperator& b, const InteractionOperator& i,
                           const Vec4& y, const std::vector<Vec4>& x, double mu) {
  return RecursionIntegrand(theory, a, b, i)(y, x, mu);
}

namespace {

FirstOrderResult integrate_integrand(const RecursionIntegrand& ig, const std::vector<Vec4>& x,
                                     const QuadratureOptions& q) {
  FirstOrderResult out;
  if (ig.identically_zero()) return out;
  if (ig.unsubtracted_terms() > 0)
    throw domain_violation("integrand has terms without y dependence; the integral diverges");
  auto r = integrate_r4(ig.bind(x, q.mu), x, q);
  out.value = r.value;
  out.error = r.error;
  out.converged = r.converged;
  out.worst_region = r.worst_region;
  out.last_values = r.last_values;
  out.evaluations = r.evaluations;
  return out;
}

}  // namespace

FirstOrderResult integrate_first_order(const Theory& theory,
                                       const std::vector<CompositeOperator>& a,
                                       const CompositeOperator& b, const InteractionOperator& i,
                                       const std::vector<Vec4>& x, const FirstOrderOptions& opts) {
  if (x.size() != a.size()) throw invalid_argument("need one point per operator");
  if (i.empty()) return {};
  if (!opts.d_max) return integrate_integrand(RecursionIntegrand(theory, a, b, i), x, opts.quadrature);
  RecursionIntegrand ig(theory, a, b, i, *opts.d_max);
  auto out = integrate_integrand(ig, x, opts.quadrature);
  if (ig.truncated()) {
    // last-shell estimate: drop the top dimension shell once more
    RecursionIntegrand coarser(theory, a, b, i, *opts.d_max - theory.dimension_quantum());
    auto prev = integrate_integrand(coarser, x, opts.quadrature);
    out.truncation_estimate = std::abs(out.value - prev.value);
  }
  return out;
}

double QMatrix::get(const Grade& g, const CompositeOperator& a, const CompositeOperator& b) const {
  auto it = layers_.find(g);
  if (it == layers_.end()) return 0.0;
  auto jt = it->second.find({a, b});
  return jt == it->second.end() ? 0.0 : jt->second;
}

void QMatrix::set(const Grade& g, const CompositeOperator& a, const CompositeOperator& b, double v) {
  if (b.dimension() > a.dimension() + 1)
    throw domain_violation("Q_A^B vanishes unless [B] <= [A] + 1");
  if (v == 0.0) {
    if (auto it = layers_.find(g); it != layers_.end()) it->second.erase({a, b});
    return;
  }
  layers_[g][{a, b}] = v;
}

void QMatrix::add(const Grade& g, const CompositeOperator& a, const CompositeOperator& b, double v) {
  set(g, a, b, get(g, a, b) + v);
}

const QMatrix::Layer& QMatrix::layer(const Grade& g) const {
  static const Layer empty;
  auto it = layers_.find(g);
  return it == layers_.end() ? empty : it->second;
}

bool QMatrix::empty() const {
  for (const auto& [g, l] : layers_)
    if (!l.empty()) return false;
  return true;
}

std::map<CompositeOperator, double> QMatrix::row(const CompositeOperator& a, int max_g) const {
  std::map<CompositeOperator, double> out;
  for (const auto& [g, l] : layers_) {
    if (g.g >= max_g) continue;
    for (auto it = l.lower_bound({a, CompositeOperator{}}); it != l.end() && it->first.first == a; ++it)
      out[it->first.second] += it->second;
  }
  return out;
}

std::map<CompositeOperator, double> QMatrix::column(const CompositeOperator& b, int max_g) const {
  std::map<CompositeOperator, double> out;
  for (const auto& [g, l] : layers_) {
    if (g.g >= max_g) continue;
    for (const auto& [key, v] : l)
      if (key.second == b) out[key.first] += v;
  }
  return out;
}

void BMatrix::set_full(const Grade& g, const CompositeOperator& a, const CompositeOperator& b,
                       const CompositeOperator& c, const MultiIndex& w, double v) {
  if (c.dimension() + w.order() != a.dimension() + b.dimension() - 3)
    throw domain_violation("B^{C,w}_{AB} vanishes unless |w| = [A] + [B] - [C] - 3");
  full_[g][{a, b, c, w}] = v;
}

void BMatrix::set_reduced(const Grade& g, const CompositeOperator& a, const CompositeOperator& b,
                          const CompositeOperator& f, double v) {
  if (f.dimension() != a.dimension() + b.dimension() - 3)
    throw domain_violation("Btilde^F_{AB} vanishes unless [F] = [A] + [B] - 3");
  if (v == 0.0) {
    if (auto it = reduced_.find(g); it != reduced_.end()) it->second.erase({a, b, f});
    return;
  }
  reduced_[g][{a, b, f}] = v;
}

double BMatrix::reduced(const Grade& g, const CompositeOperator& a, const CompositeOperator& b,
                        const CompositeOperator& f) const {
  auto it = reduced_.find(g);
  if (it == reduced_.end()) return 0.0;
  auto jt = it->second.find({a, b, f});
  return jt == it->second.end() ? 0.0 : jt->second;
}

void BMatrix::reduce_full(const Theory& theory) {
  for (const auto& [g, entries] : full_)
    for (const auto& [key, v] : entries) {
      const double sign = (key.w.order() % 2) ? -1.0 : 1.0;
      for (const auto& [f, m] : derivative_expand(theory, key.w, key.c)) {
        auto& slot = reduced_[g][{key.a, key.b, f}];
        slot += sign * v * static_cast<double>(m);
      }
    }
}

bool BMatrix::empty() const {
  for (const auto& [g, l] : full_)
    if (!l.empty()) return false;
  for (const auto& [g, l] : reduced_)
    if (!l.empty()) return false;
  return true;
}

namespace {

// Sum of weighted free coefficients, each a function of (y, 0).
struct WeightedSum {
  std::vector<std::pair<double, CompiledCoefficient>> parts;

  void add(double w, const SymbolicCoefficient& c) {
    if (w == 0.0 || c.is_zero()) return;
    parts.emplace_back(w, CompiledCoefficient(c));
  }
  bool empty() const { return parts.empty(); }
  Integrand4 function(double mu) const {
    return [parts = parts, mu](const Vec4& y) {
      const std::vector<Vec4> pts{y, Vec4{}};
      double s = 0.0;
      for (const auto& [w, c] : parts) s += w * c(pts, mu);
      return s;
    };
  }
};

double integrate_sum(const WeightedSum& sum, const StepOptions& opts) {
  if (sum.empty()) return 0.0;
  const auto& q = opts.integration.quadrature;
  return integrate_r4(sum.function(q.mu), {Vec4{}}, q).value;
}

void require_first_order(int n) {
  if (n != 1)
    throw missing_layer("order " + std::to_string(n) +
                        " needs interacting OPE coefficients of order >= 1, which are not built");
}

double btilde_below(const BMatrix& bt, int max_g, const CompositeOperator& a,
                    const CompositeOperator& b, const CompositeOperator& f) {
  double s = 0.0;
  for (const auto& [g, l] : bt.reduced_layers()) {
    if (g.g >= max_g) continue;
    if (auto it = l.find({a, b, f}); it != l.end()) s += it->second;
  }
  return s;
}

}  // namespace

QMatrix stq_recursion_step(const Theory& theory, const QMatrix& q,
                           const std::vector<std::pair<CompositeOperator, CompositeOperator>>& entries,
                           const InteractionOperator& i, const BMatrix& btilde, int n,
                           const StepOptions& opts) {
  require_first_order(n);
  QMatrix out;
  for (const auto& [a, b] : entries) {
    if (b.dimension() > a.dimension() + 1)
      throw domain_violation("Q_A^B vanishes unless [B] <= [A] + 1");
    const auto into_b = q.column(b, n);
    const auto from_a = q.row(a, n);
    WeightedSum sum;
    double contact = 0.0;
    for (const auto& [e, ie] : i.coefficients) {
      const double w = to_double(ie);
      if (!into_b.empty())
        for (auto& [c, coef] : free_ope_expansion(theory, {e, a}, a.dimension())) {
          if (c.dimension() > a.dimension()) continue;
          if (auto it = into_b.find(c); it != into_b.end()) sum.add(w * it->second, coef);
        }
      for (const auto& [c, qac] : from_a) {
        if (c.dimension() < b.dimension() || c.dimension() > a.dimension() + 1) continue;
        sum.add(-w * qac, free_ope_coefficient(theory, {e, c}, b));
      }
      contact += w * btilde_below(btilde, n, e, a, b);
    }
    const double v = integrate_sum(sum, opts) + contact;
    if (std::abs(v) > opts.drop_below) out.set({n, 0}, a, b, v);
  }
  return out;
}

BMatrix bvq_recursion_step(
    const Theory& theory, const BMatrix& btilde,
    const std::vector<std::tuple<CompositeOperator, CompositeOperator, CompositeOperator>>& entries,
    const InteractionOperator& i, int n, const StepOptions& opts) {
  require_first_order(n);
  BMatrix out;
  OperatorBasis basis = enumerate_basis(theory, opts.d_max);
  for (const auto& [a1, a2, b] : entries) {
    if (b.dimension() != a1.dimension() + a2.dimension() - 3)
      throw domain_violation("Btilde^F_{AB} vanishes unless [F] = [A] + [B] - 3");
    WeightedSum sum;
    for (const auto& [e, ie] : i.coefficients) {
      const double w = to_double(ie);
      for (auto& [c, coef] : free_ope_expansion(theory, {e, a1}, a1.dimension()))
        if (c.dimension() <= a1.dimension()) sum.add(w * btilde_below(btilde, n, c, a2, b), coef);
      for (auto& [c, coef] : free_ope_expansion(theory, {e, a2}, a2.dimension()))
        if (c.dimension() <= a2.dimension()) sum.add(w * btilde_below(btilde, n, a1, c, b), coef);
      for (const auto& c : basis.operators) {
        if (c.dimension() != a1.dimension() + a2.dimension() - 3) continue;
        const double bc = btilde_below(btilde, n, a1, a2, c);
        if (bc != 0.0) sum.add(-w * bc, free_ope_coefficient(theory, {e, c}, b));
      }
    }
    const double v = integrate_sum(sum, opts);
    if (std::abs(v) > opts.drop_below) out.set_reduced({n, 0}, a1, a2, b, v);
  }
  return out;
}

PerturbativeCoefficient::PerturbativeCoefficient(Theory theory, std::vector<CompositeOperator> a,
                                                 CompositeOperator b, double mu)
    : theory_(std::move(theory)), a_(std::move(a)), b_(std::move(b)), mu_(mu) {
  free_ = free_ope_coefficient(theory_, a_, b_);
}

void PerturbativeCoefficient::set_interaction(InteractionOperator i, FirstOrderOptions opts) {
  std::unique_lock lock(mutex_);
  interaction_ = std::move(i);
  opts_ = std::move(opts);
  opts_.quadrature.mu = mu_;
  cache_.clear();
}

bool PerturbativeCoefficient::has_layer(const Grade& g) const {
  std::shared_lock lock(mutex_);
  if (g == Grade{0, 0}) return true;
  return g == Grade{1, 0} && interaction_.has_value();
}

PerturbativeCoefficient::Sample PerturbativeCoefficient::evaluate(const Grade& g,
                                                                  const std::vector<Vec4>& x) const {
  if (g == Grade{0, 0}) return {ope::evaluate(free_, x, mu_), 0.0};
  if (!has_layer(g))
    throw missing_layer("layer (" + std::to_string(g.g) + "," + std::to_string(g.hbar) +
                        ") is not available");
  std::vector<double> key;
  for (const auto& p : x) key.insert(key.end(), p.begin(), p.end());
  {
    std::shared_lock lock(mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  }
  InteractionOperator i;
  FirstOrderOptions opts;
  {
    std::shared_lock lock(mutex_);
    i = *interaction_;
    opts = opts_;
  }
  auto r = integrate_first_order(theory_, a_, b_, i, x, opts);
  Sample sample{r.value, r.error + r.truncation_estimate};
  std::unique_lock lock(mutex_);
  cache_.emplace(std::move(key), sample);
  reads_[g] = {Grade{0, 0}};
  return sample;
}

std::vector<Grade> PerturbativeCoefficient::reads_for(const Grade& g) const {
  std::shared_lock lock(mutex_);
  auto it = reads_.find(g);
  return it == reads_.end() ? std::vector<Grade>{} : it->second;
}

std::size_t PerturbativeCoefficient::cached_samples() const {
  std::shared_lock lock(mutex_);
  return cache_.size();
}

}  // namespace ope
