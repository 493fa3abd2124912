#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "ope/basis.hpp"
#include "ope/operator.hpp"
#include "ope/quadrature.hpp"
#include "ope/symbolic.hpp"
#include "ope/theory.hpp"

namespace ope {

// (g-order, hbar-order)
struct Grade {
  int g = 0;
  int hbar = 0;
  auto operator<=>(const Grade&) const = default;
};

struct InteractionOperator {
  std::map<CompositeOperator, Rational> coefficients;  // I^E, 1 <= [E] <= 4
  int g_order = 0;

  bool empty() const { return coefficients.empty(); }
  Rational max_dimension() const;
};

struct LagrangianTerm {
  OperatorPolynomial op;
  Rational coef{1};
  int g_power = 1;
};

struct InteractionBuild {
  std::vector<InteractionOperator> layers;  // layers[n] is the g^n coefficient of O_I
  std::vector<std::string> warnings;
};

// O_I = d_g L at g = 0 (and higher g-layers of d_g L), projected to 1 <= [E] <= 4.
// Field-independent constants are dropped; closure q O_I = d O is checked
// with the free BRST differential and reported as a warning when it fails.
InteractionBuild build_interaction_operator(const Theory& theory,
                                            const std::vector<LagrangianTerm>& lagrangian);

// I + d^a O for a total-derivative insertion.
InteractionOperator add_total_derivative(const Theory& theory, const InteractionOperator& i,
                                         const MultiIndex& a, const CompositeOperator& o,
                                         const Rational& c = Rational(1));

// The first-order integrand, assembled symbolically over points (y, x_1..x_s)
// with expansion point x_s, so polynomial growth in y cancels exactly between
// the first two sums.
class RecursionIntegrand {
 public:
  RecursionIntegrand(const Theory& theory, const std::vector<CompositeOperator>& a,
                     const CompositeOperator& b, const InteractionOperator& i);

  // Same, with the subtraction sums truncated at [C] <= d_trunc.
  RecursionIntegrand(const Theory& theory, const std::vector<CompositeOperator>& a,
                     const CompositeOperator& b, const InteractionOperator& i,
                     const Rational& d_trunc);

  const SymbolicCoefficient& symbolic() const { return expr_; }
  bool identically_zero() const { return expr_.is_zero(); }
  // Terms without any y-dependent atom (these would grow polynomially).
  std::size_t unsubtracted_terms() const;
  bool truncated() const { return truncated_; }

  // Value at y for insertion points x (x.size() == s); x_s need not be 0.
  double operator()(const Vec4& y, const std::vector<Vec4>& x, double mu) const;

  // The integrand as a function of y alone, with x-only atoms folded in.
  Integrand4 bind(const std::vector<Vec4>& x, double mu) const;

 private:
  void build(const Theory& theory, const std::vector<CompositeOperator>& a,
             const CompositeOperator& b, const InteractionOperator& i,
             const std::optional<Rational>& d_trunc);

  SymbolicCoefficient expr_;
  CompiledCoefficient compiled_;
  bool truncated_ = false;
};

double recursion_integrand(const Theory& theory, const std::vector<CompositeOperator>& a,
                           const CompositeOperator& b, const InteractionOperator& i,
                           const Vec4& y, const std::vector<Vec4>& x, double mu);

struct FirstOrderResult {
  double value = 0;
  double error = 0;
  double truncation_estimate = 0;
  bool converged = true;
  std::string worst_region;
  std::array<double, 2> last_values{};
  std::size_t evaluations = 0;
};

struct FirstOrderOptions {
  QuadratureOptions quadrature;
  // Truncate the C-sums at this dimension; unset means no truncation.
  std::optional<Rational> d_max;
};

FirstOrderResult integrate_first_order(const Theory& theory,
                                       const std::vector<CompositeOperator>& a,
                                       const CompositeOperator& b, const InteractionOperator& i,
                                       const std::vector<Vec4>& x,
                                       const FirstOrderOptions& opts = {});

// Sparse matrix keyed by operators, graded by (g, hbar).
class QMatrix {
 public:
  using Key = std::pair<CompositeOperator, CompositeOperator>;  // (A, B) for Q_A^B
  using Layer = std::map<Key, double>;

  double get(const Grade& g, const CompositeOperator& a, const CompositeOperator& b) const;
  void set(const Grade& g, const CompositeOperator& a, const CompositeOperator& b, double v);
  void add(const Grade& g, const CompositeOperator& a, const CompositeOperator& b, double v);
  const Layer& layer(const Grade& g) const;
  const std::map<Grade, Layer>& layers() const { return layers_; }
  bool empty() const;

  // Q_A^B summed over all grades with g < max_g; the formal-series input of a step.
  std::map<CompositeOperator, double> row(const CompositeOperator& a, int max_g) const;
  std::map<CompositeOperator, double> column(const CompositeOperator& b, int max_g) const;

 private:
  std::map<Grade, Layer> layers_;
};

// B^{C,w}_{AB} and the reduced Btilde^F_{AB}.
class BMatrix {
 public:
  struct FullKey {
    CompositeOperator a, b, c;
    MultiIndex w;
    auto operator<=>(const FullKey&) const = default;
  };
  struct ReducedKey {
    CompositeOperator a, b, f;
    auto operator<=>(const ReducedKey&) const = default;
  };

  // Rejects entries violating |w| = [A] + [B] - [C] - 3.
  void set_full(const Grade& g, const CompositeOperator& a, const CompositeOperator& b,
                const CompositeOperator& c, const MultiIndex& w, double v);
  void set_reduced(const Grade& g, const CompositeOperator& a, const CompositeOperator& b,
                   const CompositeOperator& f, double v);
  double reduced(const Grade& g, const CompositeOperator& a, const CompositeOperator& b,
                 const CompositeOperator& f) const;

  // Btilde^F = sum_{C,w} (-1)^{|w|} B^{C,w} delta(O_F, d^w O_C), merged into the
  // reduced entries of every grade.
  void reduce_full(const Theory& theory);

  const std::map<Grade, std::map<FullKey, double>>& full() const { return full_; }
  const std::map<Grade, std::map<ReducedKey, double>>& reduced_layers() const { return reduced_; }
  bool empty() const;

 private:
  std::map<Grade, std::map<FullKey, double>> full_;
  std::map<Grade, std::map<ReducedKey, double>> reduced_;
};

struct StepOptions {
  FirstOrderOptions integration;
  Rational d_max{3};          // basis used for the C-sums
  double drop_below = 0;      // entries with |value| <= drop_below are not stored
};

// Increment of Q at g-order n (inputs read from orders < n), hbar = 1 units.
QMatrix stq_recursion_step(const Theory& theory, const QMatrix& q,
                           const std::vector<std::pair<CompositeOperator, CompositeOperator>>& entries,
                           const InteractionOperator& i, const BMatrix& btilde, int n,
                           const StepOptions& opts = {});

BMatrix bvq_recursion_step(
    const Theory& theory, const BMatrix& btilde,
    const std::vector<std::tuple<CompositeOperator, CompositeOperator, CompositeOperator>>& entries,
    const InteractionOperator& i, int n, const StepOptions& opts = {});

// Layer (0,0) symbolic from the Wick engine; layer (1,0) defined by quadrature
// with cached samples. Reads of lower layers are recorded so tests can check
// the formal-series discipline.
class PerturbativeCoefficient {
 public:
  struct Sample {
    double value = 0;
    double error = 0;
  };

  PerturbativeCoefficient(Theory theory, std::vector<CompositeOperator> a, CompositeOperator b,
                          double mu);

  void set_interaction(InteractionOperator i, FirstOrderOptions opts = {});

  const SymbolicCoefficient& symbolic() const { return free_; }
  bool has_layer(const Grade& g) const;
  Sample evaluate(const Grade& g, const std::vector<Vec4>& x) const;

  // Grades read while producing layer `g` (for discipline checks).
  std::vector<Grade> reads_for(const Grade& g) const;
  std::size_t cached_samples() const;

 private:
  Theory theory_;
  std::vector<CompositeOperator> a_;
  CompositeOperator b_;
  double mu_;
  SymbolicCoefficient free_;
  std::optional<InteractionOperator> interaction_;
  FirstOrderOptions opts_;
  mutable std::shared_mutex mutex_;
  mutable std::map<std::vector<double>, Sample> cache_;
  mutable std::map<Grade, std::vector<Grade>> reads_;
};

}  // namespace ope
