#pragma once

#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "ope/covariance.hpp"
#include "ope/multi_index.hpp"
#include "ope/rational.hpp"

namespace ope {

// d^u C^{mu,inf}(x_p - x_q) with p < q, derivatives with respect to the argument.
struct FAtom {
  std::uint8_t p = 0;
  std::uint8_t q = 1;
  MultiIndex u;

  auto operator<=>(const FAtom&) const = default;
  bool operator==(const FAtom&) const = default;
};

using AtomId = std::uint32_t;

// Process-wide hash-consing table: identical atoms share one id, so repeated
// covariance derivatives are evaluated once per point configuration.
AtomId intern_atom(const FAtom& a);
const FAtom& atom(AtomId id);

// Orient d^u C(x_a - x_b) as a canonical atom; returns the sign (-1)^{|u|} picked
// up when a > b (C is even).
std::pair<AtomId, int> make_atom(int a, int b, const MultiIndex& u);

// Product of displacement coordinates (x_p - x_e)^a, e the expansion point.
// Stored as sorted (var, exponent) with var = 4*p + a.
struct Monomial {
  std::vector<std::pair<std::uint16_t, std::uint8_t>> vars;

  static Monomial of(int point, const MultiIndex& w);
  int degree() const;
  Monomial operator*(const Monomial& o) const;
  auto operator<=>(const Monomial&) const = default;
  bool operator==(const Monomial&) const = default;
};

struct TermKey {
  Monomial mono;
  std::vector<AtomId> atoms;  // sorted, repeats allowed

  auto operator<=>(const TermKey&) const = default;
  bool operator==(const TermKey&) const = default;
};

struct Term {
  Rational coef;
  Monomial mono;
  std::vector<FAtom> atoms;
};

// Sum of rational prefactor x displacement monomial x product of f-atoms, over
// points 0..n-1 with expansion point e. Like terms are merged on insertion,
// so is_zero() is a symbolic test.
class SymbolicCoefficient {
 public:
  SymbolicCoefficient() = default;
  SymbolicCoefficient(int num_points, int expansion_point);

  static SymbolicCoefficient constant(int num_points, int expansion_point, const Rational& c);

  int num_points() const { return num_points_; }
  int expansion_point() const { return expansion_point_; }
  bool is_zero() const { return terms_.empty(); }
  std::size_t size() const { return terms_.size(); }
  const std::map<TermKey, Rational>& terms() const { return terms_; }

  void add(const Rational& c, Monomial mono, std::vector<AtomId> atoms);
  SymbolicCoefficient& operator+=(const SymbolicCoefficient& o);
  SymbolicCoefficient& operator-=(const SymbolicCoefficient& o);
  SymbolicCoefficient& operator*=(const Rational& c);
  SymbolicCoefficient operator*(const SymbolicCoefficient& o) const;

  // Relabel point p as map[p] in a frame with n points and expansion point e.
  // Monomials in x_p - x_old_e are re-expanded in the new displacements.
  SymbolicCoefficient embed(const std::vector<int>& map, int n, int e) const;

  bool operator==(const SymbolicCoefficient& o) const;

  // Terms in a content-ordered form (independent of atom interning order).
  std::vector<Term> canonical_terms() const;

  // Scaling degree of each term at mu -> 0: monomial degree - sum(2 + |u|).
  std::vector<int> term_degrees() const;

 private:
  int num_points_ = 0;
  int expansion_point_ = 0;
  std::map<TermKey, Rational> terms_;
};

double evaluate(const SymbolicCoefficient& c, const std::vector<Vec4>& points, double mu);

// Flattened form for repeated evaluation: atoms evaluated once per call.
class CompiledCoefficient {
 public:
  CompiledCoefficient() = default;
  explicit CompiledCoefficient(const SymbolicCoefficient& c);
  double operator()(const std::vector<Vec4>& points, double mu) const;
  std::size_t term_count() const { return coef_.size(); }
  int num_points() const { return num_points_; }

 private:
  int num_points_ = 0;
  int expansion_point_ = 0;
  std::vector<FAtom> atoms_;
  std::vector<double> coef_;
  std::vector<std::uint32_t> mono_begin_, atom_begin_;
  std::vector<std::pair<std::uint16_t, std::uint8_t>> mono_vars_;
  std::vector<std::uint32_t> atom_refs_;
  int max_power_ = 0;
};

}  // namespace ope
