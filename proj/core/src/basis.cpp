#include "ope/basis.hpp"

#include <algorithm>
#include <cmath>

#include "ope/error.hpp"

namespace ope {

std::optional<std::size_t> OperatorBasis::find(const CompositeOperator& op) const {
  auto it = index_.find(op);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::size_t> OperatorBasis::with_dimension(const Rational& d) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < operators.size(); ++i)
    if (operators[i].dimension() == d) out.push_back(i);
  return out;
}

namespace {

struct Enumerator {
  const Theory& theory;
  const Rational d_max;
  const std::size_t guard;
  std::vector<Factor> atoms;
  std::vector<Rational> atom_dims;
  std::vector<Factor> current;
  std::vector<CompositeOperator> out;

  void run(std::size_t start, const Rational& dim) {
    out.push_back(make_operator(theory, current));
    if (out.size() > guard)
      throw size_guard("operator basis exceeds " + std::to_string(guard) +
                       " operators; lower d_max");
    for (std::size_t k = start; k < atoms.size(); ++k) {
      const Rational next = dim + atom_dims[k];
      if (next > d_max) continue;
      current.push_back(atoms[k]);
      // odd atoms may not repeat
      const std::size_t from = factor_parity(theory, atoms[k]) ? k + 1 : k;
      run(from, next);
      current.pop_back();
    }
  }
};

}  // namespace

OperatorBasis enumerate_basis(const Theory& theory, const Rational& d_max, std::size_t guard) {
  if (d_max < 0) throw invalid_argument("d_max must be >= 0");
  for (const auto& f : theory.fields())
    if (f.dimension < 1) throw invalid_argument("field dimensions must be >= 1");

  Enumerator e{theory, d_max, guard, {}, {}, {}, {}};
  for (int id = 0; id < theory.field_count(); ++id) {
    const auto& spec = theory.field(id);
    if (spec.dimension > d_max) continue;
    const auto slack = d_max - spec.dimension;
    const int max_order = static_cast<int>(slack.numerator() / slack.denominator());
    for (int idx = 0; idx < spec.components(); ++idx)
      for (const auto& w : multi_indices_up_to(max_order)) {
        Factor f;
        f.field = static_cast<std::uint8_t>(id);
        f.index = static_cast<std::uint8_t>(idx);
        f.deriv = w;
        e.atoms.push_back(f);
      }
  }
  std::sort(e.atoms.begin(), e.atoms.end());
  for (const auto& a : e.atoms) e.atom_dims.push_back(factor_dimension(theory, a));
  e.run(0, Rational(0));

  std::sort(e.out.begin(), e.out.end(), [](const auto& a, const auto& b) {
    if (a.dimension() != b.dimension()) return a.dimension() < b.dimension();
    return a < b;
  });

  OperatorBasis basis;
  basis.d_max = d_max;
  basis.operators = std::move(e.out);
  for (std::size_t i = 0; i < basis.operators.size(); ++i) basis.index_[basis.operators[i]] = i;

  std::vector<Rational> dims;
  for (const auto& op : basis.operators)
    if (dims.empty() || dims.back() != op.dimension()) dims.push_back(op.dimension());
  if (dims.size() < 2) {
    basis.delta = theory.dimension_quantum();
  } else {
    Rational gap = dims[1] - dims[0];
    for (std::size_t i = 2; i < dims.size(); ++i) gap = std::min(gap, dims[i] - dims[i - 1]);
    // a truncated basis can miss the smallest gap; [d] = 1 always appears in the full one
    basis.delta = rational_gcd(gap, Rational(1));
  }
  return basis;
}

}  // namespace ope
