#include "ope/wick.hpp"

#include <algorithm>
#include <functional>

#include "ope/error.hpp"

namespace ope {

namespace {

struct FlatFactor {
  int vertex;
  int slot;
  Factor f;
  bool odd;
};

std::vector<FlatFactor> flatten(const Theory& theory, const std::vector<CompositeOperator>& a) {
  std::vector<FlatFactor> out;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const auto& fs = a[k].factors();
    for (std::size_t i = 0; i < fs.size(); ++i)
      out.push_back({static_cast<int>(k), static_cast<int>(i), fs[i],
                     factor_parity(theory, fs[i]) == 1});
  }
  return out;
}

// Parity of the permutation that brings the odd entries of `order` (flat
// indices) into the sequence given; inversions relative to ascending order.
int odd_sign(const std::vector<FlatFactor>& flat, const std::vector<int>& order) {
  std::vector<int> odd;
  for (int i : order)
    if (flat[i].odd) odd.push_back(i);
  std::size_t inv = 0;
  for (std::size_t i = 0; i < odd.size(); ++i)
    for (std::size_t j = i + 1; j < odd.size(); ++j)
      if (odd[i] > odd[j]) ++inv;
  return (inv % 2) ? -1 : 1;
}

// Products of propagator atoms: sum over (coef, atoms).
using AtomSum = std::vector<std::pair<Rational, std::vector<AtomId>>>;

AtomSum contract(const Theory& theory, const FlatFactor& x, const FlatFactor& y) {
  AtomSum out;
  for (const auto& t : theory.propagator(x.f.field, x.f.index, y.f.field, y.f.index)) {
    auto [id, sign] = make_atom(x.vertex, y.vertex, t.deriv + x.f.deriv + y.f.deriv);
    Rational c = t.coef * sign;
    if (y.f.deriv.order() % 2) c = -c;
    out.push_back({c, {id}});
  }
  return out;
}

AtomSum times(const AtomSum& a, const AtomSum& b) {
  AtomSum out;
  for (const auto& [ca, ia] : a)
    for (const auto& [cb, ib] : b) {
      auto ids = ia;
      ids.insert(ids.end(), ib.begin(), ib.end());
      out.push_back({ca * cb, std::move(ids)});
    }
  return out;
}

Rational inverse_factorial(const MultiIndex& w) { return Rational(1, w.factorial_int()); }

bool can_contract(const Theory& theory, const FlatFactor& x, const FlatFactor& y) {
  return x.vertex != y.vertex &&
         !theory.propagator(x.f.field, x.f.index, y.f.field, y.f.index).empty();
}

}  // namespace

std::vector<WickGraph> enumerate_wick_graphs(const Theory& theory,
                                             const std::vector<CompositeOperator>& a,
                                             const CompositeOperator& b, std::size_t guard) {
  if (a.empty()) throw invalid_argument("need at least one operator");
  const int s = static_cast<int>(a.size());
  const auto flat = flatten(theory, a);
  const auto& bf = b.factors();
  const int n = static_cast<int>(flat.size());
  if (static_cast<int>(bf.size()) > n || (n - bf.size()) % 2) return {};

  std::vector<WickGraph> out;
  std::vector<char> used(n, 0);
  std::vector<WickEdge> edges;

  auto check_guard = [&] {
    if (out.size() >= guard)
      throw size_guard("Wick graph count exceeds " + std::to_string(guard));
  };

  std::function<void()> match = [&] {
    int i = 0;
    while (i < n && used[i]) ++i;
    if (i == n) {
      check_guard();
      out.push_back({edges});
      return;
    }
    used[i] = 1;
    for (int j = i + 1; j < n; ++j) {
      if (used[j] || !can_contract(theory, flat[i], flat[j])) continue;
      used[j] = 1;
      edges.push_back({{flat[i].vertex, flat[i].slot}, {flat[j].vertex, flat[j].slot}, false});
      match();
      edges.pop_back();
      used[j] = 0;
    }
    used[i] = 0;
  };

  std::function<void(std::size_t)> assign = [&](std::size_t bi) {
    if (bi == bf.size()) {
      match();
      return;
    }
    const Factor& target = bf[bi];
    for (int i = 0; i < n; ++i) {
      if (used[i]) continue;
      const Factor& f = flat[i].f;
      if (f.field != target.field || f.index != target.index || !f.deriv.le(target.deriv)) continue;
      if (flat[i].vertex == s - 1 && f.deriv != target.deriv) continue;
      used[i] = 1;
      edges.push_back({{flat[i].vertex, flat[i].slot}, {s, static_cast<int>(bi)}, true});
      assign(bi + 1);
      edges.pop_back();
      used[i] = 0;
    }
  };
  assign(0);
  return out;
}

SymbolicCoefficient graph_value(const Theory& theory, const std::vector<CompositeOperator>& a,
                                const CompositeOperator& b, const WickGraph& g) {
  const int s = static_cast<int>(a.size());
  const auto flat = flatten(theory, a);
  std::vector<int> offset(s + 1, 0);
  for (int k = 0; k < s; ++k) offset[k + 1] = offset[k] + static_cast<int>(a[k].size());
  auto flat_index = [&](const FactorRef& r) { return offset[r.vertex] + r.slot; };

  SymbolicCoefficient out(s, s - 1);
  AtomSum atoms{{Rational(1), {}}};
  Monomial mono;
  Rational weight(1);
  std::vector<int> pair_order;
  std::vector<int> target_of(b.size(), -1);
  for (const auto& e : g.edges) {
    const int i = flat_index(e.a);
    if (e.target) {
      target_of[e.b.slot] = i;
      const MultiIndex w = b.factors()[e.b.slot].deriv - flat[i].f.deriv;
      mono = mono * Monomial::of(flat[i].vertex, w);
      weight *= inverse_factorial(w);
    } else {
      const int j = flat_index(e.b);
      const int lo = std::min(i, j), hi = std::max(i, j);
      atoms = times(atoms, contract(theory, flat[lo], flat[hi]));
      pair_order.push_back(lo);
      pair_order.push_back(hi);
    }
  }
  // identical B factors are reached once per permutation among themselves
  const auto& bf = b.factors();
  for (std::size_t i = 0; i < bf.size();) {
    std::size_t j = i;
    while (j < bf.size() && bf[j] == bf[i]) ++j;
    std::int64_t m = 1;
    for (std::size_t k = 2; k <= j - i; ++k) m *= static_cast<std::int64_t>(k);
    weight /= m;
    i = j;
  }
  std::vector<int> order = pair_order;
  order.insert(order.end(), target_of.begin(), target_of.end());
  weight *= odd_sign(flat, order);
  for (auto& [c, ids] : atoms) out.add(weight * c, mono, std::move(ids));
  return out;
}

SymbolicCoefficient free_ope_coefficient(const Theory& theory,
                                         const std::vector<CompositeOperator>& a,
                                         const CompositeOperator& b) {
  const int s = static_cast<int>(a.size());
  SymbolicCoefficient out(s, s - 1);
  for (const auto& g : enumerate_wick_graphs(theory, a, b)) out += graph_value(theory, a, b, g);
  return out;
}

namespace {

// Calls f(monomial list, coefficient) for each term of the product of polynomials.
template <class F>
void for_each_product(const std::vector<OperatorPolynomial>& a, F&& f) {
  std::vector<CompositeOperator> ops(a.size());
  std::function<void(std::size_t, const Rational&)> rec = [&](std::size_t k, const Rational& c) {
    if (k == a.size()) {
      f(ops, c);
      return;
    }
    for (const auto& [op, ck] : a[k]) {
      ops[k] = op;
      rec(k + 1, c * ck);
    }
  };
  rec(0, Rational(1));
}

}  // namespace

SymbolicCoefficient free_ope_coefficient(const Theory& theory,
                                         const std::vector<OperatorPolynomial>& a,
                                         const CompositeOperator& b) {
  const int s = static_cast<int>(a.size());
  SymbolicCoefficient out(s, s - 1);
  for_each_product(a, [&](const std::vector<CompositeOperator>& ops, const Rational& c) {
    auto part = free_ope_coefficient(theory, ops, b);
    part *= c;
    out += part;
  });
  return out;
}

std::map<CompositeOperator, SymbolicCoefficient> free_ope_expansion(
    const Theory& theory, const std::vector<CompositeOperator>& a, const Rational& d_max) {
  if (a.empty()) throw invalid_argument("need at least one operator");
  const int s = static_cast<int>(a.size());
  const auto flat = flatten(theory, a);
  const int n = static_cast<int>(flat.size());
  std::map<CompositeOperator, SymbolicCoefficient> out;

  // 0 = unvisited, 1 = contracted, 2 = left for the Taylor step
  std::vector<char> state(n, 0);
  std::vector<int> pair_order;
  AtomSum atoms{{Rational(1), {}}};

  auto taylor = [&] {
    std::vector<int> rest;
    Rational base(0);
    for (int i = 0; i < n; ++i)
      if (state[i] == 2) {
        rest.push_back(i);
        base += factor_dimension(theory, flat[i].f);
      }
    if (base > d_max) return;
    std::vector<int> order = pair_order;
    order.insert(order.end(), rest.begin(), rest.end());
    const int sign = odd_sign(flat, order);
    const Rational slack = d_max - base;
    const int budget = static_cast<int>(slack.numerator() / slack.denominator());

    std::vector<Factor> factors(rest.size());
    std::function<void(std::size_t, int, const Monomial&, const Rational&)> rec =
        [&](std::size_t r, int left, const Monomial& mono, const Rational& w) {
          if (r == rest.size()) {
            auto cf = canonicalize(theory, factors);
            if (cf.zero) return;
            auto [it, inserted] = out.try_emplace(cf.op, s, s - 1);
            for (const auto& [c, ids] : atoms) it->second.add(w * c * cf.sign, mono, ids);
            if (it->second.is_zero()) out.erase(it);
            return;
          }
          const FlatFactor& ff = flat[rest[r]];
          const int max_order = ff.vertex == s - 1 ? 0 : left;
          for (int k = 0; k <= max_order; ++k)
            for (const auto& dw : multi_indices_of_order(k)) {
              factors[r] = ff.f;
              factors[r].deriv = ff.f.deriv + dw;
              rec(r + 1, left - k, mono * Monomial::of(ff.vertex, dw), w * inverse_factorial(dw));
            }
        };
    rec(0, budget, Monomial{}, Rational(sign));
  };

  std::function<void(int)> visit = [&](int i) {
    while (i < n && state[i]) ++i;
    if (i == n) {
      taylor();
      return;
    }
    state[i] = 2;
    visit(i + 1);
    state[i] = 1;
    for (int j = i + 1; j < n; ++j) {
      if (state[j] || !can_contract(theory, flat[i], flat[j])) continue;
      state[j] = 1;
      auto saved_atoms = atoms;
      atoms = times(atoms, contract(theory, flat[i], flat[j]));
      pair_order.push_back(i);
      pair_order.push_back(j);
      visit(i + 1);
      pair_order.resize(pair_order.size() - 2);
      atoms = std::move(saved_atoms);
      state[j] = 0;
    }
    state[i] = 0;
  };
  visit(0);
  return out;
}

std::map<CompositeOperator, SymbolicCoefficient> free_ope_expansion(
    const Theory& theory, const std::vector<OperatorPolynomial>& a, const Rational& d_max) {
  std::map<CompositeOperator, SymbolicCoefficient> out;
  for_each_product(a, [&](const std::vector<CompositeOperator>& ops, const Rational& c) {
    for (auto& [b, coef] : free_ope_expansion(theory, ops, d_max)) {
      coef *= c;
      auto [it, inserted] = out.try_emplace(b, std::move(coef));
      if (!inserted) {
        it->second += coef;
      }
    }
  });
  std::erase_if(out, [](const auto& kv) { return kv.second.is_zero(); });
  return out;
}

}  // namespace ope
