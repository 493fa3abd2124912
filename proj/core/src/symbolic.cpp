#include "ope/symbolic.hpp"

#include <algorithm>
#include <deque>
#include <mutex>
#include <shared_mutex>

#include "ope/error.hpp"

namespace ope {

namespace {

struct AtomTable {
  std::shared_mutex mu;
  std::map<FAtom, AtomId> ids;
  std::deque<FAtom> atoms;
};

AtomTable& table() {
  static AtomTable t;
  return t;
}

constexpr int kInternalMaxOrder = 16;

}  // namespace

AtomId intern_atom(const FAtom& a) {
  auto& t = table();
  {
    std::shared_lock lock(t.mu);
    if (auto it = t.ids.find(a); it != t.ids.end()) return it->second;
  }
  std::unique_lock lock(t.mu);
  auto [it, inserted] = t.ids.try_emplace(a, static_cast<AtomId>(t.atoms.size()));
  if (inserted) t.atoms.push_back(a);
  return it->second;
}

const FAtom& atom(AtomId id) {
  auto& t = table();
  std::shared_lock lock(t.mu);
  return t.atoms.at(id);
}

std::pair<AtomId, int> make_atom(int a, int b, const MultiIndex& u) {
  if (a == b) throw invalid_argument("propagator atom needs two distinct points");
  if (a < b)
    return {intern_atom({static_cast<std::uint8_t>(a), static_cast<std::uint8_t>(b), u}), 1};
  return {intern_atom({static_cast<std::uint8_t>(b), static_cast<std::uint8_t>(a), u}),
          (u.order() % 2) ? -1 : 1};
}

Monomial Monomial::of(int point, const MultiIndex& w) {
  Monomial m;
  for (int a = 0; a < kDim; ++a)
    if (w.c[a]) m.vars.emplace_back(static_cast<std::uint16_t>(kDim * point + a), w.c[a]);
  return m;
}

int Monomial::degree() const {
  int d = 0;
  for (const auto& v : vars) d += v.second;
  return d;
}

Monomial Monomial::operator*(const Monomial& o) const {
  Monomial r;
  std::size_t i = 0, j = 0;
  while (i < vars.size() || j < o.vars.size()) {
    if (j == o.vars.size() || (i < vars.size() && vars[i].first < o.vars[j].first)) {
      r.vars.push_back(vars[i++]);
    } else if (i == vars.size() || o.vars[j].first < vars[i].first) {
      r.vars.push_back(o.vars[j++]);
    } else {
      r.vars.emplace_back(vars[i].first, static_cast<std::uint8_t>(vars[i].second + o.vars[j].second));
      ++i;
      ++j;
    }
  }
  return r;
}

SymbolicCoefficient::SymbolicCoefficient(int num_points, int expansion_point)
    : num_points_(num_points), expansion_point_(expansion_point) {
  if (num_points < 1 || expansion_point < 0 || expansion_point >= num_points)
    throw invalid_argument("bad point frame for symbolic coefficient");
}

SymbolicCoefficient SymbolicCoefficient::constant(int n, int e, const Rational& c) {
  SymbolicCoefficient s(n, e);
  s.add(c, {}, {});
  return s;
}

void SymbolicCoefficient::add(const Rational& c, Monomial mono, std::vector<AtomId> atoms) {
  if (ope::is_zero(c)) return;
  for (const auto& v : mono.vars)
    if (v.first / kDim == expansion_point_) return;  // displacement of e from itself
  std::sort(atoms.begin(), atoms.end());
  TermKey key{std::move(mono), std::move(atoms)};
  auto [it, inserted] = terms_.try_emplace(std::move(key), c);
  if (!inserted) {
    it->second += c;
    if (ope::is_zero(it->second)) terms_.erase(it);
  }
}

namespace {
void check_frame(const SymbolicCoefficient& a, const SymbolicCoefficient& b) {
  if (a.num_points() != b.num_points() || a.expansion_point() != b.expansion_point())
    throw invalid_argument("symbolic coefficients live in different point frames");
}
}  // namespace

SymbolicCoefficient& SymbolicCoefficient::operator+=(const SymbolicCoefficient& o) {
  if (o.is_zero()) return *this;
  if (num_points_ == 0) {
    *this = o;
    return *this;
  }
  check_frame(*this, o);
  for (const auto& [k, c] : o.terms_) add(c, k.mono, k.atoms);
  return *this;
}

SymbolicCoefficient& SymbolicCoefficient::operator-=(const SymbolicCoefficient& o) {
  if (o.is_zero()) return *this;
  if (num_points_ == 0) {
    num_points_ = o.num_points_;
    expansion_point_ = o.expansion_point_;
  }
  check_frame(*this, o);
  for (const auto& [k, c] : o.terms_) add(-c, k.mono, k.atoms);
  return *this;
}

SymbolicCoefficient& SymbolicCoefficient::operator*=(const Rational& c) {
  if (ope::is_zero(c)) {
    terms_.clear();
    return *this;
  }
  for (auto& [k, v] : terms_) v *= c;
  return *this;
}

SymbolicCoefficient SymbolicCoefficient::operator*(const SymbolicCoefficient& o) const {
  check_frame(*this, o);
  SymbolicCoefficient r(num_points_, expansion_point_);
  for (const auto& [ka, ca] : terms_)
    for (const auto& [kb, cb] : o.terms_) {
      auto atoms = ka.atoms;
      atoms.insert(atoms.end(), kb.atoms.begin(), kb.atoms.end());
      r.add(ca * cb, ka.mono * kb.mono, std::move(atoms));
    }
  return r;
}

SymbolicCoefficient SymbolicCoefficient::embed(const std::vector<int>& map, int n, int e) const {
  if (static_cast<int>(map.size()) != num_points_)
    throw invalid_argument("embedding map has the wrong size");
  SymbolicCoefficient out(n, e);
  const int shifted = map[expansion_point_];
  for (const auto& [key, c] : terms_) {
    Rational coef = c;
    std::vector<AtomId> atoms;
    atoms.reserve(key.atoms.size());
    for (AtomId id : key.atoms) {
      const FAtom& a = atom(id);
      auto [nid, sign] = make_atom(map[a.p], map[a.q], a.u);
      atoms.push_back(nid);
      if (sign < 0) coef = -coef;
    }
    // (X_P - X_S)^k per variable, X relative to the new expansion point e.
    std::vector<std::pair<Monomial, Rational>> poly{{Monomial{}, coef}};
    for (const auto& [var, k] : key.mono.vars) {
      const int axis = var % kDim;
      const int p = map[var / kDim];
      std::vector<std::pair<Monomial, Rational>> next;
      std::int64_t binom = 1;
      for (int j = 0; j <= k; ++j) {
        if (j > 0) binom = binom * (k - j + 1) / j;
        // X_P^j (-X_S)^{k-j}
        if (j > 0 && p == e) continue;
        if (k - j > 0 && shifted == e) continue;
        MultiIndex wp, ws;
        wp.c[axis] = static_cast<std::uint8_t>(j);
        ws.c[axis] = static_cast<std::uint8_t>(k - j);
        Monomial m = Monomial::of(p, wp) * Monomial::of(shifted, ws);
        Rational f(binom * (((k - j) % 2) ? -1 : 1));
        for (const auto& [pm, pc] : poly) next.emplace_back(pm * m, pc * f);
      }
      poly = std::move(next);
    }
    for (auto& [m, pc] : poly) out.add(pc, std::move(m), atoms);
  }
  return out;
}

bool SymbolicCoefficient::operator==(const SymbolicCoefficient& o) const {
  if (is_zero() && o.is_zero()) return true;
  return num_points_ == o.num_points_ && expansion_point_ == o.expansion_point_ &&
         terms_ == o.terms_;
}

std::vector<Term> SymbolicCoefficient::canonical_terms() const {
  std::vector<Term> out;
  out.reserve(terms_.size());
  for (const auto& [k, c] : terms_) {
    Term t{c, k.mono, {}};
    for (AtomId id : k.atoms) t.atoms.push_back(atom(id));
    std::sort(t.atoms.begin(), t.atoms.end());
    out.push_back(std::move(t));
  }
  std::sort(out.begin(), out.end(), [](const Term& a, const Term& b) {
    if (a.mono != b.mono) return a.mono < b.mono;
    return a.atoms < b.atoms;
  });
  return out;
}

std::vector<int> SymbolicCoefficient::term_degrees() const {
  std::vector<int> out;
  for (const auto& [k, c] : terms_) {
    int d = k.mono.degree();
    for (AtomId id : k.atoms) d -= 2 + atom(id).u.order();
    out.push_back(d);
  }
  return out;
}

double evaluate(const SymbolicCoefficient& c, const std::vector<Vec4>& points, double mu) {
  if (c.is_zero()) return 0.0;
  return CompiledCoefficient(c)(points, mu);
}

CompiledCoefficient::CompiledCoefficient(const SymbolicCoefficient& c)
    : num_points_(c.num_points()), expansion_point_(c.expansion_point()) {
  std::map<AtomId, std::uint32_t> local;
  for (const auto& [k, v] : c.terms()) {
    coef_.push_back(to_double(v));
    mono_begin_.push_back(static_cast<std::uint32_t>(mono_vars_.size()));
    atom_begin_.push_back(static_cast<std::uint32_t>(atom_refs_.size()));
    for (const auto& var : k.mono.vars) {
      mono_vars_.push_back(var);
      max_power_ = std::max<int>(max_power_, var.second);
    }
    for (AtomId id : k.atoms) {
      auto [it, inserted] = local.try_emplace(id, static_cast<std::uint32_t>(atoms_.size()));
      if (inserted) atoms_.push_back(atom(id));
      atom_refs_.push_back(it->second);
    }
  }
  mono_begin_.push_back(static_cast<std::uint32_t>(mono_vars_.size()));
  atom_begin_.push_back(static_cast<std::uint32_t>(atom_refs_.size()));
}

double CompiledCoefficient::operator()(const std::vector<Vec4>& points, double mu) const {
  if (coef_.empty()) return 0.0;
  if (static_cast<int>(points.size()) != num_points_)
    throw invalid_argument("expected " + std::to_string(num_points_) + " points");
  const CovarianceOptions opts{kInternalMaxOrder};
  std::vector<double> atom_values(atoms_.size());
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    const auto& a = atoms_[i];
    atom_values[i] = eval_covariance_deriv(a.u, points[a.p] - points[a.q], mu, opts);
  }
  const std::size_t nvar = static_cast<std::size_t>(num_points_) * kDim;
  const std::size_t stride = static_cast<std::size_t>(max_power_) + 1;
  std::vector<double> powers(nvar * stride, 1.0);
  const Vec4& origin = points[expansion_point_];
  for (std::size_t v = 0; v < nvar; ++v) {
    const double d = points[v / kDim][v % kDim] - origin[v % kDim];
    for (std::size_t k = 1; k < stride; ++k) powers[v * stride + k] = powers[v * stride + k - 1] * d;
  }
  double total = 0.0;
  for (std::size_t t = 0; t < coef_.size(); ++t) {
    double term = coef_[t];
    for (auto i = mono_begin_[t]; i < mono_begin_[t + 1]; ++i)
      term *= powers[mono_vars_[i].first * stride + mono_vars_[i].second];
    for (auto i = atom_begin_[t]; i < atom_begin_[t + 1]; ++i) term *= atom_values[atom_refs_[i]];
    total += term;
  }
  return total;
}

}  // namespace ope
