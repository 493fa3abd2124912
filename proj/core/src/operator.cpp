#include "ope/operator.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>

#include "ope/error.hpp"

namespace ope {

Rational factor_dimension(const Theory& theory, const Factor& f) {
  return theory.field(f.field).dimension + f.deriv.order();
}

int factor_parity(const Theory& theory, const Factor& f) {
  return theory.field(f.field).grassmann_parity;
}

CanonicalForm canonicalize(const Theory& theory, std::vector<Factor> factors) {
  const std::size_t n = factors.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return factors[a] < factors[b]; });

  CanonicalForm out;
  // Sign: inversions among odd factors between original and sorted order.
  std::vector<std::size_t> odd_positions;
  for (std::size_t k : order)
    if (factor_parity(theory, factors[k])) odd_positions.push_back(k);
  std::size_t inversions = 0;
  for (std::size_t i = 0; i < odd_positions.size(); ++i)
    for (std::size_t j = i + 1; j < odd_positions.size(); ++j)
      if (odd_positions[i] > odd_positions[j]) ++inversions;
  out.sign = (inversions % 2) ? -1 : 1;

  std::vector<Factor> sorted;
  sorted.reserve(n);
  for (std::size_t k : order) sorted.push_back(factors[k]);
  for (std::size_t i = 1; i < n; ++i)
    if (sorted[i] == sorted[i - 1] && factor_parity(theory, sorted[i])) {
      out.zero = true;
      out.sign = 0;
      return out;
    }

  auto& op = out.op;
  op.factors_ = std::move(sorted);
  op.dimension_ = Rational(0);
  for (const auto& f : op.factors_) {
    if (f.field >= theory.field_count()) throw invalid_argument("factor refers to unknown field");
    const auto& spec = theory.field(f.field);
    if (f.index >= spec.components()) throw invalid_argument("Lorentz index out of range for " + spec.name);
    op.dimension_ += factor_dimension(theory, f);
    op.ghost_number_ += spec.ghost_number;
    op.parity_ ^= spec.grassmann_parity;
  }
  return out;
}

CompositeOperator make_operator(const Theory& theory, std::vector<Factor> factors) {
  auto cf = canonicalize(theory, std::move(factors));
  if (cf.zero) throw invalid_argument("monomial vanishes: repeated Grassmann-odd factor");
  return cf.op;
}

void add_term(OperatorPolynomial& p, const CompositeOperator& op, const Rational& c) {
  if (is_zero(c)) return;
  auto [it, inserted] = p.try_emplace(op, c);
  if (!inserted) {
    it->second += c;
    if (is_zero(it->second)) p.erase(it);
  }
}

OperatorPolynomial single(const CompositeOperator& op) { return {{op, Rational(1)}}; }

namespace {

using SignedTerms = std::map<CompositeOperator, std::int64_t>;

SignedTerms apply_partial(const Theory& theory, int axis, const SignedTerms& in) {
  SignedTerms out;
  for (const auto& [op, mult] : in) {
    const auto& fs = op.factors();
    for (std::size_t i = 0; i < fs.size(); ++i) {
      auto next = fs;
      next[i].deriv.c[axis] += 1;
      auto cf = canonicalize(theory, std::move(next));
      if (cf.zero) continue;
      auto& slot = out[cf.op];
      slot += cf.sign * mult;
    }
  }
  std::erase_if(out, [](const auto& kv) { return kv.second == 0; });
  return out;
}

}  // namespace

std::vector<std::pair<CompositeOperator, std::int64_t>> derivative_expand(
    const Theory& theory, const MultiIndex& w, const CompositeOperator& op) {
  SignedTerms cur{{op, 1}};
  for (int a = 0; a < kDim; ++a)
    for (int k = 0; k < w.c[a]; ++k) cur = apply_partial(theory, a, cur);
  return {cur.begin(), cur.end()};
}

OperatorPolynomial derivative_expand(const Theory& theory, const MultiIndex& w,
                                     const OperatorPolynomial& p) {
  OperatorPolynomial out;
  for (const auto& [op, c] : p)
    for (const auto& [term, m] : derivative_expand(theory, w, op)) add_term(out, term, c * m);
  return out;
}

std::int64_t derivative_multiplicity(const Theory& theory, const CompositeOperator& b,
                                     const MultiIndex& w, const CompositeOperator& c) {
  if (b.dimension() != c.dimension() + w.order() || b.size() != c.size()) return 0;
  for (const auto& [op, m] : derivative_expand(theory, w, c))
    if (op == b) return m;
  return 0;
}

namespace {

int parse_small(std::string_view s, std::string_view token) {
  if (s.empty()) throw invalid_argument("malformed operator factor '" + std::string(token) + "'");
  int v = 0;
  for (char ch : s) {
    if (!std::isdigit(static_cast<unsigned char>(ch)))
      throw invalid_argument("malformed operator factor '" + std::string(token) + "'");
    v = v * 10 + (ch - '0');
    if (v > 64) throw invalid_argument("value too large in '" + std::string(token) + "'");
  }
  return v;
}

void parse_factor(const Theory& theory, std::string_view tok, std::vector<Factor>& out) {
  const std::string_view whole = tok;
  Factor f;
  if (tok.size() > 1 && tok[0] == 'd' && tok.find('.') != std::string_view::npos) {
    auto dot = tok.find('.');
    for (char ch : tok.substr(1, dot - 1)) {
      if (ch < '1' || ch > '4')
        throw invalid_argument("derivative axes are 1..4 in '" + std::string(whole) + "'");
      f.deriv.c[ch - '1'] += 1;
    }
    tok.remove_prefix(dot + 1);
  }
  int power = 1;
  if (auto caret = tok.find('^'); caret != std::string_view::npos) {
    power = parse_small(tok.substr(caret + 1), whole);
    tok = tok.substr(0, caret);
  }
  std::optional<int> index;
  if (auto us = tok.find('_'); us != std::string_view::npos) {
    index = parse_small(tok.substr(us + 1), whole);
    tok = tok.substr(0, us);
  }
  const int id = theory.field_id(tok);
  const auto& spec = theory.field(id);
  if (spec.lorentz_arity == 1) {
    if (!index || *index < 1 || *index > kDim)
      throw invalid_argument("vector field needs an index 1..4 in '" + std::string(whole) + "'");
    f.index = static_cast<std::uint8_t>(*index - 1);
  } else if (index) {
    throw invalid_argument("scalar field takes no index in '" + std::string(whole) + "'");
  }
  f.field = static_cast<std::uint8_t>(id);
  for (int k = 0; k < power; ++k) out.push_back(f);
}

}  // namespace

CompositeOperator parse_operator(const Theory& theory, std::string_view text) {
  std::vector<Factor> factors;
  std::size_t i = 0;
  bool saw_token = false;
  while (i < text.size()) {
    while (i < text.size() && (text[i] == '*' || std::isspace(static_cast<unsigned char>(text[i]))))
      ++i;
    std::size_t j = i;
    while (j < text.size() && text[j] != '*' && !std::isspace(static_cast<unsigned char>(text[j])))
      ++j;
    if (j > i) {
      saw_token = true;
      auto tok = text.substr(i, j - i);
      if (tok != "1") parse_factor(theory, tok, factors);
    }
    i = j;
  }
  if (!saw_token) throw invalid_argument("empty operator text");
  return make_operator(theory, std::move(factors));
}

std::string to_string(const Theory& theory, const Factor& f) {
  std::string s;
  if (!f.deriv.is_zero()) {
    s += 'd';
    for (int a = 0; a < kDim; ++a) s.append(f.deriv.c[a], static_cast<char>('1' + a));
    s += '.';
  }
  const auto& spec = theory.field(f.field);
  s += spec.name;
  if (spec.lorentz_arity == 1) s += "_" + std::to_string(f.index + 1);
  return s;
}

std::string to_string(const Theory& theory, const CompositeOperator& op) {
  if (op.is_unit()) return "1";
  std::string s;
  const auto& fs = op.factors();
  for (std::size_t i = 0; i < fs.size();) {
    std::size_t j = i;
    while (j < fs.size() && fs[j] == fs[i]) ++j;
    if (!s.empty()) s += '*';
    s += to_string(theory, fs[i]);
    if (j - i > 1) s += "^" + std::to_string(j - i);
    i = j;
  }
  return s;
}

OperatorPolynomial field_strength(const Theory& theory, int mu, int nu) {
  const int a = theory.field_id("A");
  if (theory.field(a).lorentz_arity != 1) throw invalid_argument("field A is not a vector");
  auto component = [&](int d, int idx) {
    Factor f;
    f.field = static_cast<std::uint8_t>(a);
    f.index = static_cast<std::uint8_t>(idx);
    f.deriv = MultiIndex::unit(d);
    return make_operator(theory, {f});
  };
  OperatorPolynomial p;
  add_term(p, component(mu, nu), Rational(1));
  add_term(p, component(nu, mu), Rational(-1));
  return p;
}

OperatorPolynomial multiply(const Theory& theory, const OperatorPolynomial& a,
                            const OperatorPolynomial& b) {
  OperatorPolynomial out;
  for (const auto& [oa, ca] : a)
    for (const auto& [ob, cb] : b) {
      auto fs = oa.factors();
      fs.insert(fs.end(), ob.factors().begin(), ob.factors().end());
      auto cf = canonicalize(theory, std::move(fs));
      if (cf.zero) continue;
      add_term(out, cf.op, ca * cb * cf.sign);
    }
  return out;
}

}  // namespace ope
