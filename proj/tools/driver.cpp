#include "driver.hpp"

#include <openssl/evp.h>

#include <boost/version.hpp>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "ope/analysis.hpp"
#include "ope/basis.hpp"
#include "ope/error.hpp"
#include "ope/recursion.hpp"
#include "ope/trees.hpp"
#include "ope/ward.hpp"
#include "ope/wick.hpp"

namespace ope::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "0.1.0";

struct ConfigError : std::runtime_error {
  ConfigError(std::string code, const std::string& what) : std::runtime_error(what), code(std::move(code)) {}
  std::string code;
};

}  // namespace

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return os.str();
}

fs::path EvaluationCache::path_of(const std::string& key) const {
  return dir_ / key.substr(0, 2) / (key.substr(2) + ".json");
}

std::optional<json> EvaluationCache::load(const std::string& key) {
  std::ifstream in(path_of(key));
  if (!in) {
    ++misses_;
    return std::nullopt;
  }
  try {
    json j = json::parse(in);
    ++hits_;
    return j;
  } catch (const json::exception&) {
    ++misses_;  // unreadable entries are recomputed and overwritten
    return std::nullopt;
  }
}

void EvaluationCache::store(const std::string& key, const json& value) {
  const auto target = path_of(key);
  fs::create_directories(target.parent_path());
  auto tmp = target;
  tmp += ".tmp" + std::to_string(std::random_device{}());
  {
    std::ofstream os(tmp);
    os << value.dump() << '\n';
    if (!os) throw std::runtime_error("cannot write cache entry " + tmp.string());
  }
  fs::rename(tmp, target);
}

namespace {

// ---- configuration -------------------------------------------------------

const std::set<std::string> kTopKeys = {"schema_version", "theory", "lagrangian", "mu",     "d_max",
                                        "quadrature",     "seed",   "cache_dir",  "format", "ope",
                                        "ward",           "assoc",  "scaling",    "trees"};

json defaults() {
  return {
      {"schema_version", kSchemaVersion},
      {"theory", "scalar"},
      {"lagrangian", json::array()},
      {"mu", 1.0},
      {"d_max", "4"},
      {"quadrature",
       {{"rel_tol", 1e-6}, {"uv_panels", 6}, {"ir_panels", 10}, {"max_refinements", 14}, {"partition_power", 8}}},
      {"seed", 1},
      {"format", "json"},
  };
}

json load_config(const std::string& path) {
  if (path.empty()) throw ConfigError("CONFIG_NOT_FOUND", "no --config given");
  std::ifstream in(path);
  if (!in) throw ConfigError("CONFIG_NOT_FOUND", "config file not found: " + path);
  json user;
  try {
    user = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("CONFIG_INVALID", std::string("config is not valid JSON: ") + e.what());
  }
  if (!user.is_object()) throw ConfigError("CONFIG_INVALID", "config must be a JSON object");
  if (!user.contains("schema_version") || user["schema_version"] != kSchemaVersion)
    throw ConfigError("CONFIG_INVALID", "schema_version must be " + std::to_string(kSchemaVersion));
  for (const auto& [k, v] : user.items())
    if (!kTopKeys.count(k)) throw ConfigError("CONFIG_INVALID", "unknown config key '" + k + "'");
  json cfg = defaults();
  for (const auto& [k, v] : user.items()) {
    if (k == "quadrature") {
      if (!v.is_object()) throw ConfigError("CONFIG_INVALID", "quadrature must be an object");
      for (const auto& [qk, qv] : v.items()) {
        if (!cfg["quadrature"].contains(qk))
          throw ConfigError("CONFIG_INVALID", "unknown quadrature key '" + qk + "'");
        cfg["quadrature"][qk] = qv;
      }
    } else {
      cfg[k] = v;
    }
  }
  return cfg;
}

template <class T>
T get(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError("CONFIG_INVALID", "missing '" + key + "' in " + where);
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("CONFIG_INVALID", "bad '" + key + "' in " + where + ": " + e.what());
  }
}

const json& section(const json& cfg, const std::string& name) {
  if (!cfg.contains(name) || !cfg[name].is_object())
    throw ConfigError("CONFIG_INVALID", "subcommand needs a '" + name + "' section");
  return cfg[name];
}

Rational rational_of(const json& v) {
  if (v.is_string()) return parse_rational(v.get<std::string>());
  if (v.is_number_integer()) return Rational(v.get<std::int64_t>());
  if (v.is_number()) {
    std::ostringstream os;
    os << v.get<double>();
    return parse_rational(os.str());
  }
  throw ConfigError("CONFIG_INVALID", "expected a rational, got " + v.dump());
}

Vec4 point_of(const json& v) {
  if (!v.is_array() || v.size() != 4) throw ConfigError("CONFIG_INVALID", "a point is an array of 4 numbers");
  Vec4 p;
  for (int a = 0; a < kDim; ++a) p[a] = v[static_cast<std::size_t>(a)].get<double>();
  return p;
}

std::vector<Vec4> points_of(const json& v) {
  if (!v.is_array()) throw ConfigError("CONFIG_INVALID", "points must be an array");
  std::vector<Vec4> out;
  for (const auto& p : v) out.push_back(point_of(p));
  return out;
}

json json_of(const Vec4& p) { return json::array({p[0], p[1], p[2], p[3]}); }
json json_of(const std::vector<Vec4>& x) {
  json j = json::array();
  for (const auto& p : x) j.push_back(json_of(p));
  return j;
}
json json_of(const MultiIndex& m) { return json::array({m.c[0], m.c[1], m.c[2], m.c[3]}); }

QuadratureOptions quadrature_of(const json& cfg) {
  const auto& q = cfg["quadrature"];
  QuadratureOptions o;
  o.rel_tol = q["rel_tol"].get<double>();
  o.uv_panels = q["uv_panels"].get<int>();
  o.ir_panels = q["ir_panels"].get<int>();
  o.max_refinements = q["max_refinements"].get<int>();
  o.partition_power = q["partition_power"].get<int>();
  o.mu = cfg["mu"].get<double>();
  if (!(o.rel_tol > 0)) throw ConfigError("CONFIG_INVALID", "quadrature.rel_tol must be positive");
  return o;
}

std::vector<CompositeOperator> operators_of(const Theory& th, const json& v) {
  if (!v.is_array()) throw ConfigError("CONFIG_INVALID", "operator lists are arrays of strings");
  std::vector<CompositeOperator> out;
  for (const auto& s : v) out.push_back(parse_operator(th, s.get<std::string>()));
  return out;
}

std::vector<std::string> names_of(const Theory& th, const std::vector<CompositeOperator>& ops) {
  std::vector<std::string> out;
  for (const auto& o : ops) out.push_back(to_string(th, o));
  return out;
}

json symbolic_json(const SymbolicCoefficient& c) {
  json terms = json::array();
  for (const auto& t : c.canonical_terms()) {
    json atoms = json::array();
    for (const auto& a : t.atoms) atoms.push_back({{"p", a.p}, {"q", a.q}, {"u", json_of(a.u)}});
    json mono = json::array();
    for (const auto& [var, e] : t.mono.vars) mono.push_back({{"point", var / 4}, {"axis", var % 4}, {"power", e}});
    terms.push_back({{"coef", to_string(t.coef)}, {"monomial", mono}, {"atoms", atoms}});
  }
  return {{"points", c.num_points()}, {"expansion_point", c.expansion_point()}, {"terms", terms}};
}

// ---- run context ---------------------------------------------------------

struct Context {
  json cfg;
  Theory theory;
  EvaluationCache cache;
  std::string format;
  json result;
  std::vector<std::vector<std::string>> csv;  // first row is the header
};

json coefficient_descriptor(const Context& ctx, const std::vector<CompositeOperator>& a,
                            const CompositeOperator& b, int order) {
  json d = {{"theory", ctx.cfg["theory"]},
            {"a", names_of(ctx.theory, a)},
            {"b", to_string(ctx.theory, b)},
            {"order", order},
            {"mu", ctx.cfg["mu"]}};
  if (order > 0) {
    d["lagrangian"] = ctx.cfg["lagrangian"];
    d["quadrature"] = ctx.cfg["quadrature"];
  }
  return d;
}

// Sample of a coefficient at x, served from the cache when present.
struct Sample {
  double value = 0;
  double error = 0;
};

template <class Compute>
Sample cached_sample(Context& ctx, const json& descriptor, const std::vector<Vec4>& x, Compute&& compute) {
  const std::string key = EvaluationCache::key_of(descriptor);
  const std::string xkey = json_of(x).dump();
  json entry = ctx.cache.load(key).value_or(json{{"descriptor", descriptor}, {"samples", json::object()}});
  if (entry["samples"].contains(xkey)) {
    const auto& s = entry["samples"][xkey];
    return {s["value"].get<double>(), s["error"].get<double>()};
  }
  Sample s = compute();
  entry["samples"][xkey] = {{"value", s.value}, {"error", s.error}};
  ctx.cache.store(key, entry);
  return s;
}

InteractionOperator interaction_of(Context& ctx) {
  const auto& lag = ctx.cfg["lagrangian"];
  if (!lag.is_array() || lag.empty())
    throw ConfigError("CONFIG_INVALID", "recursion needs a non-empty 'lagrangian' array");
  std::vector<LagrangianTerm> terms;
  for (const auto& t : lag) {
    LagrangianTerm lt;
    lt.op = single(parse_operator(ctx.theory, get<std::string>(t, "op", "lagrangian term")));
    lt.coef = t.contains("coef") ? rational_of(t["coef"]) : Rational(1);
    lt.g_power = t.contains("g_power") ? t["g_power"].get<int>() : 1;
    terms.push_back(lt);
  }
  auto built = build_interaction_operator(ctx.theory, terms);
  ctx.result["warnings"] = built.warnings;
  return built.layers.at(0);
}

// ---- subcommands ---------------------------------------------------------

void cmd_basis(Context& ctx) {
  const Rational d = rational_of(ctx.cfg["d_max"]);
  auto basis = enumerate_basis(ctx.theory, d);
  json ops = json::array();
  ctx.csv.push_back({"index", "operator", "dimension", "ghost_number", "parity"});
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const auto& o = basis.operators[i];
    ops.push_back({{"index", i},
                   {"operator", to_string(ctx.theory, o)},
                   {"dimension", to_string(o.dimension())},
                   {"ghost_number", o.ghost_number()},
                   {"parity", o.parity()}});
    ctx.csv.push_back({std::to_string(i), to_string(ctx.theory, o), to_string(o.dimension()),
                       std::to_string(o.ghost_number()), std::to_string(o.parity())});
  }
  ctx.result["d_max"] = to_string(d);
  ctx.result["delta"] = to_string(basis.delta);
  ctx.result["count"] = basis.size();
  ctx.result["operators"] = ops;
}

void cmd_free_ope(Context& ctx) {
  const auto& s = section(ctx.cfg, "ope");
  const auto a = operators_of(ctx.theory, get<json>(s, "a", "ope"));
  const auto b = parse_operator(ctx.theory, get<std::string>(s, "b", "ope"));
  const auto coef = free_ope_coefficient(ctx.theory, a, b);
  const double mu = ctx.cfg["mu"].get<double>();
  ctx.result["a"] = names_of(ctx.theory, a);
  ctx.result["b"] = to_string(ctx.theory, b);
  ctx.result["symbolic"] = symbolic_json(coef);
  json samples = json::array();
  ctx.csv.push_back({"sample", "value"});
  if (s.contains("points")) {
    const auto desc = coefficient_descriptor(ctx, a, b, 0);
    CompiledCoefficient compiled(coef);
    std::size_t i = 0;
    for (const auto& xs : s["points"]) {
      const auto x = points_of(xs);
      if (x.size() != a.size()) throw ConfigError("CONFIG_INVALID", "need one point per operator");
      auto v = cached_sample(ctx, desc, x, [&] { return Sample{compiled(x, mu), 0.0}; });
      samples.push_back({{"x", json_of(x)}, {"value", v.value}});
      std::ostringstream os;
      os << std::setprecision(17) << v.value;
      ctx.csv.push_back({std::to_string(i++), os.str()});
    }
  }
  ctx.result["samples"] = samples;
}

void cmd_recursion(Context& ctx) {
  const auto& s = section(ctx.cfg, "ope");
  const auto a = operators_of(ctx.theory, get<json>(s, "a", "ope"));
  const auto b = parse_operator(ctx.theory, get<std::string>(s, "b", "ope"));
  const auto inter = interaction_of(ctx);
  FirstOrderOptions opts;
  opts.quadrature = quadrature_of(ctx.cfg);
  RecursionIntegrand integrand(ctx.theory, a, b, inter);
  json interaction = json::object();
  for (const auto& [e, c] : inter.coefficients) interaction[to_string(ctx.theory, e)] = to_string(c);
  ctx.result["a"] = names_of(ctx.theory, a);
  ctx.result["b"] = to_string(ctx.theory, b);
  ctx.result["interaction"] = interaction;
  ctx.result["integrand_terms"] = integrand.symbolic().size();
  ctx.result["integrand_identically_zero"] = integrand.identically_zero();
  const auto desc = coefficient_descriptor(ctx, a, b, 1);
  json samples = json::array();
  ctx.csv.push_back({"sample", "value", "error"});
  std::size_t i = 0;
  for (const auto& xs : get<json>(s, "points", "ope")) {
    const auto x = points_of(xs);
    if (x.size() != a.size()) throw ConfigError("CONFIG_INVALID", "need one point per operator");
    bool converged = true;
    auto v = cached_sample(ctx, desc, x, [&] {
      auto r = integrate_first_order(ctx.theory, a, b, inter, x, opts);
      converged = r.converged;
      return Sample{r.value, r.error};
    });
    if (!converged) throw Error("NOT_CONVERGED", "first-order integral did not reach the tolerance");
    samples.push_back({{"x", json_of(x)}, {"value", v.value}, {"error", v.error}});
    std::ostringstream vs, es;
    vs << std::setprecision(17) << v.value;
    es << std::setprecision(17) << v.error;
    ctx.csv.push_back({std::to_string(i++), vs.str(), es.str()});
  }
  ctx.result["samples"] = samples;
}

void cmd_ward(Context& ctx) {
  const json empty = json::object();
  const json& s = ctx.cfg.contains("ward") ? ctx.cfg["ward"] : empty;
  const Rational d_max = s.contains("d_max") ? rational_of(s["d_max"]) : rational_of(ctx.cfg["d_max"]);
  const Rational a_max = s.contains("a_dmax") ? rational_of(s["a_dmax"]) : Rational(2);
  std::vector<std::vector<CompositeOperator>> tuples;
  if (s.contains("a")) {
    tuples.push_back(operators_of(ctx.theory, s["a"]));
  } else {
    std::vector<CompositeOperator> ops;
    for (const auto& o : enumerate_basis(ctx.theory, a_max).operators)
      if (!o.is_unit()) ops.push_back(o);
    for (const auto& x : ops)
      for (const auto& y : ops) tuples.push_back({x, y});
  }
  const std::size_t targets_per_tuple = enumerate_basis(ctx.theory, d_max).size();
  std::size_t checked = 0, touched = 0;
  json nonzero = json::array();
  ctx.csv.push_back({"a", "b", "terms"});
  for (const auto& a : tuples) {
    std::vector<OperatorPolynomial> polys;
    for (const auto& o : a) polys.push_back(single(o));
    checked += targets_per_tuple;
    for (const auto& [b, k] : ward_residuals(ctx.theory, polys, d_max)) {
      ++touched;
      if (k.is_zero()) continue;
      nonzero.push_back({{"a", names_of(ctx.theory, a)}, {"b", to_string(ctx.theory, b)}, {"terms", k.size()}});
      std::string an;
      for (const auto& n : names_of(ctx.theory, a)) an += (an.empty() ? "" : " ") + n;
      ctx.csv.push_back({an, to_string(ctx.theory, b), std::to_string(k.size())});
    }
  }
  // Pointwise K on random draws, through the numeric path.
  const int draws = s.contains("draws") ? s["draws"].get<int>() : 0;
  json numeric = json::array();
  if (draws > 0) {
    const double mu = ctx.cfg["mu"].get<double>();
    auto basis = enumerate_basis(ctx.theory, d_max + 1);
    auto q = to_q_matrix(free_q_matrix(ctx.theory, basis));
    auto provider = free_coefficient_provider(ctx.theory, mu);
    auto targets = enumerate_basis(ctx.theory, d_max).operators;
    std::mt19937_64 rng(ctx.cfg["seed"].get<std::uint64_t>());
    std::normal_distribution<double> gauss;
    for (int n = 0; n < draws; ++n) {
      const auto& a = tuples[std::uniform_int_distribution<std::size_t>(0, tuples.size() - 1)(rng)];
      const auto& b = targets[std::uniform_int_distribution<std::size_t>(0, targets.size() - 1)(rng)];
      std::vector<Vec4> x(a.size());
      for (std::size_t i = 0; i + 1 < x.size(); ++i)
        for (auto& c : x[i]) c = gauss(rng) / mu;
      auto k = evaluate_K(ctx.theory, b, a, d_max + 1, x, provider, q, BMatrix{}, basis);
      numeric.push_back({{"a", names_of(ctx.theory, a)}, {"b", to_string(ctx.theory, b)}, {"x", json_of(x)}, {"K", k.value}});
    }
  }
  ctx.result["d_max"] = to_string(d_max);
  ctx.result["residuals_checked"] = checked;
  ctx.result["residuals_with_terms"] = touched;
  ctx.result["nonzero"] = nonzero;
  ctx.result["numeric"] = numeric;
}

void cmd_scaling(Context& ctx) {
  const auto& s = section(ctx.cfg, "ope");
  const auto a = operators_of(ctx.theory, get<json>(s, "a", "ope"));
  const auto b = parse_operator(ctx.theory, get<std::string>(s, "b", "ope"));
  const auto& pts = get<json>(s, "points", "ope");
  if (!pts.is_array() || pts.empty()) throw ConfigError("CONFIG_INVALID", "scaling needs one point set");
  const auto x = points_of(pts[0]);
  ScalingGrid grid;
  if (ctx.cfg.contains("scaling")) {
    const auto& g = ctx.cfg["scaling"];
    if (g.contains("points")) grid.points = g["points"].get<int>();
    if (g.contains("tau_min")) grid.tau_min = g["tau_min"].get<double>();
    if (g.contains("fit_points")) grid.fit_points = g["fit_points"].get<int>();
  }
  const double mu = ctx.cfg["mu"].get<double>();
  CompiledCoefficient c(free_ope_coefficient(ctx.theory, a, b));
  auto fit = scaling_degree([&](const std::vector<Vec4>& y) { return c(y, mu); }, x, grid);
  Rational da(0);
  for (const auto& o : a) da += o.dimension();
  const double expected = to_double(b.dimension() - da);
  ctx.result["a"] = names_of(ctx.theory, a);
  ctx.result["b"] = to_string(ctx.theory, b);
  ctx.result["slope"] = fit.slope;
  ctx.result["stderr"] = fit.stderr_slope;
  ctx.result["ci95"] = {fit.ci_low, fit.ci_high};
  ctx.result["expected_min"] = expected;
  ctx.result["underflow"] = fit.underflow;
  ctx.result["pass"] = fit.passes(expected);
  json rows = json::array();
  ctx.csv.push_back({"tau", "value"});
  for (std::size_t i = 0; i < fit.tau.size(); ++i) {
    rows.push_back({{"tau", fit.tau[i]}, {"value", fit.values[i]}});
    std::ostringstream t, v;
    t << std::setprecision(17) << fit.tau[i];
    v << std::setprecision(17) << fit.values[i];
    ctx.csv.push_back({t.str(), v.str()});
  }
  ctx.result["grid"] = rows;
}

void cmd_assoc(Context& ctx) {
  const auto& s = section(ctx.cfg, "assoc");
  const auto a = operators_of(ctx.theory, get<json>(s, "a", "assoc"));
  const auto b = parse_operator(ctx.theory, get<std::string>(s, "b", "assoc"));
  const auto x = points_of(get<json>(s, "points", "assoc"));
  if (a.size() != 3 || x.size() != 3) throw ConfigError("CONFIG_INVALID", "assoc needs three operators and three points");
  json truncs = s.contains("d_trunc") ? s["d_trunc"] : json::array({2, 4, 6, 8});
  json rows = json::array();
  ctx.csv.push_back({"d_trunc", "lhs", "rhs", "residual", "terms"});
  for (const auto& d : truncs) {
    const Rational dt = rational_of(d);
    auto r = check_associativity(ctx.theory, a[0], a[1], a[2], b, x[0], x[1], x[2], dt, ctx.cfg["mu"].get<double>());
    rows.push_back({{"d_trunc", to_string(dt)}, {"lhs", r.lhs}, {"rhs", r.rhs}, {"residual", r.residual}, {"terms", r.terms}});
    std::ostringstream l, rh, re;
    l << std::setprecision(17) << r.lhs;
    rh << std::setprecision(17) << r.rhs;
    re << std::setprecision(17) << r.residual;
    ctx.csv.push_back({to_string(dt), l.str(), rh.str(), re.str(), std::to_string(r.terms)});
  }
  ctx.result["a"] = names_of(ctx.theory, a);
  ctx.result["b"] = to_string(ctx.theory, b);
  ctx.result["rows"] = rows;
}

void cmd_trees(Context& ctx) {
  LemmaOptions o;
  o.seed = ctx.cfg["seed"].get<std::uint64_t>();
  o.samples = 2000;
  if (ctx.cfg.contains("trees") && ctx.cfg["trees"].contains("samples"))
    o.samples = ctx.cfg["trees"]["samples"].get<std::size_t>();
  json rows = json::array();
  ctx.csv.push_back({"lemma", "status", "samples", "violations", "worst_log_ratio"});
  for (const auto& r : run_tree_lemmas(o)) {
    const bool pass = r.violations == 0;
    rows.push_back({{"lemma", r.name},
                    {"status", pass ? "PASS" : "FAIL"},
                    {"samples", r.samples},
                    {"violations", r.violations},
                    {"worst_log_ratio", r.worst_log_ratio},
                    {"counterexample", r.counterexample}});
    std::ostringstream w;
    w << std::setprecision(17) << r.worst_log_ratio;
    ctx.csv.push_back({r.name, pass ? "PASS" : "FAIL", std::to_string(r.samples), std::to_string(r.violations), w.str()});
  }
  ctx.result["lemmas"] = rows;
}

std::string csv_text(const std::vector<std::vector<std::string>>& rows) {
  std::string out;
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      const bool quote = row[i].find_first_of(",\"") != std::string::npos;
      if (quote) {
        out += '"';
        for (char c : row[i]) out += c == '"' ? std::string("\"\"") : std::string(1, c);
        out += '"';
      } else {
        out += row[i];
      }
    }
    out += '\n';
  }
  return out;
}

void write_file(const fs::path& p, const std::string& text) {
  auto tmp = p;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    os << text;
    if (!os) throw std::runtime_error("cannot write " + p.string());
  }
  fs::rename(tmp, p);
}

void report(std::ostream& err, const std::string& code, const std::string& message) {
  err << json{{"error", {{"code", code}, {"message", message}}}}.dump() << '\n';
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Operator product expansion toolkit"};
  app.set_version_flag("--version", kVersion);
  std::string config_path, out_dir = ".", format, dmax;
  std::optional<double> tol;
  std::optional<std::uint64_t> seed;
  app.add_option("--config", config_path, "run configuration (JSON, schema_version 1)");
  app.add_option("--out", out_dir, "directory for result and manifest files");
  app.add_option("--tol", tol, "quadrature relative tolerance");
  app.add_option("--seed", seed, "random seed");
  app.add_option("--dmax", dmax, "maximal operator dimension (rational)");
  app.add_option("--format", format, "output format")->check(CLI::IsMember({"json", "csv"}));
  app.fallthrough();
  app.require_subcommand(1, 1);
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"basis", "enumerate the operator basis"},
      {"free-ope", "free OPE coefficient, symbolic terms and samples"},
      {"recursion", "first-order coefficient from the recursion formula"},
      {"ward", "gauge Ward residuals K of the free theory"},
      {"scaling", "scaling degree of a free coefficient"},
      {"assoc", "associativity residuals over truncation dimensions"},
      {"trees-check", "randomized tree-weight lemma checks"}};
  for (const auto& [name, help] : commands) app.add_subcommand(name, help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    report(err, "USAGE", e.what());
    return 2;
  }
  const std::string sub = app.get_subcommands().front()->get_name();
  const auto start = std::chrono::steady_clock::now();

  json cfg;
  try {
    cfg = load_config(config_path);
    if (tol) cfg["quadrature"]["rel_tol"] = *tol;
    if (seed) cfg["seed"] = *seed;
    if (!dmax.empty()) cfg["d_max"] = dmax;
    if (!format.empty()) cfg["format"] = format;
    const auto f = cfg["format"].get<std::string>();
    if (f != "json" && f != "csv") throw ConfigError("CONFIG_INVALID", "format must be json or csv");
    if (!cfg["theory"].is_string()) throw ConfigError("CONFIG_INVALID", "theory must be a built-in theory name");
    (void)theory_by_name(cfg["theory"].get<std::string>());
    (void)rational_of(cfg["d_max"]);
    (void)quadrature_of(cfg);
  } catch (const ConfigError& e) {
    report(err, e.code, e.what());
    return 2;
  } catch (const std::exception& e) {
    report(err, "CONFIG_INVALID", e.what());
    return 2;
  }

  // the cache location does not change results, so it stays out of the hash
  fs::path cache_dir = fs::path(out_dir) / ".ope-cache";
  if (const char* env = std::getenv("OPE_CACHE_DIR"); env && *env) cache_dir = env;
  else if (cfg.contains("cache_dir")) cache_dir = cfg["cache_dir"].get<std::string>();
  json hashed = cfg;
  hashed.erase("cache_dir");
  const std::string config_hash = sha256_hex(hashed.dump());

  int status = 0;
  try {
    Context ctx{cfg, theory_by_name(cfg["theory"].get<std::string>()), EvaluationCache(cache_dir),
                cfg["format"].get<std::string>(), json::object(), {}};
    ctx.result["subcommand"] = sub;
    ctx.result["theory"] = cfg["theory"];
    if (sub == "basis") cmd_basis(ctx);
    else if (sub == "free-ope") cmd_free_ope(ctx);
    else if (sub == "recursion") cmd_recursion(ctx);
    else if (sub == "ward") cmd_ward(ctx);
    else if (sub == "scaling") cmd_scaling(ctx);
    else if (sub == "assoc") cmd_assoc(ctx);
    else cmd_trees(ctx);

    fs::create_directories(out_dir);
    const bool csv = ctx.format == "csv";
    const std::string text = csv ? csv_text(ctx.csv) : ctx.result.dump(2) + "\n";
    const fs::path result_path = fs::path(out_dir) / (csv ? "result.csv" : "result.json");
    write_file(result_path, text);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    json manifest = {
        {"subcommand", sub},
        {"config_hash", config_hash},
        {"result_file", result_path.filename().string()},
        {"result_hash", sha256_hex(text)},
        {"effective_config", hashed},
        {"versions", {{"ope", kVersion}, {"schema_version", kSchemaVersion}, {"boost", BOOST_LIB_VERSION}, {"compiler", __VERSION__}}},
        {"timings", {{"wall_seconds", seconds}}},
        {"cache", {{"dir", cache_dir.string()}, {"hits", ctx.cache.hits()}, {"misses", ctx.cache.misses()}}},
    };
    write_file(fs::path(out_dir) / "manifest.json", manifest.dump(2) + "\n");
    out << result_path.string() << '\n';
  } catch (const ConfigError& e) {
    report(err, e.code, e.what());
    status = 2;
  } catch (const Error& e) {
    report(err, e.code(), e.what());
    status = 1;
  } catch (const std::exception& e) {
    report(err, "INTERNAL", e.what());
    status = 1;
  }
  return status;
}

}  // namespace ope::cli
