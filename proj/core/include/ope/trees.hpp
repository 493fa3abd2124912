#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "ope/covariance.hpp"
#include "ope/multi_index.hpp"

namespace ope {

constexpr int kMaxSubsetMomenta = 12;

// Kinematic functions of a momentum set; subsets are scanned exhaustively.
struct Kinematics {
  std::vector<Vec4> q;
  double mu = 1;

  double abs_sup() const;             // |q| = sup over subsets of |sum|
  double eta_i(std::size_t i) const;  // subsets of {q_1..q_{n-1}} \ {q_i}
  double eta() const;                 // inf over i < n of eta_i
  double bar_eta_i(std::size_t i) const;
  double bar_eta() const;
};

enum class VertexKind : std::uint8_t { external, internal, special };

struct TreeVertex {
  VertexKind kind = VertexKind::internal;
  double dim = 1;      // [v_e] for externals
  MultiIndex w;        // derivative multi-index of an external
};

// External vertices carry momenta in order of appearance in `vertices`.
class WeightedTree {
 public:
  std::vector<TreeVertex> vertices;
  std::vector<std::pair<int, int>> lines;
  double v_p = 0;  // particular dimension

  int add_vertex(VertexKind k, double dim = 1, MultiIndex w = {});
  void connect(int a, int b);

  bool has_special() const;
  int special() const;  // -1 if none
  std::vector<int> externals() const;  // vertex ids in momentum order
  int valence(int v) const;
  std::vector<int> neighbours(int v) const;
  int total_w() const;

  // Connected, acyclic, valence rules, externals attached to internal/special,
  // and w = 0 on the last external when there is no special vertex.
  std::optional<std::string> validate() const;
};

// Line momentum magnitudes for the given external momenta (order of externals()).
std::vector<double> line_momenta(const WeightedTree& t, const std::vector<Vec4>& q);

double weight_factor(const WeightedTree& t, const std::vector<Vec4>& q, double mu, double lambda);
// log of weight_factor; the lemma checks compare in log space.
double log_weight_factor(const WeightedTree& t, const std::vector<Vec4>& q, double mu,
                         double lambda);

// [T] = 4 + v_p - sum [v_e] - |w| (no special vertex), v_p - sum [v_e] - |w| otherwise.
double tree_dimension(const WeightedTree& t);
// Sum of all exponents in the weight; equals tree_dimension.
double tree_exponent_sum(const WeightedTree& t);

enum class Relevance { relevant, marginal, irrelevant };
Relevance classify(const WeightedTree& t, double eps = 1e-12);

// One reduction step, or nothing if the tree is fully reduced.
std::optional<WeightedTree> reduce_once(const WeightedTree& t);
WeightedTree reduce(const WeightedTree& t);
bool fully_reduced(const WeightedTree& t);

enum class FuseMode { special_merge, line_join };

struct FusedTree {
  WeightedTree tree;
  std::vector<Vec4> momenta;
  double divisor_exponent = 0;  // [v_M] + [v_N] - 4 for line joins
  int join_momentum_index = -1;
};

// special_merge: both trees carry a special vertex, merged into one.
// line_join: T1's external v1 (last, if T1 has no special vertex) carries -k and
// T2's external v2 (first, if T2 has no special vertex) carries k; both are removed
// and their lines joined. v1 must have w = 0; the w of v2 moves to the external of
// T1 given by `w_target` (index into T1's externals).
FusedTree fuse(const WeightedTree& t1, const std::vector<Vec4>& q1, const WeightedTree& t2,
               const std::vector<Vec4>& q2, FuseMode mode, int v1 = -1, int v2 = -1,
               int w_target = 0);

// Remove external vertex `ext` (index into externals()) and its line.
WeightedTree amputate(const WeightedTree& t, int ext);

// g^(s)(O, r, |w|) = (O + s)(r + 3s - 3) + sup(O + s - |w|, 0)
double gs(int s, double dim, int r, int w_abs);

// Xi-type functions of the insertion points (x.back() = 0 by convention).
enum class XiVariant { xi, xi1, xi2, varxi, varxi1 };

struct XiParams {
  double p = 0;
  double p_prime = 0;
  double s_prime = 0;  // for the varxi variants
  double rho = 0;
};

double xi(XiVariant v, const XiParams& params, const std::vector<Vec4>& x, double lambda,
          double lambda1, double mu);

struct RandomTreeOptions {
  int max_external = 8;
  int max_internal = 6;
  bool special = false;
  bool allow_negative_vp = false;
  int max_w = 2;
};

struct TreeSample {
  WeightedTree tree;
  std::vector<Vec4> q;
};

// Rejection-sampled random tree with momenta; conserving momenta when there is
// no special vertex. The tree is returned as generated (not reduced).
TreeSample random_tree(std::mt19937_64& rng, const RandomTreeOptions& opts);

// Random momentum set with occasional near-exceptional partial sums.
std::vector<Vec4> random_momenta(std::mt19937_64& rng, int n, bool conserve);

struct LemmaReport {
  std::string name;
  std::size_t samples = 0;
  std::size_t violations = 0;
  double worst_log_ratio = -1e300;  // max over samples of log(lhs / rhs)
  std::string counterexample;        // first violation, human readable
};

struct LemmaOptions {
  std::size_t samples = 10000;
  std::uint64_t seed = 20240601;
  double log_tolerance = 1e-9;
};

// Randomized checks of the weight-factor inequalities, reduction monotonicity,
// the large-Lambda scaling limit and the g^(s) properties.
std::vector<LemmaReport> run_tree_lemmas(const LemmaOptions& opts = {});

}  // namespace ope
