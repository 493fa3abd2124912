#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "driver.hpp"
#include "ope/wick.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int status;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "ope");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int status = ope::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {status, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("ope-cli-" + std::to_string(std::random_device{}()));
    fs::create_directories(dir_);
    unsetenv("OPE_CACHE_DIR");
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write_config(const json& j, const std::string& name = "config.json") {
    const auto p = dir_ / name;
    std::ofstream(p) << j.dump();
    return p.string();
  }
  std::string out(const std::string& name = "out") const { return (dir_ / name).string(); }
  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
  }
  static json load(const fs::path& p) { return json::parse(slurp(p)); }

  fs::path dir_;
};

json propagator_config() {
  return {{"schema_version", 1},
          {"ope", {{"a", {"phi", "phi"}}, {"b", "1"}, {"points", {{{0.3, 0.1, 0, 0}, {0, 0, 0, 0}}}}}}};
}

}  // namespace

TEST_F(CliTest, MissingConfig) {
  const auto r = run({"basis", "--config", (dir_ / "nope.json").string(), "--out", out()});
  EXPECT_EQ(r.status, 2);
  EXPECT_EQ(json::parse(r.err)["error"]["code"], "CONFIG_NOT_FOUND");
}

TEST_F(CliTest, InvalidConfigs) {
  const auto bad_json = dir_ / "bad.json";
  std::ofstream(bad_json) << "{not json";
  for (const std::string& path :
       {bad_json.string(), write_config({{"schema_version", 2}}, "v2.json"),
        write_config({{"schema_version", 1}, {"colour", "red"}}, "extra.json"),
        write_config({{"schema_version", 1}, {"theory", "yang-mills"}}, "theory.json"),
        write_config({{"schema_version", 1}, {"quadrature", {{"rel_tol", -1}}}}, "tol.json")}) {
    const auto r = run({"basis", "--config", path, "--out", out()});
    EXPECT_EQ(r.status, 2) << path;
    EXPECT_EQ(json::parse(r.err)["error"]["code"], "CONFIG_INVALID") << path;
  }
}

TEST_F(CliTest, UsageErrors) {
  const auto cfg = write_config({{"schema_version", 1}});
  EXPECT_EQ(run({"--config", cfg}).status, 2);
  EXPECT_EQ(run({"basis", "--config", cfg, "--format", "xml"}).status, 2);
  EXPECT_EQ(run({"frobnicate", "--config", cfg}).status, 2);
}

TEST_F(CliTest, ComputationFailure) {
  // the scalar theory has no BRST rules
  const auto r = run({"ward", "--config", write_config({{"schema_version", 1}}), "--out", out()});
  EXPECT_EQ(r.status, 1);
  EXPECT_TRUE(json::parse(r.err)["error"].contains("code"));
}

TEST_F(CliTest, Basis) {
  const auto r = run({"basis", "--config", write_config({{"schema_version", 1}}), "--dmax", "2", "--out", out()});
  ASSERT_EQ(r.status, 0) << r.err;
  const auto j = load(fs::path(out()) / "result.json");
  EXPECT_EQ(j["count"], 7);
  EXPECT_EQ(j["operators"][0]["operator"], "1");
}

TEST_F(CliTest, FreeOpeJson) {
  const auto r = run({"free-ope", "--config", write_config(propagator_config()), "--out", out()});
  ASSERT_EQ(r.status, 0) << r.err;
  const auto j = load(fs::path(out()) / "result.json");
  ASSERT_EQ(j["symbolic"]["terms"].size(), 1u);
  EXPECT_EQ(j["symbolic"]["terms"][0]["coef"], "1/1");
  ASSERT_EQ(j["samples"].size(), 1u);
  EXPECT_NEAR(j["samples"][0]["value"].get<double>(), ope::eval_covariance({0.3, 0.1, 0, 0}, 1), 1e-16);
  const auto m = load(fs::path(out()) / "manifest.json");
  for (const char* k : {"config_hash", "result_hash", "versions", "timings", "effective_config", "cache"})
    EXPECT_TRUE(m.contains(k)) << k;
  EXPECT_EQ(m["effective_config"]["mu"], 1.0);
}

TEST_F(CliTest, RepeatedRunIsByteIdentical) {
  const auto cfg = write_config(propagator_config());
  ASSERT_EQ(run({"free-ope", "--config", cfg, "--out", out("a")}).status, 0);
  const auto cache = (fs::path(out("a")) / ".ope-cache").string();
  setenv("OPE_CACHE_DIR", cache.c_str(), 1);
  ASSERT_EQ(run({"free-ope", "--config", cfg, "--out", out("b")}).status, 0);
  unsetenv("OPE_CACHE_DIR");
  EXPECT_EQ(slurp(fs::path(out("a")) / "result.json"), slurp(fs::path(out("b")) / "result.json"));
  const auto ma = load(fs::path(out("a")) / "manifest.json");
  const auto mb = load(fs::path(out("b")) / "manifest.json");
  EXPECT_EQ(ma["config_hash"], mb["config_hash"]);
  EXPECT_EQ(ma["result_hash"], mb["result_hash"]);
  EXPECT_EQ(ma["cache"]["misses"], 1);
  EXPECT_EQ(mb["cache"]["hits"], 1);
  EXPECT_EQ(mb["cache"]["misses"], 0);
}

TEST_F(CliTest, CsvFormat) {
  const auto r = run({"free-ope", "--config", write_config(propagator_config()), "--format", "csv", "--out", out()});
  ASSERT_EQ(r.status, 0);
  const auto text = slurp(fs::path(out()) / "result.csv");
  EXPECT_EQ(text.substr(0, 13), "sample,value\n");
}

TEST_F(CliTest, CachedValuesMatchFreshEvaluation) {
  const auto th = ope::scalar_theory();
  const std::vector<std::pair<std::vector<std::string>, std::string>> cases = {
      {{"phi", "phi"}, "1"}, {{"phi^2", "phi^2"}, "phi^2"}, {{"phi^3", "phi"}, "phi*d1.phi"},
      {{"phi^2", "d2.phi"}, "phi"}, {{"phi^4", "phi^2"}, "phi^2"}};
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> coord(-1, 1);
  const auto cache = dir_ / "cache";
  setenv("OPE_CACHE_DIR", cache.c_str(), 1);
  for (const auto& [a, b] : cases) {
    json points = json::array();
    for (int n = 0; n < 10; ++n) points.push_back({{coord(rng), coord(rng), coord(rng), coord(rng)}, {0, 0, 0, 0}});
    json cfg = {{"schema_version", 1}, {"ope", {{"a", a}, {"b", b}, {"points", points}}}};
    ASSERT_EQ(run({"free-ope", "--config", write_config(cfg), "--out", out()}).status, 0);
  }
  unsetenv("OPE_CACHE_DIR");
  std::size_t checked = 0;
  for (const auto& entry : fs::recursive_directory_iterator(cache)) {
    if (entry.path().extension() != ".json") continue;
    const auto j = load(entry.path());
    std::vector<ope::CompositeOperator> a;
    for (const auto& s : j["descriptor"]["a"]) a.push_back(ope::parse_operator(th, s.get<std::string>()));
    const auto b = ope::parse_operator(th, j["descriptor"]["b"].get<std::string>());
    ope::CompiledCoefficient fresh(ope::free_ope_coefficient(th, a, b));
    for (const auto& [xkey, sample] : j["samples"].items()) {
      std::vector<ope::Vec4> x;
      for (const auto& p : json::parse(xkey)) x.push_back({p[0], p[1], p[2], p[3]});
      const double want = fresh(x, 1.0);
      EXPECT_NEAR(sample["value"].get<double>(), want, 1e-12 * std::max(1.0, std::abs(want)));
      ++checked;
    }
  }
  EXPECT_EQ(checked, 50u);
}

TEST_F(CliTest, CacheDirDoesNotChangeHash) {
  json cfg = propagator_config();
  ASSERT_EQ(run({"free-ope", "--config", write_config(cfg, "a.json"), "--out", out("a")}).status, 0);
  cfg["cache_dir"] = (dir_ / "elsewhere").string();
  ASSERT_EQ(run({"free-ope", "--config", write_config(cfg, "b.json"), "--out", out("b")}).status, 0);
  EXPECT_EQ(load(fs::path(out("a")) / "manifest.json")["config_hash"],
            load(fs::path(out("b")) / "manifest.json")["config_hash"]);
  EXPECT_TRUE(fs::exists(dir_ / "elsewhere"));
}

TEST_F(CliTest, FlagsOverrideConfig) {
  const auto cfg = write_config(propagator_config());
  ASSERT_EQ(run({"free-ope", "--config", cfg, "--out", out("a"), "--tol", "1e-9", "--seed", "7"}).status, 0);
  const auto m = load(fs::path(out("a")) / "manifest.json");
  EXPECT_EQ(m["effective_config"]["quadrature"]["rel_tol"], 1e-9);
  EXPECT_EQ(m["effective_config"]["seed"], 7);
}

TEST_F(CliTest, TreesCheck) {
  const auto cfg = write_config({{"schema_version", 1}, {"trees", {{"samples", 100}}}});
  const auto r = run({"trees-check", "--config", cfg, "--out", out()});
  ASSERT_EQ(r.status, 0);
  EXPECT_FALSE(load(fs::path(out()) / "result.json")["lemmas"].empty());
}

TEST_F(CliTest, CorruptCacheEntryIsRecomputed) {
  ope::cli::EvaluationCache c(dir_ / "c");
  const auto key = ope::cli::EvaluationCache::key_of({{"k", 1}});
  c.store(key, {{"v", 2}});
  EXPECT_EQ((*c.load(key))["v"], 2);
  std::ofstream(c.path_of(key)) << "{trunc";
  EXPECT_FALSE(c.load(key).has_value());
  EXPECT_EQ(c.hits(), 1u);
  EXPECT_EQ(c.misses(), 1u);
}

TEST(Sha256, KnownDigest) {
  EXPECT_EQ(ope::cli::sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
