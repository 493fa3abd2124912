#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"

namespace ope::cli {

inline constexpr int kSchemaVersion = 1;

std::string sha256_hex(std::string_view data);

// Content-addressed JSON store: <dir>/<first two hex>/<rest>.json, written
// through a temporary file and rename so readers never see partial files.
class EvaluationCache {
 public:
  explicit EvaluationCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

  static std::string key_of(const nlohmann::json& descriptor) { return sha256_hex(descriptor.dump()); }

  std::optional<nlohmann::json> load(const std::string& key);
  void store(const std::string& key, const nlohmann::json& value);

  std::filesystem::path path_of(const std::string& key) const;
  const std::filesystem::path& dir() const { return dir_; }
  std::size_t hits() const { return hits_; }
  std::size_t misses() const { return misses_; }

 private:
  std::filesystem::path dir_;
  std::size_t hits_ = 0;
  std::size_t misses_ = 0;
};

// Full driver: parses argv, runs one subcommand, writes result and manifest
// under --out. Returns 0 on success, 1 on computation failure, 2 on usage or
// configuration errors; errors go to `err` as JSON.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ope::cli
