#pragma once

#include <stdexcept>
#include <string>

namespace ope {

// Every module error carries a stable machine-readable code; the CLI
// forwards it verbatim in its error JSON.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

inline Error singular_input(const std::string& what) { return {"SINGULAR_INPUT", what}; }
inline Error size_guard(const std::string& what) { return {"SIZE_GUARD", what}; }
inline Error domain_violation(const std::string& what) { return {"DOMAIN_VIOLATION", what}; }
inline Error missing_layer(const std::string& what) { return {"MISSING_LAYER", what}; }
inline Error incompatible(const std::string& what) { return {"INCOMPATIBLE", what}; }
inline Error invalid_argument(const std::string& what) { return {"INVALID_ARGUMENT", what}; }

}  // namespace ope
