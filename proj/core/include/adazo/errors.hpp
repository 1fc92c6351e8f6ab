#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace adazo {

/// Oracle returned a non-finite value. probe_index is the offending probe
/// (0-based), or -1 for the base evaluation.
class EvalFailure : public std::runtime_error {
 public:
  EvalFailure(int probe_index, const std::string& what)
      : std::runtime_error(what), probe_index(probe_index) {}
  int probe_index;
};

/// Config validation failure carrying every violation, not just the first.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> violations)
      : std::runtime_error(join(violations)),
        violations(std::move(violations)) {}
  std::vector<std::string> violations;

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string out = "invalid config:";
    for (const auto& s : v) {
      out += "\n  - " + s;
    }
    return out;
  }
};

}  // namespace adazo
