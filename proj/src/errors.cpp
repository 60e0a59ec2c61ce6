#include "ibf/errors.hpp"

namespace ibf {

namespace {
std::string join(const std::vector<std::string>& items) {
  std::string out = "invalid configuration";
  for (const auto& item : items) out += "\n  - " + item;
  return out;
}
}  // namespace

ConfigError::ConfigError(std::vector<std::string> violations)
    : std::runtime_error(join(violations)), violations_(std::move(violations)) {}

}  // namespace ibf
