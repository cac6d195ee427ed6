#pragma once

#include <stdexcept>
#include <string>

namespace mixcycle {

// Malformed or unreadable datasets, manifests, masks, point-cloud files.
struct DataError : std::runtime_error {
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Invalid configuration values, unknown keys, inconsistent run setups.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mixcycle
