#pragma once

#include <stdexcept>
#include <string>

namespace pheno {

// Malformed or out-of-contract input data (exit code 1 in the CLI).
class InputError : public std::invalid_argument {
 public:
  explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

// Inconsistent configuration values (exit code 1 in the CLI).
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

// Non-finite values during training or inference (exit code 2 in the CLI).
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace pheno
