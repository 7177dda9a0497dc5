#pragma once

#include <stdexcept>
#include <string>

namespace steer {

/// Invalid or inconsistent configuration (bad file, zero vehicles, unknown task id...).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error("config: " + what) {}
};

/// A scheduling action that cannot be applied to the current environment state.
class IllegalAction : public std::runtime_error {
 public:
  explicit IllegalAction(const std::string& what) : std::runtime_error("illegal action: " + what) {}
};

/// Numerical failure during learning (non-finite loss or parameters).
class TrainingError : public std::runtime_error {
 public:
  explicit TrainingError(const std::string& what) : std::runtime_error("training: " + what) {}
};

/// Caller broke a precondition (dimension mismatch, empty input...).
class ContractViolation : public std::logic_error {
 public:
  explicit ContractViolation(const std::string& what) : std::logic_error("contract: " + what) {}
};

}  // namespace steer
