#pragma once

#include <stdexcept>
#include <string>

namespace pursuitlab {

// Bad or inconsistent configuration (scenario files, CLI flags, checkpoint
// headers). Mapped to exit code 2 by the CLI.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A precondition of an operation was violated (unknown action, mismatched
// distribution supports, k out of range, ...).
class DomainError : public std::runtime_error {
 public:
  explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite values or violated numerical invariants.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace pursuitlab
