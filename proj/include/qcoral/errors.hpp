#pragma once

#include <stdexcept>
#include <string>

namespace qcoral {

/// Broad failure class; the CLI maps each onto a process exit code.
enum class ErrorKind {
  usage,      // bad configuration or arguments (exit 2)
  data,       // unreadable / malformed / inconsistent input data (exit 3)
  numerical,  // non-finite values, convergence failure (exit 4)
};

/// Base exception. `module()` names the subsystem that raised it so the CLI
/// can report provenance.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string module, const std::string& what)
      : std::runtime_error(module + ": " + what), kind_(kind), module_(std::move(module)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& module() const noexcept { return module_; }

 private:
  ErrorKind kind_;
  std::string module_;
};

class DimensionError : public Error {
 public:
  DimensionError(std::string module, const std::string& what)
      : Error(ErrorKind::data, std::move(module), "dimension error: " + what) {}
};

class ValidationError : public Error {
 public:
  ValidationError(std::string module, const std::string& what)
      : Error(ErrorKind::data, std::move(module), "validation error: " + what) {}
};

class DataError : public Error {
 public:
  DataError(std::string module, const std::string& what)
      : Error(ErrorKind::data, std::move(module), what) {}
};

class ConfigError : public Error {
 public:
  ConfigError(std::string module, const std::string& what)
      : Error(ErrorKind::usage, std::move(module), "configuration error: " + what) {}
};

class NumericalError : public Error {
 public:
  NumericalError(std::string module, const std::string& what)
      : Error(ErrorKind::numerical, std::move(module), what) {}
};

}  // namespace qcoral
