#pragma once

#include <stdexcept>
#include <string>

namespace subflow {

/// Bad argument or data that violates a documented precondition.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

/// Two fields (or specs) that must live on the same mesh do not.
class MeshMismatch : public ValidationError {
 public:
  explicit MeshMismatch(const std::string& what) : ValidationError(what) {}
};

/// A reaction term breaks the structural assumptions (sign rule, limit at zero).
class AdmissibilityError : public ValidationError {
 public:
  explicit AdmissibilityError(const std::string& what) : ValidationError(what) {}
};

/// Explicit step would violate dtau * K < 1.
class StabilityError : public ValidationError {
 public:
  explicit StabilityError(const std::string& what) : ValidationError(what) {}
};

/// Malformed or incomplete run configuration.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace subflow
