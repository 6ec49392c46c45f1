#pragma once

#include <stdexcept>
#include <string>

namespace diffplan {

// Process exit codes, one per error class. The CLI maps exceptions onto these.
enum class ErrorCategory : int {
  kConfig = 2,
  kIo = 3,
  kData = 4,
  kNumeric = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }
  int exit_code() const noexcept { return static_cast<int>(category_); }

 private:
  ErrorCategory category_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorCategory::kConfig, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorCategory::kIo, what) {}
};

/// No collision-free expert exists for the scene; callers regenerate with a new seed.
class InfeasibleScene : public Error {
 public:
  explicit InfeasibleScene(const std::string& what) : Error(ErrorCategory::kData, what) {}
};

class ShapeMismatch : public Error {
 public:
  explicit ShapeMismatch(const std::string& what) : Error(ErrorCategory::kNumeric, what) {}
};

class InvalidSchedule : public Error {
 public:
  explicit InvalidSchedule(const std::string& what) : Error(ErrorCategory::kConfig, what) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(ErrorCategory::kNumeric, what) {}
};

class DegenerateBatch : public Error {
 public:
  explicit DegenerateBatch(const std::string& what) : Error(ErrorCategory::kNumeric, what) {}
};

}  // namespace diffplan
