#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace ldreg {

/// Bad arguments or configuration (CLI exit code 1).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed, unreadable or non-finite input data (CLI exit code 2).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A computation that cannot produce a finite answer (CLI exit code 3).
/// Carries the offending sample index when one is meaningful.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what,
                        std::optional<std::size_t> index = std::nullopt)
      : std::runtime_error(index ? what + " (sample " + std::to_string(*index) + ")" : what),
        index_(index) {}

  /// Wraps `cause` behind a context prefix, keeping its sample index.
  NumericError(const std::string& prefix, const NumericError& cause)
      : std::runtime_error(prefix + cause.what()), index_(cause.index_) {}

  std::optional<std::size_t> index() const noexcept { return index_; }

 private:
  std::optional<std::size_t> index_;
};

/// A numeric failure inside a training loop, tagged with its epoch.
class TrainingError : public NumericError {
 public:
  TrainingError(std::size_t epoch, const NumericError& cause)
      : NumericError("epoch " + std::to_string(epoch) + ": ", cause),
        epoch_(epoch) {}

  std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t epoch_;
};

}  // namespace ldreg
