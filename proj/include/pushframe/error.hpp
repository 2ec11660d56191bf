#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pushframe {

// Base for every error the library raises. The CLI maps the concrete type to
// an exit code (validation 1, io/format 2, invariant 3).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad argument or configuration: invalid order, shape mismatch, unknown kind.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A constraint that cannot be met within the search budget.
class InfeasibleError : public ValidationError {
 public:
  InfeasibleError(const std::string& what, int best_run)
      : ValidationError(what), best_run_(best_run) {}
  int best_run() const noexcept { return best_run_; }

 private:
  int best_run_;
};

// Malformed or unreadable file. Offset is the byte position where parsing
// failed, or npos when not applicable.
class FormatError : public Error {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  explicit FormatError(const std::string& what, std::size_t offset = npos)
      : Error(offset == npos ? what : what + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// Metadata of two artifacts disagree (pattern/stream/calibration digests).
class DigestMismatch : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class InvariantError : public Error {
 public:
  using Error::Error;
};

}  // namespace pushframe
