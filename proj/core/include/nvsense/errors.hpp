#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <variant>

namespace nvsense {

// Base for all library failures that are not plain precondition violations.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Adaptive step control could not meet the requested tolerance.
class IntegrationError : public Error {
 public:
  using Error::Error;
};

// A bracketing search found no sign change on the admissible interval.
class NoRootError : public Error {
 public:
  using Error::Error;
};

// Signal slope with respect to the target component is zero, so the field
// cannot be inferred (zero contrast, or an echo filter sitting on a null).
class DegenerateSignalError : public Error {
 public:
  using Error::Error;
};

enum class FailureKind { degenerate_signal, no_root, invalid_plan };

struct Failure {
  FailureKind kind;
  std::string message;
};

// Either a value or a tagged failure. Used where a failure is an expected
// outcome of the physics (a zero slope) rather than a programming error.
template <class T>
class Outcome {
 public:
  Outcome(T value) : data_(std::move(value)) {}  // NOLINT(implicit)
  Outcome(Failure failure) : data_(std::move(failure)) {}  // NOLINT(implicit)

  [[nodiscard]] bool ok() const noexcept { return std::holds_alternative<T>(data_); }
  explicit operator bool() const noexcept { return ok(); }

  [[nodiscard]] const T& value() const& {
    if (!ok()) {
      const Failure& f = failure();
      switch (f.kind) {
        case FailureKind::degenerate_signal: throw DegenerateSignalError(f.message);
        case FailureKind::no_root: throw NoRootError(f.message);
        case FailureKind::invalid_plan: break;
      }
      throw Error(f.message);
    }
    return std::get<T>(data_);
  }
  [[nodiscard]] const Failure& failure() const& { return std::get<Failure>(data_); }

  const T& operator*() const& { return value(); }
  const T* operator->() const { return &value(); }

 private:
  std::variant<T, Failure> data_;
};

}  // namespace nvsense
