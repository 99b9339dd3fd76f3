#pragma once

#include <stdexcept>
#include <string>

namespace burstlab {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parameter violates its documented domain (e.g. a zero gate slope).
class InvalidParameter : public Error {
 public:
  using Error::Error;
};

/// Malformed configuration or command line.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure failed (step-size underflow, no convergence).
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, double last_good_time)
      : Error(what), last_good_time_(last_good_time) {}
  explicit NumericalError(const std::string& what) : Error(what) {}

  double last_good_time() const noexcept { return last_good_time_; }

 private:
  double last_good_time_ = 0.0;
};

/// A trace does not show the crossing pattern an operation requires.
class ClassificationError : public Error {
 public:
  using Error::Error;
};

}  // namespace burstlab
