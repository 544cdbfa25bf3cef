#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace sublp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

/// Catalog parameters outside the admissible range of a family.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Two numerical refinements disagree beyond the contract tolerance.
class ToleranceError : public Error {
 public:
  using Error::Error;
};

class QuadratureError : public Error {
 public:
  QuadratureError(const std::string& what, double achieved_error)
      : Error(what + " (achieved error estimate " + format(achieved_error) + ")"),
        achieved_error_(achieved_error) {}
  double achieved_error() const noexcept { return achieved_error_; }

 private:
  static std::string format(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
  }
  double achieved_error_;
};

class BracketError : public Error {
 public:
  using Error::Error;
};

/// The periodic box cannot hold the kernel tail within the configured grid cap.
class AliasingError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// The catalog entry lacks the closed form a routine needs (e.g. the Levy density).
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

class ViolationError : public Error {
 public:
  using Error::Error;
};

class InstabilityError : public Error {
 public:
  using Error::Error;
};

class TabulationError : public Error {
 public:
  using Error::Error;
};

class UndersamplingError : public Error {
 public:
  using Error::Error;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

class ResourceLimitError : public Error {
 public:
  using Error::Error;
};

}  // namespace sublp
