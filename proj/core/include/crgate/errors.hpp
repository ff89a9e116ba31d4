#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace crgate {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class LayoutError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the domain of an operation (time outside [0, T], T <= 0, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Fine grid too coarse for the requested filter width.
class ResolutionError : public Error {
 public:
  using Error::Error;
};

class NonHermitianError : public Error {
 public:
  using Error::Error;
};

/// Adaptive integration could not proceed (step size underflow or non-finite state).
class IntegrationError : public Error {
 public:
  IntegrationError(const std::string& what, double t_fail)
      : Error(what + " (t = " + std::to_string(t_fail) + " ns)"), t_fail_(t_fail) {}
  double t_fail() const noexcept { return t_fail_; }

 private:
  double t_fail_;
};

/// Objective returned a non-finite value or gradient.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration; `key()` names the offending field.
class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& what)
      : Error("config field \"" + key + "\": " + what), key_(std::move(key)), detail_(what) {}
  const std::string& key() const noexcept { return key_; }
  /// The message without the field name.
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::string key_;
  std::string detail_;
};

}  // namespace crgate
