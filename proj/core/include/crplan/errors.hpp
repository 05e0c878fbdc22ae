#pragma once

#include <stdexcept>
#include <string>

namespace crplan {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An input violated a documented bound (actuation range, parameter sign...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Non-finite state while integrating the rod equations.
class IntegrationDiverged : public Error {
 public:
  IntegrationDiverged(double arclength, const std::string& what)
      : Error(what), arclength_(arclength) {}
  double arclength() const { return arclength_; }

 private:
  double arclength_;
};

class JacobianFailed : public Error {
 public:
  using Error::Error;
};

class ChartCreationFailed : public Error {
 public:
  using Error::Error;
};

/// Malformed scenario file. field() names the offending key.
class SchemaError : public Error {
 public:
  SchemaError(std::string field, const std::string& reason)
      : Error("scenario field '" + field + "': " + reason), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// Scenario parsed but start/goal failed to solve or are in collision.
class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace crplan
