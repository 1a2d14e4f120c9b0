#pragma once

#include <stdexcept>
#include <string>

namespace groupscope {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Input data violates a schema or range invariant. Carries the offending
/// location when one is known (line is 1-based, 0 when not applicable).
class ValidationError : public Error {
public:
  ValidationError(const std::string& message, std::size_t line = 0, std::string field = {})
      : Error(format(message, line, field)), line_(line), field_(std::move(field)) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

private:
  static std::string format(const std::string& message, std::size_t line, const std::string& field) {
    std::string where;
    if (line) where = "line " + std::to_string(line);
    if (!field.empty()) where += (where.empty() ? "" : " ") + std::string("field '") + field + "'";
    return where.empty() ? message : where + ": " + message;
  }

  std::size_t line_;
  std::string field_;
};

/// Stored artifact has the wrong format, version or is unparsable.
class FormatError : public Error {
public:
  using Error::Error;
};

/// Stored checksum does not match the payload.
class IntegrityError : public Error {
public:
  using Error::Error;
};

/// A referenced entity (attribute, instance, model) does not exist.
class NotFoundError : public Error {
public:
  using Error::Error;
};

/// The operation needs an artifact that has not been produced yet, or
/// conflicts with one being produced.
class StateError : public Error {
public:
  using Error::Error;
};

/// Numerical failure: non-finite values during forward/backward or training.
class NumericalError : public Error {
public:
  using Error::Error;
};

}  // namespace groupscope
