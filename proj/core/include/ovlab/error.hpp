#pragma once

#include <stdexcept>
#include <string>

namespace ovlab {

// Base of every error thrown by the library. Callers that only need to
// distinguish "ovlab failed" from other failures can catch this.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shapes or vector lengths disagree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A precondition on a scalar argument or configuration is violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Not enough rows to satisfy a sampling request.
class InsufficientData : public Error {
 public:
  using Error::Error;
};

// OV is undefined because every candidate logit vector is (numerically) zero.
class UndefinedOv : public Error {
 public:
  using Error::Error;
};

// Statistic undefined because an input series has zero variance.
class ZeroVariance : public Error {
 public:
  using Error::Error;
};

// Malformed file contents (IDX, dataset CSV, trace CSV).
class ParseError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace ovlab
