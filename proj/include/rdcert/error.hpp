#pragma once

#include <stdexcept>
#include <string>

namespace rdcert {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite entries, malformed matrices, out-of-range arguments.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// Model parameters outside the range the model is defined for.
class InvalidParams : public Error {
 public:
  using Error::Error;
};

class InvalidEnvelope : public Error {
 public:
  using Error::Error;
};

/// Box envelope too large for 2^l vertex enumeration.
class VertexExplosion : public Error {
 public:
  using Error::Error;
};

class StructureMismatch : public Error {
 public:
  using Error::Error;
};

/// Threshold bracket whose endpoints do not straddle the feasibility boundary.
class BracketError : public Error {
 public:
  using Error::Error;
};

class Unsupported : public Error {
 public:
  using Error::Error;
};

}  // namespace rdcert
