#pragma once

#include <stdexcept>
#include <string>

namespace shiftbp {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed document (bad JSON, wrong field types).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Well-formed input that violates a contract (probabilities, assumptions, hashes).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Operation requires the supercritical regime (M > 1) and the law is not.
class RegimeError : public Error {
 public:
  using Error::Error;
};

// A scalar equation failed its bracket sign conditions.
class BracketError : public Error {
 public:
  using Error::Error;
};

class QuadratureError : public Error {
 public:
  using Error::Error;
};

// A bounded search ran out of room (N0 scan, norm-crossing scan).
class NotFound : public Error {
 public:
  using Error::Error;
};

}  // namespace shiftbp
