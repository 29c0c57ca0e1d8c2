#pragma once

#include <stdexcept>
#include <string>

namespace graphon_lqr {

// Root of every error thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Coordinate or time outside its admissible interval.
class DomainError : public Error {
public:
  using Error::Error;
};

// Vector / matrix dimensions that do not fit together.
class ShapeError : public Error {
public:
  using Error::Error;
};

// Malformed input data (asymmetric couplings, negative weights, bad scenario fields).
class ValidationError : public Error {
public:
  using Error::Error;
};

class IndexError : public Error {
public:
  using Error::Error;
};

// Operation called outside the class of problems it is defined for.
class PreconditionError : public Error {
public:
  using Error::Error;
};

class UnsupportedError : public Error {
public:
  using Error::Error;
};

// Integration blow-up, eigensolver failure, non-finite intermediate values.
class NumericError : public Error {
public:
  using Error::Error;
};

// The closed-form Riccati solution is not defined on this branch
// (z0 equals the algebraic root, or the input gain vanishes).
class DegenerateBranch : public Error {
public:
  enum class Kind { EquilibriumStart, ZeroInputGain };

  DegenerateBranch(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

private:
  Kind kind_;
};

} // namespace graphon_lqr
