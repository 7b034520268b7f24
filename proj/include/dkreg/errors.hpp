#pragma once

#include <stdexcept>
#include <string>

namespace dkreg {

//! Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

//! Point outside the simplex (beyond validation tolerance) or invalid
//! distribution parameters.
class DomainError : public Error {
public:
  using Error::Error;
};

//! A coordinate equal to zero met a negative density exponent.
class PoleError : public DomainError {
public:
  using DomainError::DomainError;
};

//! Invalid argument value (sizes, counts, grid specifications).
class ArgumentError : public Error {
public:
  using Error::Error;
};

class DegenerateSiteError : public Error {
public:
  using Error::Error;
};

//! Design and partition (or other paired inputs) disagree in length.
class MismatchError : public Error {
public:
  using Error::Error;
};

class AllWeightsVanishedError : public Error {
public:
  using Error::Error;
};

class InsufficientDataError : public Error {
public:
  using Error::Error;
};

class MissingDerivativesError : public Error {
public:
  using Error::Error;
};

//! A coordinate required to be positive in a variance constant is zero.
class BoundaryError : public DomainError {
public:
  using DomainError::DomainError;
};

//! The bias function vanishes, so no finite optimal bandwidth exists.
class ZeroBiasError : public Error {
public:
  using Error::Error;
};

class AllInfiniteError : public Error {
public:
  using Error::Error;
};

class UnknownFunctionError : public Error {
public:
  using Error::Error;
};

//! Malformed input file; carries the 1-based data row when known.
class ParseError : public Error {
public:
  ParseError(const std::string& what, std::size_t row = 0)
      : Error(row ? what + " (row " + std::to_string(row) + ")" : what), row_(row) {}
  std::size_t row() const { return row_; }

private:
  std::size_t row_;
};

class EmptyDatasetError : public Error {
public:
  using Error::Error;
};

}  // namespace dkreg
