#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace gmdeb {

//! Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

//! A value lies on or outside the declared support of its variable.
//! Carries the offending row/column when known.
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what, std::optional<std::size_t> row = {},
                       std::optional<std::size_t> col = {})
      : Error(what), row_(row), col_(col) {}

  std::optional<std::size_t> row() const { return row_; }
  std::optional<std::size_t> col() const { return col_; }

 private:
  std::optional<std::size_t> row_;
  std::optional<std::size_t> col_;
};

class NonFinite : public Error {
 public:
  using Error::Error;
};

//! A transformed-scale point has no preimage (lambda*y + 1 <= 0).
class RangeError : public Error {
 public:
  using Error::Error;
};

class SingularCovariance : public Error {
 public:
  using Error::Error;
};

class DegenerateComponent : public Error {
 public:
  using Error::Error;
};

class UnsupportedModel : public Error {
 public:
  using Error::Error;
};

class AllCandidatesFailed : public Error {
 public:
  using Error::Error;
};

class RejectionOverflow : public Error {
 public:
  using Error::Error;
};

class UnsupportedDimension : public Error {
 public:
  using Error::Error;
};

class UnknownDistribution : public Error {
 public:
  using Error::Error;
};

class InvalidParams : public Error {
 public:
  using Error::Error;
};

//! Malformed input file (CSV, model file, config).
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace gmdeb
