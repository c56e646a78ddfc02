#pragma once

#include <stdexcept>
#include <string>

namespace dcar {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid arguments or option combinations supplied by a caller.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Malformed, missing or inconsistent input data (files, manifests, labels).
class DataError : public Error {
 public:
  using Error::Error;
};

/// A numerical routine could not produce a valid result (non-SPD matrix,
/// failed factorization, non-finite objective).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace dcar
