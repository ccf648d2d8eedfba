#pragma once

#include <stdexcept>
#include <string>

namespace laf {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file (CSV or JSON). The message names the offending row
/// and, where applicable, the column.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A precondition on an argument was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Every sample received the same prediction from all models, so nothing is
/// left to discriminate between them.
class NoDiscriminatingData : public Error {
 public:
  NoDiscriminatingData()
      : Error("no-discriminating-data: every sample is predicted identically by all models") {}
};

}  // namespace laf
