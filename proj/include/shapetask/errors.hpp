#pragma once

#include <stdexcept>
#include <string>

namespace shapetask {

// Base class for all errors raised by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad argument values (out-of-range ids, empty inputs, invalid configs).
struct InvalidArgumentError : Error {
  using Error::Error;
};

// Tensor/grid extent mismatches.
struct InvalidShapeError : Error {
  using Error::Error;
};

// Non-finite values where finite ones are required.
struct NumericalError : Error {
  using Error::Error;
};

// Training diverged; carries the epoch at which it happened.
struct TrainingError : Error {
  TrainingError(const std::string& msg, int epoch_index)
      : Error(msg), epoch(epoch_index) {}
  int epoch;
};

// File-format errors. Subclasses keep the failure modes distinguishable.
struct ParseError : Error {
  using Error::Error;
};

struct VersionMismatchError : ParseError {
  using ParseError::ParseError;
};

struct TruncatedPayloadError : ParseError {
  using ParseError::ParseError;
};

struct ChecksumError : ParseError {
  using ParseError::ParseError;
};

// A referenced file does not exist (distinct from malformed content).
struct MissingFileError : Error {
  using Error::Error;
};

}  // namespace shapetask
