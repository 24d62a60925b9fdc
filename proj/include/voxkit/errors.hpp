#pragma once

#include <stdexcept>
#include <string>

namespace voxkit {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Parameter or shape violations detectable before any processing
// (bad durations, mismatched lengths, unknown option values, ...).
class InvalidArgumentError : public Error {
 public:
  using Error::Error;
};

// Input is structurally valid but numerically degenerate for the
// requested operation (zero variance, rank-deficient covariance,
// fully unvoiced signal, too few cycles, zero loudness, ...).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

class FileNotFoundError : public Error {
 public:
  using Error::Error;
};

class MalformedWavError : public Error {
 public:
  using Error::Error;
};

class UnsupportedWavEncodingError : public Error {
 public:
  using Error::Error;
};

class FileWriteError : public Error {
 public:
  using Error::Error;
};

}  // namespace voxkit
