#pragma once

#include <stdexcept>
#include <string>

namespace atsal {

// Base of every error raised by the library. The CLI maps these to exit code 2.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Extents disagree between operands; the message names the offending axis.
class DimensionError : public Error {
public:
  using Error::Error;
};

class ArgumentError : public Error {
public:
  using Error::Error;
};

// Operation invoked in the wrong lifecycle state (e.g. backward before forward).
class StateError : public Error {
public:
  using Error::Error;
};

// Malformed file or stream contents.
class FormatError : public Error {
public:
  using Error::Error;
};

// Value outside the mathematical domain of an operation (e.g. negative mass).
class DomainError : public Error {
public:
  using Error::Error;
};

// A named entry (weight key, file) is absent.
class MissingKeyError : public Error {
public:
  explicit MissingKeyError(const std::string& key)
      : Error("missing key: " + key), key_(key) {}
  const std::string& key() const noexcept { return key_; }

private:
  std::string key_;
};

// Input for which a statistic is undefined: constant map, zero variance.
class DegenerateMapError : public Error {
public:
  using Error::Error;
};

// No fixations where at least one is required.
class NoFixationsError : public Error {
public:
  using Error::Error;
};

// Bad batch input (empty directories, no matching frames).
class InputError : public Error {
public:
  using Error::Error;
};

} // namespace atsal
