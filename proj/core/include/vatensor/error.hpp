#pragma once

#include <stdexcept>
#include <string>

namespace vatensor {

// Base class for everything thrown by this library.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad user input: malformed dataset, inconsistent configuration.
// The command line tool maps this to exit code 2.
struct ValidationError : Error {
  explicit ValidationError(const std::string& msg) : Error(msg) {}
};

// Mismatched array shapes or out-of-range indices in library calls.
struct DimensionError : Error {
  explicit DimensionError(const std::string& msg) : Error(msg) {}
};

// A request would materialize more state than the configured cap allows.
struct CapacityError : Error {
  CapacityError(const std::string& msg, double required, double cap)
      : Error(msg), required_size(required), cap_size(cap) {}
  double required_size;
  double cap_size;
};

struct IoError : Error {
  explicit IoError(const std::string& msg) : Error(msg) {}
};

struct NumericError : Error {
  explicit NumericError(const std::string& msg) : Error(msg) {}
};

}  // namespace vatensor
