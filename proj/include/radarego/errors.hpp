#pragma once

#include <stdexcept>
#include <string>

namespace radarego {

/// Malformed or missing input data (files, streams, configs pointing at
/// nonexistent resources). Maps to CLI exit code 2.
class data_error : public std::runtime_error {
 public:
  explicit data_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure: degenerate geometry, non-finite values, failed
/// gradient verification. Maps to CLI exit code 3.
class numeric_error : public std::runtime_error {
 public:
  explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Bad invocation: unknown method/profile names, inconsistent options.
/// Maps to CLI exit code 1.
class usage_error : public std::runtime_error {
 public:
  explicit usage_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace radarego
