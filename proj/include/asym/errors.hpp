#pragma once

#include <stdexcept>
#include <string>

namespace asym {

/// Shape or layout mismatch between operands.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// NaN/Inf encountered where finite values are required.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid user-supplied configuration (bad flag, bad key, out-of-range value).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or unreadable input file.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace asym

namespace asym {

/// A forward cache used after the model it was produced from has changed.
class StaleCacheError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace asym
