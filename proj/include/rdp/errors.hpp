#pragma once

#include <stdexcept>
#include <string>

namespace rdp {

/// Bad input: unknown axis, mismatched shapes, out-of-range parameters.
class ArgumentError : public std::invalid_argument {
 public:
  explicit ArgumentError(const std::string& what) : std::invalid_argument(what) {}
};

/// An enumeration or allocation guard was exceeded.
class CapacityError : public std::runtime_error {
 public:
  explicit CapacityError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical inconsistency (singular block, negative information beyond tolerance).
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

[[noreturn]] void throw_argument(const std::string& what);
[[noreturn]] void throw_capacity(const std::string& what);
[[noreturn]] void throw_numeric(const std::string& what);

}  // namespace rdp
