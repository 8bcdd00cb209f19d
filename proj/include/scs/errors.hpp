#pragma once

#include <stdexcept>
#include <string>

namespace scs {

// Input that violates a documented precondition (bad level, unknown arm, malformed row).
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

// Filesystem or stream failure.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace scs
