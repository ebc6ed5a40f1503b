#pragma once

#include <stdexcept>
#include <string>

namespace noma {

// Parameter or input data outside its documented bounds.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

// Structurally valid input that this build does not handle (e.g. cluster
// sizes other than two in the convex solver path).
class UnsupportedConfiguration : public std::invalid_argument {
 public:
  explicit UnsupportedConfiguration(const std::string& what) : std::invalid_argument(what) {}
};

// A caller broke a documented precondition (bad index, mismatched sizes).
class ContractViolation : public std::logic_error {
 public:
  explicit ContractViolation(const std::string& what) : std::logic_error(what) {}
};

// Malformed file contents.
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace noma
