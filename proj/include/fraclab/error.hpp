#pragma once

#include <stdexcept>
#include <string>

namespace fraclab {

/// Raised when an argument violates an operation's precondition.
class InputError : public std::invalid_argument {
 public:
  explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

/// Raised when an argument lies outside the domain where a map is defined.
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw InputError(message);
}

}  // namespace fraclab
