#pragma once

#include <stdexcept>
#include <string>

namespace pedas {

// Malformed input document (syntax or missing keys).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input parsed but breaks a domain invariant. `what()` names the field path.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical problem that cannot be solved as posed (degenerate fit,
// empty DP stage, unreachable route).
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pedas
