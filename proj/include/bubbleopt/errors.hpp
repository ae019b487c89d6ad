#pragma once

#include <stdexcept>
#include <string>

namespace bubbleopt {

/// Malformed user input: payoffs, models, rules, configuration files.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical procedure could not produce a trustworthy result.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bubbleopt
