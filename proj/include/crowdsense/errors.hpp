#pragma once

#include <stdexcept>
#include <string>

namespace crowdsense {

// Precondition violations: bad dimensions, invalid probability vectors,
// arguments outside an operation's mathematical domain.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A size limit was exceeded (for example the combined support cap of the
// exact transport solver).
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The stationary distribution is not unique (more than one closed
// communicating class).
class NonUniqueError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A numerical result failed its internal residual or consistency check.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Configuration parsing or validation failure (unknown key, out of range).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace crowdsense
