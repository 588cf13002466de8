#pragma once

#include <stdexcept>
#include <string>

namespace whoeffding {

// A state or measure lies outside the model's state space.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Malformed argument: negative horizon, cap exceeded, mismatched spaces.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// The operation exists but not for this model / subordinator combination.
class UnsupportedError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A series or integral that was required to be finite is not.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace whoeffding
