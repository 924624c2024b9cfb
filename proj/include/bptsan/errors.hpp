#pragma once

#include <stdexcept>
#include <string>

namespace bptsan {

/// Violated precondition of an internal API (programming error, not bad input).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Malformed numeric input such as a NaN state or action.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Invalid or inconsistent configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unreadable, corrupted or incompatible checkpoint.
class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bptsan
