#ifndef AOC_ERRORS_HPP
#define AOC_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace aoc {

/// Invalid parameters or malformed configuration input. Maps to CLI exit code 2.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Non-finite or otherwise unusable numerical result. Maps to CLI exit code 3.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Queueing parameters with arrival rate at or above a service rate.
class StabilityError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

namespace detail {

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ConfigError(msg);
}

}  // namespace detail
}  // namespace aoc

#endif  // AOC_ERRORS_HPP
