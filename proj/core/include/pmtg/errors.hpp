#pragma once

#include <stdexcept>
#include <string>

namespace pmtg {

// Invalid configuration values: bad gait names, out-of-range constants,
// schema violations. The message names the offending field where one exists.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Non-finite inputs or state. Raised instead of silently propagating NaN.
class NumericError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Physics blew up mid-episode.
class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void require_finite(double value, const char* what);

}  // namespace pmtg
