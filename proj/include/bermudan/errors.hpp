#pragma once

#include <stdexcept>
#include <string>

namespace bermudan {

struct DimensionMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NotPositiveSemiDefinite : std::domain_error {
  using std::domain_error::domain_error;
};

struct InsufficientSamples : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct InvalidLatticeMapping : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace bermudan
