#pragma once

#include <stdexcept>

namespace dpmag {

/// Bad configuration or command-line input.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A run produced numbers that cannot be trusted (broken positivity,
/// too many excluded trajectories, significantly negative QFI).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dpmag
