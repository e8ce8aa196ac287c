#pragma once

#include <stdexcept>
#include <string>

namespace pcaising {

/// An exact computation was requested beyond the enumerable lattice size.
class SizeGuardError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid experiment configuration (unknown name, missing or conflicting fields).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A summary was requested from too few usable samples.
class InsufficientSamples : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Output could not be written or input could not be read.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pcaising
