#pragma once

#include <stdexcept>
#include <string>

namespace qi {

/// Invalid configuration: bad keys, out-of-range options, malformed CLI input.
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent data files / sample sets.
class DataError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Parameters that violate a physical constraint (negative photon numbers,
/// transmissivity outside [0,1], an advantage above the receiver bound, ...).
class PhysicsError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

} // namespace qi
