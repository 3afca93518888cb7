#pragma once

#include <stdexcept>
#include <string>

namespace ndf {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Two functions (or a function and a functional) live on different spaces.
class DomainMismatch : public Error {
 public:
  using Error::Error;
};

// median_clamp / band_projection called with lower > upper somewhere.
class InvalidBand : public Error {
 public:
  using Error::Error;
};

// Parameter out of range or a violated precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// f-shift requested at a center where the base functional is infinite.
class ImproperCenter : public Error {
 public:
  using Error::Error;
};

// Malformed instance file, generator spec or suite configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace ndf
