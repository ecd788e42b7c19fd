#pragma once

#include <stdexcept>
#include <string>

namespace rgbdtrack {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid values passed to an operation (shape mismatch, bad box, ...).
struct InputError : Error {
  using Error::Error;
};

// Malformed file contents; message carries file and line where possible.
struct ParseError : Error {
  using Error::Error;
};

// Dataset or sequence could not be loaded.
struct LoadError : Error {
  using Error::Error;
};

// Infeasible or inconsistent configuration.
struct ConfigError : Error {
  using Error::Error;
};

// Violation of the tracking protocol (e.g. first frame has no target).
struct ProtocolError : Error {
  using Error::Error;
};

// Training diverged or produced non-finite values.
struct TrainingError : Error {
  using Error::Error;
};

}  // namespace rgbdtrack
