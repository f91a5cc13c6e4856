#pragma once

#include <stdexcept>
#include <string>

namespace ttx {

// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid argument, configuration, or file content (CLI exit code 1).
struct ConfigError : Error {
  using Error::Error;
};

// Geometry too degenerate to solve: collinear correspondences, empty clouds,
// too few pairs.
struct DegenerateGeometry : Error {
  using Error::Error;
};

// Euler decomposition hit the gimbal-degenerate band.
struct DegenerateDecomposition : Error {
  using Error::Error;
};

// Consecutive trajectory poses separated by a half-turn rotation; the
// relative rotation axis is not recoverable.
struct AmbiguousIncrement : Error {
  using Error::Error;
};

// An estimator ran but could not produce a usable result (CLI exit code 2).
struct EstimationFailure : Error {
  using Error::Error;
};

// File I/O and parsing problems.
struct IoError : Error {
  using Error::Error;
};

}  // namespace ttx
