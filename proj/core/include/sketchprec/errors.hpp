#pragma once

#include <stdexcept>

namespace sketchprec {

// Malformed or inconsistent input data (files, streams, mismatched sketches).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite values, loss of positive definiteness that could not be
// recovered, or an iterative routine that diverged.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sketchprec
