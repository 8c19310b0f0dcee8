#pragma once

#include <stdexcept>
#include <string>

namespace muxread {

// Thrown when a caller hands us parameters or data that violate a documented
// precondition (bad config, mismatched grids, empty input, ...).  The CLI
// maps this to exit code 1.
class invalid_input : public std::runtime_error {
 public:
  explicit invalid_input(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when an algorithm fails numerically (no bracket for a root, fit or
// EM non-convergence, unstable dynamics, singular systems).  The CLI maps
// this to exit code 2.
class numerical_error : public std::runtime_error {
 public:
  explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace muxread
