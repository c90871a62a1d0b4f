#pragma once

#include <stdexcept>
#include <string>

namespace ousb {

// Numerical failure: singular kernels inside the clamped range, degenerate
// diffusion, failed convergence that a caller chose to escalate.
class DegenerateError : public std::runtime_error {
 public:
  explicit DegenerateError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input data (CSV cells, malformed JSON payloads); messages carry
// the location context.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Run-config schema violations: unknown keys, missing sections, bad types.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ousb
