#pragma once

#include <stdexcept>
#include <string>

namespace empc {

// Error categories map 1:1 onto CLI exit codes (see tools/empcsim.cpp).

// Invalid scenario configuration: bad parameter values, unsupported
// controller combinations, malformed config files.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Invalid input data: malformed CSV, timestamp gaps, length mismatches.
struct DataError : std::runtime_error {
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// An optimization subproblem failed (infeasible, unbounded, iteration
// limit, or numerical breakdown) where the caller required an optimum.
struct SolverError : std::runtime_error {
  explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace empc
