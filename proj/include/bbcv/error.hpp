#pragma once

#include <stdexcept>
#include <string>

namespace bbcv {

struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Metric undefined on the given inputs (single-class AUC, survival data with
// no comparable pair). Thrown instead of returning NaN so resampling layers
// can implement explicit redraw policies.
struct DegenerateMetricError : Error {
  explicit DegenerateMetricError(const std::string& what) : Error(what) {}
};

// Malformed input file (prediction matrix, dataset, grid, report).
struct ParseError : Error {
  explicit ParseError(const std::string& what) : Error(what) {}
};

// Bad command-line usage; the CLI maps this to exit code 2.
struct UsageError : Error {
  explicit UsageError(const std::string& what) : Error(what) {}
};

}  // namespace bbcv
