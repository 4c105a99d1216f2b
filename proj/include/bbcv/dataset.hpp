#pragma once

#include <span>
#include <vector>

#include "bbcv/metrics.hpp"

namespace bbcv {

// In-memory tabular dataset: row-major numeric features plus labels.
struct Dataset {
  int n = 0;
  int d = 0;
  std::vector<double> x;
  LabelVector labels;

  std::span<const double> row(int i) const {
    return {x.data() + static_cast<size_t>(i) * d, static_cast<size_t>(d)};
  }
  void validate() const;
};

}  // namespace bbcv
