#pragma once

#include <array>
#include <optional>
#include <string_view>
#include <vector>

#include "bbcv/metrics.hpp"
#include "bbcv/rng.hpp"

namespace bbcv {

// Partition of N samples into K folds, stored as a 0-based fold id per sample.
struct FoldPlan {
  int k = 0;
  std::vector<int> assignment;

  int n() const { return static_cast<int>(assignment.size()); }
  std::vector<std::vector<int>> folds() const;
  std::vector<int> fold_rows(int fold) const;
  void validate() const;
};

// Stratified K-fold assignment: samples are grouped by label value, each
// stratum is shuffled and dealt round-robin, with the dealing origin rotated
// between strata so overall fold sizes stay within one of each other and no
// fold is left empty.
FoldPlan stratified_fold_plan(const LabelVector& labels, int k, RngStream rng);

// Single-stratum variant for continuous labels and synthetic matrices.
FoldPlan unstratified_fold_plan(int n, int k, RngStream rng);

// One bootstrap resample of row indices: counts[i] is the multiplicity of row
// i among the n draws, out_bag lists the rows never drawn (ascending).
struct BootstrapDraw {
  std::vector<int> counts;
  std::vector<int> out_bag;

  int n() const { return static_cast<int>(counts.size()); }
  int distinct_in_bag() const;
  void validate() const;
};

// Single attempt; empty optional when every row was drawn (empty out-bag).
std::optional<BootstrapDraw> bootstrap_draw_attempt(int n, RngStream rng);

// Draws until the out-bag is non-empty, advancing the sub-stream counter per
// attempt, bounded at max_attempts. Requires n >= 2.
BootstrapDraw bootstrap_draw(int n, const SeedPlan& seed, std::string_view tag,
                             uint64_t counter, int max_attempts = 100);

// Two-sided percentile interval from order statistics: with the B values
// sorted ascending, returns the max(1, floor(alpha/2*B))-th and
// min(B, ceil((1-alpha/2)*B))-th (1-based). Requires B >= 20, finite values
// and alpha in (0,1).
std::array<double, 2> percentile_ci(std::vector<double> values, double alpha);

// 1-based order-statistic ranks used by percentile_ci.
std::array<int, 2> percentile_ranks(int b, double alpha);

}  // namespace bbcv
