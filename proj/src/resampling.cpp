#include "bbcv/resampling.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

namespace bbcv {

std::vector<std::vector<int>> FoldPlan::folds() const {
  std::vector<std::vector<int>> out(k);
  for (int i = 0; i < n(); ++i) out[assignment[i]].push_back(i);
  return out;
}

std::vector<int> FoldPlan::fold_rows(int fold) const {
  std::vector<int> out;
  for (int i = 0; i < n(); ++i) {
    if (assignment[i] == fold) out.push_back(i);
  }
  return out;
}

void FoldPlan::validate() const {
  if (k < 2) throw Error("fold plan: need at least 2 folds");
  if (n() < k) throw Error("fold plan: more folds than samples");
  std::vector<int> sizes(k, 0);
  for (int f : assignment) {
    if (f < 0 || f >= k) throw Error("fold plan: fold id out of range");
    ++sizes[f];
  }
  for (int s : sizes) {
    if (s == 0) throw Error("fold plan: empty fold");
  }
}

namespace {

FoldPlan deal_strata(const std::vector<std::vector<int>>& strata, int n, int k,
                     RngStream& rng) {
  FoldPlan plan;
  plan.k = k;
  plan.assignment.assign(n, -1);
  int offset = 0;
  for (const auto& stratum : strata) {
    std::vector<int> rows = stratum;
    rng.shuffle(rows.begin(), rows.end());
    for (size_t t = 0; t < rows.size(); ++t) {
      plan.assignment[rows[t]] = static_cast<int>((offset + t) % k);
    }
    offset = static_cast<int>((offset + rows.size()) % k);
  }
  plan.validate();
  return plan;
}

}  // namespace

FoldPlan stratified_fold_plan(const LabelVector& labels, int k, RngStream rng) {
  labels.validate();
  int n = labels.size();
  if (k < 2) throw Error("fold plan: need at least 2 folds");
  if (k > n) throw Error("fold plan: K (" + std::to_string(k) + ") exceeds sample count (" +
                         std::to_string(n) + ")");
  // Strata in ascending label order so the plan depends only on the data and
  // the stream, not on hashing.
  std::map<double, std::vector<int>> by_label;
  for (int i = 0; i < n; ++i) by_label[labels.values[i]].push_back(i);
  std::vector<std::vector<int>> strata;
  strata.reserve(by_label.size());
  for (auto& [value, rows] : by_label) strata.push_back(std::move(rows));
  return deal_strata(strata, n, k, rng);
}

FoldPlan unstratified_fold_plan(int n, int k, RngStream rng) {
  if (n < 1) throw Error("fold plan: empty sample set");
  if (k < 2) throw Error("fold plan: need at least 2 folds");
  if (k > n) throw Error("fold plan: K (" + std::to_string(k) + ") exceeds sample count (" +
                         std::to_string(n) + ")");
  std::vector<int> all(n);
  for (int i = 0; i < n; ++i) all[i] = i;
  std::vector<std::vector<int>> strata{std::move(all)};
  return deal_strata(strata, n, k, rng);
}

int BootstrapDraw::distinct_in_bag() const {
  int d = 0;
  for (int c : counts) d += c > 0;
  return d;
}

void BootstrapDraw::validate() const {
  long total = 0;
  for (int c : counts) {
    if (c < 0) throw Error("bootstrap draw: negative count");
    total += c;
  }
  if (total != n()) throw Error("bootstrap draw: in-bag size != n");
  for (int i : out_bag) {
    if (i < 0 || i >= n() || counts[i] != 0) throw Error("bootstrap draw: bad out-bag");
  }
  if (static_cast<int>(out_bag.size()) != n() - distinct_in_bag()) {
    throw Error("bootstrap draw: out-bag incomplete");
  }
}

std::optional<BootstrapDraw> bootstrap_draw_attempt(int n, RngStream rng) {
  if (n < 2) throw Error("bootstrap draw: need at least 2 rows");
  BootstrapDraw draw;
  draw.counts.assign(n, 0);
  for (int t = 0; t < n; ++t) {
    ++draw.counts[static_cast<int>(rng.uniform_below(static_cast<uint64_t>(n)))];
  }
  for (int i = 0; i < n; ++i) {
    if (draw.counts[i] == 0) draw.out_bag.push_back(i);
  }
  if (draw.out_bag.empty()) return std::nullopt;
  return draw;
}

BootstrapDraw bootstrap_draw(int n, const SeedPlan& seed, std::string_view tag,
                             uint64_t counter, int max_attempts) {
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    auto draw = bootstrap_draw_attempt(n, seed.stream(tag, counter, attempt));
    if (draw) return std::move(*draw);
  }
  throw Error("bootstrap draw: no non-empty out-bag after " + std::to_string(max_attempts) +
              " attempts");
}

std::array<int, 2> percentile_ranks(int b, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error("percentile ci: alpha must be in (0,1)");
  // Nudge before floor/ceil so ranks are stable when alpha/2*b is an integer
  // up to rounding (e.g. 0.025 * 1000).
  double lo = alpha / 2.0 * b;
  double hi = (1.0 - alpha / 2.0) * b;
  int lb = static_cast<int>(std::floor(lo + 1e-9));
  int ub = static_cast<int>(std::ceil(hi - 1e-9));
  lb = std::max(1, lb);
  ub = std::min(b, ub);
  return {lb, ub};
}

std::array<double, 2> percentile_ci(std::vector<double> values, double alpha) {
  int b = static_cast<int>(values.size());
  if (b < 20) throw Error("percentile ci: need at least 20 values");
  for (double v : values) {
    if (!std::isfinite(v)) throw Error("percentile ci: non-finite value");
  }
  auto [lb, ub] = percentile_ranks(b, alpha);
  std::sort(values.begin(), values.end());
  return {values[lb - 1], values[ub - 1]};
}

}  // namespace bbcv
