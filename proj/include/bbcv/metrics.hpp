#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "bbcv/error.hpp"

namespace bbcv {

enum class MetricKind { zero_one, squared_error, auc, c_index };

// Performance metric descriptor. auc and c-index are gain-oriented ranking
// metrics and need at least two predictions; the pointwise losses work on
// single pairs.
struct MetricSpec {
  MetricKind kind = MetricKind::zero_one;

  static MetricSpec from_name(std::string_view name);
  const char* name() const;
  bool gain() const { return kind == MetricKind::auc || kind == MetricKind::c_index; }
  int min_samples() const { return gain() ? 2 : 1; }

  bool operator==(const MetricSpec&) const = default;
};

// Ground truth for one sample set. `values` holds class ids, regression
// targets or survival times; `events` is non-empty only for survival data
// (1 = event observed, 0 = censored) and then matches `values` in length.
struct LabelVector {
  std::vector<double> values;
  std::vector<uint8_t> events;

  bool has_events() const { return !events.empty(); }
  int size() const { return static_cast<int>(values.size()); }
  void validate() const;
};

// Fraction of mismatched label pairs.
double zero_one_loss(std::span<const double> y, std::span<const double> yhat);

// Mean squared difference.
double squared_error(std::span<const double> y, std::span<const double> yhat);

// Rank-based Mann-Whitney AUC for binary labels in {0,1}; score ties between
// the classes count one half. Throws DegenerateMetricError on single-class
// input.
double auc(std::span<const double> y, std::span<const double> scores);

// Concordance over comparable pairs: a pair is comparable when the sample
// with the strictly earlier time has event = 1. Higher risk on the earlier
// time counts 1, risk ties count one half. Throws DegenerateMetricError when
// no pair is comparable.
double concordance_index(std::span<const double> times, std::span<const uint8_t> events,
                         std::span<const double> risk);

// Maps a metric value to loss orientation so every selection step minimizes;
// gain metrics map through 1 - value.
double as_loss(const MetricSpec& m, double value);

// Inverse of as_loss; used when reporting in the metric's native orientation.
double from_loss(const MetricSpec& m, double loss);

// Weighted kernels shared with the resampling layers. Weights carry bootstrap
// multiplicities; zero-weight entries drop out. Integer weights reproduce the
// corresponding expanded sample exactly.
double weighted_auc(std::span<const double> y, std::span<const double> scores,
                    std::span<const double> w);
double weighted_concordance_index(std::span<const double> times,
                                  std::span<const uint8_t> events,
                                  std::span<const double> risk, std::span<const double> w);

}  // namespace bbcv
