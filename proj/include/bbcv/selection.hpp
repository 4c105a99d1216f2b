#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bbcv/metrics.hpp"

namespace bbcv {

// Pooled out-of-sample predictions: one value per (sample, configuration,
// repeat) cell, plus a presence mask for incomplete runs (ingested partial
// matrices, configurations dropped mid-run). Values are class labels or
// scores depending on the metric in play. Layout is column-contiguous per
// (configuration, repeat) so per-configuration scans stream.
struct PredictionStore {
  int n_samples = 0;
  int n_configs = 0;
  int n_repeats = 1;
  int k_folds = 0;

  LabelVector labels;
  std::vector<std::string> config_ids;
  std::vector<std::string> sample_ids;  // optional; kept for matrix round-trips
  std::vector<double> values;   // [(j * R + r) * N + i]
  std::vector<uint8_t> present; // same layout; empty = everything present
  std::vector<int> fold_of;     // [r * N + i], 0-based, -1 = unknown

  static PredictionStore create(LabelVector labels, std::vector<std::string> config_ids,
                                int n_repeats, int k_folds);

  size_t cell(int i, int j, int r) const {
    return (static_cast<size_t>(j) * n_repeats + r) * n_samples + i;
  }
  double value(int i, int j, int r = 0) const { return values[cell(i, j, r)]; }
  bool is_present(int i, int j, int r = 0) const {
    return present.empty() || present[cell(i, j, r)] != 0;
  }
  void set(int i, int j, int r, double v);
  bool complete() const;
  void validate() const;
};

enum class SelectionMode { pooled, fold_mean };

const char* selection_mode_name(SelectionMode m);
SelectionMode selection_mode_from_name(std::string_view name);

// Winning configuration plus the loss of every configuration on the supplied
// rows (NaN for excluded or under-supported configurations).
struct SelectionOutcome {
  int best_index = -1;
  std::vector<double> pooled_losses;
};

// Loss of one configuration over the weighted rows, pooled across repeats.
// Weights are row multiplicities (bootstrap counts or 0/1 row selectors).
// Returns NaN when fewer than metric.min_samples weighted present entries
// back the statistic; throws DegenerateMetricError when the metric is
// undefined on the pooled sample.
double pooled_config_loss(const PredictionStore& store, int config,
                          std::span<const double> weights, const MetricSpec& metric);

// Weighted count of present entries for the configuration over the rows.
double weighted_present_entries(const PredictionStore& store, int config,
                                std::span<const double> weights);

// Configuration selection strategy: minimizes the pooled loss over the
// weighted rows (or the mean of per-fold losses in fold_mean mode) across
// alive configurations, breaking ties by lowest index. `alive` may be empty
// (all alive). Throws when no alive configuration has enough predictions.
SelectionOutcome css(const PredictionStore& store, std::span<const double> weights,
                     std::span<const uint8_t> alive, const MetricSpec& metric,
                     SelectionMode mode = SelectionMode::pooled);

// Index-set convenience form; rows may repeat (multiset semantics).
SelectionOutcome css_rows(const PredictionStore& store, std::span<const int> rows,
                          std::span<const uint8_t> alive, const MetricSpec& metric,
                          SelectionMode mode = SelectionMode::pooled);

// All-rows unit weights.
SelectionOutcome css_all(const PredictionStore& store, std::span<const uint8_t> alive,
                         const MetricSpec& metric, SelectionMode mode = SelectionMode::pooled);

}  // namespace bbcv
