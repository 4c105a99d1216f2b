#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bbcv/learners.hpp"
#include "bbcv/resampling.hpp"
#include "bbcv/selection.hpp"

namespace bbcv::testutil {

// All-pairs Mann-Whitney AUC, counted in half-wins so the numerator stays
// integral. Quadratic on purpose; the library uses the rank-based form.
inline double auc_oracle(std::span<const double> y, std::span<const double> s) {
  double half_wins = 0;
  long pairs = 0;
  for (size_t i = 0; i < y.size(); ++i) {
    if (y[i] != 1.0) continue;
    for (size_t j = 0; j < y.size(); ++j) {
      if (y[j] != 0.0) continue;
      ++pairs;
      if (s[i] > s[j]) half_wins += 2;
      else if (s[i] == s[j]) half_wins += 1;
    }
  }
  return half_wins / (2.0 * static_cast<double>(pairs));
}

// All-pairs concordance: the sample with the strictly earlier time must have
// an observed event for the pair to count.
inline double cindex_oracle(std::span<const double> t, std::span<const uint8_t> e,
                            std::span<const double> risk) {
  double half_wins = 0;
  long pairs = 0;
  for (size_t a = 0; a < t.size(); ++a) {
    for (size_t b = 0; b < t.size(); ++b) {
      if (!(t[a] < t[b]) || e[a] != 1) continue;
      ++pairs;
      if (risk[a] > risk[b]) half_wins += 2;
      else if (risk[a] == risk[b]) half_wins += 1;
    }
  }
  return half_wins / (2.0 * static_cast<double>(pairs));
}

// Single-repeat store from explicit per-configuration prediction columns.
inline PredictionStore make_store(std::vector<double> labels,
                                  const std::vector<std::vector<double>>& columns, int k_folds,
                                  std::vector<int> fold_of = {}) {
  LabelVector lv;
  lv.values = std::move(labels);
  std::vector<std::string> ids;
  for (size_t j = 0; j < columns.size(); ++j) ids.push_back("c" + std::to_string(j + 1));
  PredictionStore st = PredictionStore::create(std::move(lv), std::move(ids), 1, k_folds);
  for (int j = 0; j < st.n_configs; ++j) {
    for (int i = 0; i < st.n_samples; ++i) st.set(i, j, 0, columns[j][i]);
  }
  if (fold_of.empty()) {
    for (int i = 0; i < st.n_samples; ++i) st.fold_of[i] = i % k_folds;
  } else {
    st.fold_of = std::move(fold_of);
  }
  st.validate();
  return st;
}

// Complete random 0-1 store under zero-one loss with a valid fold layout.
inline PredictionStore random_binary_store(RngStream& rng, int n, int c, int k) {
  std::vector<double> labels(n);
  for (double& v : labels) v = rng.uniform_below(2) ? 1.0 : 0.0;
  std::vector<std::vector<double>> cols(c, std::vector<double>(n));
  for (auto& col : cols) {
    for (double& v : col) v = rng.uniform_below(2) ? 1.0 : 0.0;
  }
  std::vector<int> fold_of(n);
  for (int i = 0; i < n; ++i) fold_of[i] = i % k;
  // shuffle the fold layout so folds are not index-contiguous
  rng.shuffle(fold_of.begin(), fold_of.end());
  return make_store(std::move(labels), cols, k, std::move(fold_of));
}

// Random score store for ranking metrics: binary labels with both classes,
// scores on a coarse grid so ties actually occur.
inline PredictionStore random_score_store(RngStream& rng, int n, int c, int k) {
  std::vector<double> labels(n);
  labels[0] = 1.0;
  labels[1] = 0.0;
  for (int i = 2; i < n; ++i) labels[i] = rng.uniform_below(2) ? 1.0 : 0.0;
  std::vector<std::vector<double>> cols(c, std::vector<double>(n));
  for (auto& col : cols) {
    for (double& v : col) v = static_cast<double>(rng.uniform_below(11)) / 10.0;
  }
  std::vector<int> fold_of(n);
  for (int i = 0; i < n; ++i) fold_of[i] = i % k;
  rng.shuffle(fold_of.begin(), fold_of.end());
  return make_store(std::move(labels), cols, k, std::move(fold_of));
}

// Exact brute-force winner over a complete store with shared unit weights:
// per-configuration losses are compared as integer fractions, so the result
// is immune to floating-point rounding. Zero-one metric only.
inline int brute_force_zero_one_winner(const PredictionStore& st,
                                       std::span<const uint8_t> alive) {
  int best = -1;
  long best_num = 0;
  for (int j = 0; j < st.n_configs; ++j) {
    if (!alive.empty() && !alive[j]) continue;
    long num = 0;
    for (int r = 0; r < st.n_repeats; ++r) {
      for (int i = 0; i < st.n_samples; ++i) {
        num += st.value(i, j, r) != st.labels.values[i] ? 1 : 0;
      }
    }
    if (best < 0 || num < best_num) {
      best = j;
      best_num = num;
    }
  }
  return best;
}

// Exact brute-force winner under AUC: all-pairs half-win counts share the
// same pair denominator across configurations, so integer comparison of the
// numerators decides the argmax gain (= argmin loss).
inline int brute_force_auc_winner(const PredictionStore& st, std::span<const uint8_t> alive) {
  int best = -1;
  long best_half_wins = -1;
  for (int j = 0; j < st.n_configs; ++j) {
    if (!alive.empty() && !alive[j]) continue;
    long half_wins = 0;
    for (int r = 0; r < st.n_repeats; ++r) {
      for (int a = 0; a < st.n_samples; ++a) {
        if (st.labels.values[a] != 1.0) continue;
        for (int r2 = 0; r2 < st.n_repeats; ++r2) {
          for (int b = 0; b < st.n_samples; ++b) {
            if (st.labels.values[b] != 0.0) continue;
            double sa = st.value(a, j, r), sb = st.value(b, j, r2);
            if (sa > sb) half_wins += 2;
            else if (sa == sb) half_wins += 1;
          }
        }
      }
    }
    if (half_wins > best_half_wins) {
      best = j;
      best_half_wins = half_wins;
    }
  }
  return best;
}

// Learner that ignores the data and always predicts `value`; calls
// note_training so protocol accounting can be checked against the counter.
inline BoundLearner constant_learner(const std::string& id, double value) {
  return BoundLearner{id, [id, value](const Dataset&, std::span<const int>, RngStream&) {
                        note_training();
                        TrainedModel m;
                        m.config_id = id;
                        m.impl = MajorityModel{value, value};
                        return m;
                      }};
}

// Learner that predicts the true label on every row (label leakage on
// purpose: it makes per-configuration losses fully controllable in tests).
inline BoundLearner oracle_learner(const std::string& id, bool invert = false) {
  return BoundLearner{id, [id, invert](const Dataset& data, std::span<const int>, RngStream&) {
                        note_training();
                        TrainedModel m;
                        m.config_id = id;
                        KnnModel knn;  // 1-NN on the full data reproduces labels
                        knn.k = 1;
                        knn.d = data.d;
                        knn.x.assign(data.x.begin(), data.x.end());
                        knn.y = data.labels.values;
                        if (invert) {
                          for (double& y : knn.y) y = 1.0 - y;
                        }
                        m.impl = std::move(knn);
                        return m;
                      }};
}

// Tiny binary classification dataset with one feature per sample so 1-NN on
// the full row set reproduces labels exactly.
inline Dataset toy_dataset(int n) {
  Dataset d;
  d.n = n;
  d.d = 1;
  d.x.resize(n);
  d.labels.values.resize(n);
  for (int i = 0; i < n; ++i) {
    d.x[i] = static_cast<double>(i);
    d.labels.values[i] = i % 2 ? 1.0 : 0.0;
  }
  return d;
}

}  // namespace bbcv::testutil
