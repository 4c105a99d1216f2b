#include "bbcv/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

namespace bbcv {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

PredictionStore PredictionStore::create(LabelVector labels, std::vector<std::string> config_ids,
                                        int n_repeats, int k_folds) {
  PredictionStore s;
  s.n_samples = labels.size();
  s.n_configs = static_cast<int>(config_ids.size());
  s.n_repeats = n_repeats;
  s.k_folds = k_folds;
  s.labels = std::move(labels);
  s.config_ids = std::move(config_ids);
  size_t cells = static_cast<size_t>(s.n_samples) * s.n_configs * s.n_repeats;
  s.values.assign(cells, kNaN);
  s.present.assign(cells, 0);
  s.fold_of.assign(static_cast<size_t>(s.n_samples) * s.n_repeats, -1);
  return s;
}

void PredictionStore::set(int i, int j, int r, double v) {
  if (!std::isfinite(v)) throw Error("prediction store: non-finite prediction");
  if (present.empty()) throw Error("prediction store: set() needs an allocated mask");
  size_t c = cell(i, j, r);
  values[c] = v;
  present[c] = 1;
}

bool PredictionStore::complete() const {
  if (present.empty()) return true;
  return std::all_of(present.begin(), present.end(), [](uint8_t p) { return p != 0; });
}

void PredictionStore::validate() const {
  labels.validate();
  if (labels.size() != n_samples) throw Error("prediction store: label count mismatch");
  if (n_configs < 1) throw Error("prediction store: no configurations");
  if (n_repeats < 1) throw Error("prediction store: no repeats");
  if (static_cast<int>(config_ids.size()) != n_configs) {
    throw Error("prediction store: config id count mismatch");
  }
  std::set<std::string> seen;
  for (const auto& id : config_ids) {
    if (id.empty()) throw Error("prediction store: empty config id");
    if (!seen.insert(id).second) throw Error("prediction store: duplicate config id " + id);
  }
  if (!sample_ids.empty()) {
    if (static_cast<int>(sample_ids.size()) != n_samples) {
      throw Error("prediction store: sample id count mismatch");
    }
    std::set<std::string> srows;
    for (const auto& id : sample_ids) {
      if (id.empty()) throw Error("prediction store: empty sample id");
      if (!srows.insert(id).second) throw Error("prediction store: duplicate sample id " + id);
    }
  }
  size_t cells = static_cast<size_t>(n_samples) * n_configs * n_repeats;
  if (values.size() != cells) throw Error("prediction store: value buffer size mismatch");
  if (!present.empty() && present.size() != cells) {
    throw Error("prediction store: mask size mismatch");
  }
  if (fold_of.size() != static_cast<size_t>(n_samples) * n_repeats) {
    throw Error("prediction store: fold map size mismatch");
  }
  for (int f : fold_of) {
    if (f < -1 || (k_folds > 0 && f >= k_folds)) throw Error("prediction store: bad fold id");
  }
  for (int j = 0; j < n_configs; ++j) {
    for (int r = 0; r < n_repeats; ++r) {
      for (int i = 0; i < n_samples; ++i) {
        if (!is_present(i, j, r)) continue;
        if (!std::isfinite(value(i, j, r))) {
          throw Error("prediction store: non-finite prediction present");
        }
        // Every present prediction must be attributable to a fold, which is
        // what makes it an out-of-sample value.
        if (fold_of[static_cast<size_t>(r) * n_samples + i] < 0) {
          throw Error("prediction store: present prediction without fold bookkeeping");
        }
      }
    }
  }
}

const char* selection_mode_name(SelectionMode m) {
  return m == SelectionMode::pooled ? "pooled" : "fold-mean";
}

SelectionMode selection_mode_from_name(std::string_view name) {
  if (name == "pooled") return SelectionMode::pooled;
  if (name == "fold-mean") return SelectionMode::fold_mean;
  throw Error("unknown selection mode '" + std::string(name) + "'");
}

double weighted_present_entries(const PredictionStore& store, int config,
                                std::span<const double> weights) {
  int n = store.n_samples;
  double acc = 0.0;
  if (store.present.empty()) {
    double sw = 0.0;
    for (int i = 0; i < n; ++i) sw += weights[i];
    return sw * store.n_repeats;
  }
  for (int r = 0; r < store.n_repeats; ++r) {
    const uint8_t* pr = &store.present[store.cell(0, config, r)];
    for (int i = 0; i < n; ++i) acc += weights[i] * pr[i];
  }
  return acc;
}

double pooled_config_loss(const PredictionStore& store, int config,
                          std::span<const double> weights, const MetricSpec& metric) {
  int n = store.n_samples;
  const double* y = store.labels.values.data();

  switch (metric.kind) {
    case MetricKind::zero_one:
    case MetricKind::squared_error: {
      bool sq = metric.kind == MetricKind::squared_error;
      double num = 0.0, den = 0.0;
      for (int r = 0; r < store.n_repeats; ++r) {
        const double* col = &store.values[store.cell(0, config, r)];
        // Per-repeat partials keep duplicated repeats exactly collapsible.
        double pnum = 0.0, pden = 0.0;
        if (store.present.empty()) {
          if (sq) {
            for (int i = 0; i < n; ++i) {
              double d = y[i] - col[i];
              pnum += weights[i] * d * d;
              pden += weights[i];
            }
          } else {
            for (int i = 0; i < n; ++i) {
              pnum += weights[i] * (col[i] != y[i]);
              pden += weights[i];
            }
          }
        } else {
          const uint8_t* pr = &store.present[store.cell(0, config, r)];
          for (int i = 0; i < n; ++i) {
            double wi = weights[i] * pr[i];
            if (sq) {
              double d = y[i] - col[i];
              pnum += wi * d * d;
            } else {
              pnum += wi * (col[i] != y[i]);
            }
            pden += wi;
          }
        }
        num += pnum;
        den += pden;
      }
      if (den < metric.min_samples()) return kNaN;
      return num / den;
    }

    case MetricKind::auc: {
      std::vector<double> ys, ss, ws;
      for (int r = 0; r < store.n_repeats; ++r) {
        const double* col = &store.values[store.cell(0, config, r)];
        const uint8_t* pr = store.present.empty() ? nullptr : &store.present[store.cell(0, config, r)];
        for (int i = 0; i < n; ++i) {
          if (weights[i] <= 0.0 || (pr && !pr[i])) continue;
          ys.push_back(y[i]);
          ss.push_back(col[i]);
          ws.push_back(weights[i]);
        }
      }
      double entries = 0.0;
      for (double w : ws) entries += w;
      if (entries < metric.min_samples()) return kNaN;
      return as_loss(metric, weighted_auc(ys, ss, ws));
    }

    case MetricKind::c_index: {
      if (!store.labels.has_events()) {
        throw Error("c-index requires event flags in the labels");
      }
      std::vector<double> ts, rs, ws;
      std::vector<uint8_t> es;
      for (int r = 0; r < store.n_repeats; ++r) {
        const double* col = &store.values[store.cell(0, config, r)];
        const uint8_t* pr = store.present.empty() ? nullptr : &store.present[store.cell(0, config, r)];
        for (int i = 0; i < n; ++i) {
          if (weights[i] <= 0.0 || (pr && !pr[i])) continue;
          ts.push_back(y[i]);
          es.push_back(store.labels.events[i]);
          rs.push_back(col[i]);
          ws.push_back(weights[i]);
        }
      }
      double entries = 0.0;
      for (double w : ws) entries += w;
      if (entries < metric.min_samples()) return kNaN;
      return as_loss(metric, weighted_concordance_index(ts, es, rs, ws));
    }
  }
  return kNaN;
}

namespace {

// Mean over (repeat, fold) groups of the group loss; groups without any
// weighted present entry are skipped. Rows with unknown fold never join a
// group.
double fold_mean_loss(const PredictionStore& store, int config,
                      std::span<const double> weights, const MetricSpec& metric) {
  if (store.k_folds < 1) throw Error("fold-mean selection requires fold information");
  int n = store.n_samples;
  const double* y = store.labels.values.data();
  double total = 0.0;
  int groups = 0;

  std::vector<double> ys, ss, ws;
  std::vector<uint8_t> es;
  for (int r = 0; r < store.n_repeats; ++r) {
    const double* col = &store.values[store.cell(0, config, r)];
    const uint8_t* pr = store.present.empty() ? nullptr : &store.present[store.cell(0, config, r)];
    const int* fold = &store.fold_of[static_cast<size_t>(r) * n];
    for (int k = 0; k < store.k_folds; ++k) {
      switch (metric.kind) {
        case MetricKind::zero_one:
        case MetricKind::squared_error: {
          bool sq = metric.kind == MetricKind::squared_error;
          double num = 0.0, den = 0.0;
          for (int i = 0; i < n; ++i) {
            if (fold[i] != k) continue;
            double wi = weights[i] * (pr ? pr[i] : 1);
            if (sq) {
              double d = y[i] - col[i];
              num += wi * d * d;
            } else {
              num += wi * (col[i] != y[i]);
            }
            den += wi;
          }
          if (den <= 0.0) continue;
          total += num / den;
          ++groups;
          break;
        }
        case MetricKind::auc:
        case MetricKind::c_index: {
          ys.clear(); ss.clear(); ws.clear(); es.clear();
          for (int i = 0; i < n; ++i) {
            if (fold[i] != k || weights[i] <= 0.0 || (pr && !pr[i])) continue;
            ys.push_back(y[i]);
            ss.push_back(col[i]);
            ws.push_back(weights[i]);
            if (metric.kind == MetricKind::c_index) es.push_back(store.labels.events[i]);
          }
          if (ys.empty()) continue;
          double value;
          if (metric.kind == MetricKind::auc) {
            value = weighted_auc(ys, ss, ws);
          } else {
            if (!store.labels.has_events()) {
              throw Error("c-index requires event flags in the labels");
            }
            value = weighted_concordance_index(ys, es, ss, ws);
          }
          total += as_loss(metric, value);
          ++groups;
          break;
        }
      }
    }
  }
  if (groups == 0) return kNaN;
  return total / groups;
}

}  // namespace

SelectionOutcome css(const PredictionStore& store, std::span<const double> weights,
                     std::span<const uint8_t> alive, const MetricSpec& metric,
                     SelectionMode mode) {
  if (static_cast<int>(weights.size()) != store.n_samples) {
    throw Error("selection: weight vector length mismatch");
  }
  if (!alive.empty() && static_cast<int>(alive.size()) != store.n_configs) {
    throw Error("selection: alive mask length mismatch");
  }
  SelectionOutcome out;
  out.pooled_losses.assign(store.n_configs, kNaN);
  for (int j = 0; j < store.n_configs; ++j) {
    if (!alive.empty() && !alive[j]) continue;
    out.pooled_losses[j] = mode == SelectionMode::pooled
                               ? pooled_config_loss(store, j, weights, metric)
                               : fold_mean_loss(store, j, weights, metric);
  }
  for (int j = 0; j < store.n_configs; ++j) {
    double l = out.pooled_losses[j];
    if (std::isnan(l)) continue;
    if (out.best_index < 0 || l < out.pooled_losses[out.best_index]) out.best_index = j;
  }
  if (out.best_index < 0) {
    throw Error("selection: no configuration has enough predictions on the supplied rows");
  }
  return out;
}

SelectionOutcome css_rows(const PredictionStore& store, std::span<const int> rows,
                          std::span<const uint8_t> alive, const MetricSpec& metric,
                          SelectionMode mode) {
  std::vector<double> w(store.n_samples, 0.0);
  for (int i : rows) {
    if (i < 0 || i >= store.n_samples) throw Error("selection: row index out of range");
    w[i] += 1.0;
  }
  return css(store, w, alive, metric, mode);
}

SelectionOutcome css_all(const PredictionStore& store, std::span<const uint8_t> alive,
                         const MetricSpec& metric, SelectionMode mode) {
  std::vector<double> w(store.n_samples, 1.0);
  return css(store, w, alive, metric, mode);
}

}  // namespace bbcv
