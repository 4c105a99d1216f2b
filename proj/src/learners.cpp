#include "bbcv/learners.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <set>

#include "bbcv/error.hpp"

namespace bbcv {

void Dataset::validate() const {
  if (n < 1) throw Error("dataset: empty");
  if (d < 0) throw Error("dataset: negative dimension");
  if (x.size() != static_cast<size_t>(n) * d) throw Error("dataset: feature buffer size mismatch");
  for (double v : x) {
    if (!std::isfinite(v)) throw Error("dataset: non-finite feature");
  }
  labels.validate();
  if (labels.size() != n) throw Error("dataset: label count mismatch");
}

namespace {

std::atomic<uint64_t> g_models_trained{0};

std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

double majority_label(const std::map<double, int>& counts) {
  double best = 0.0;
  int best_count = -1;
  for (const auto& [label, count] : counts) {
    if (count > best_count) {
      best = label;
      best_count = count;
    }
  }
  return best;
}

MajorityModel fit_majority(const Dataset& data, std::span<const int> rows) {
  std::map<double, int> counts;
  int positives = 0;
  for (int i : rows) {
    ++counts[data.labels.values[i]];
    positives += data.labels.values[i] == 1.0;
  }
  MajorityModel m;
  m.label = majority_label(counts);
  m.score = static_cast<double>(positives) / static_cast<double>(rows.size());
  return m;
}

void check_params(const Configuration& c, std::initializer_list<std::string_view> allowed) {
  for (const auto& [name, value] : c.params) {
    if (std::find(allowed.begin(), allowed.end(), name) == allowed.end()) {
      throw Error("learner " + c.learner + " does not accept parameter '" + name + "'");
    }
  }
}

int int_param(const Configuration& c, std::string_view name, double v) {
  if (!(v >= 0.0) || v != std::floor(v)) {
    throw Error("parameter " + std::string(name) + " of " + c.id() + " must be a non-negative integer");
  }
  return static_cast<int>(v);
}

KnnModel fit_knn(const Configuration& c, const Dataset& data, std::span<const int> rows) {
  check_params(c, {"k"});
  if (!c.has_param("k")) throw Error("knn requires parameter k");
  int k = int_param(c, "k", c.param("k"));
  if (k < 1) throw Error("knn: k must be at least 1");
  if (k > static_cast<int>(rows.size())) {
    throw Error("knn: k (" + std::to_string(k) + ") exceeds training size (" +
                std::to_string(rows.size()) + ")");
  }
  if (data.d < 1) throw Error("knn: dataset has no features");
  KnnModel m;
  m.k = k;
  m.d = data.d;
  m.x.reserve(rows.size() * data.d);
  m.y.reserve(rows.size());
  for (int i : rows) {
    auto r = data.row(i);
    m.x.insert(m.x.end(), r.begin(), r.end());
    m.y.push_back(data.labels.values[i]);
  }
  return m;
}

std::variant<MajorityModel, KnnModel, LogisticModel, StumpModel> fit_logistic(
    const Configuration& c, const Dataset& data, std::span<const int> rows,
    std::optional<std::string>& warning) {
  check_params(c, {"learning_rate", "iterations", "l2"});
  double lr = c.param_or("learning_rate", 0.1);
  int iterations = int_param(c, "iterations", c.param_or("iterations", 100));
  double l2 = c.param_or("l2", 0.0);
  if (!(lr > 0.0)) throw Error("logistic: learning_rate must be positive");
  if (l2 < 0.0) throw Error("logistic: l2 must be non-negative");
  if (data.d < 1) throw Error("logistic: dataset has no features");

  bool has0 = false, has1 = false;
  for (int i : rows) {
    double y = data.labels.values[i];
    if (y == 0.0) has0 = true;
    else if (y == 1.0) has1 = true;
    else throw Error("logistic: labels must be 0 or 1");
  }
  if (!has0 || !has1) {
    warning = c.id() + ": single-class training data, fell back to majority";
    return fit_majority(data, rows);
  }

  LogisticModel m;
  m.w.assign(data.d, 0.0);
  m.bias = 0.0;
  int n = static_cast<int>(rows.size());
  std::vector<double> grad(data.d);
  for (int t = 0; t < iterations; ++t) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double grad_b = 0.0;
    for (int i : rows) {
      auto xr = data.row(i);
      double z = m.bias;
      for (int f = 0; f < data.d; ++f) z += m.w[f] * xr[f];
      double p = 1.0 / (1.0 + std::exp(-z));
      double delta = p - data.labels.values[i];
      for (int f = 0; f < data.d; ++f) grad[f] += delta * xr[f];
      grad_b += delta;
    }
    for (int f = 0; f < data.d; ++f) {
      m.w[f] -= lr * (grad[f] / n + l2 * m.w[f]);
    }
    m.bias -= lr * grad_b / n;
  }
  return m;
}

StumpModel fit_stump(const Configuration& c, const Dataset& data, std::span<const int> rows) {
  check_params(c, {});
  if (data.d < 1) throw Error("stump: dataset has no features");

  auto leaf = [&](const std::map<double, int>& counts, int positives, int total) {
    return std::pair<double, double>{majority_label(counts),
                                     static_cast<double>(positives) / std::max(total, 1)};
  };

  std::map<double, int> all_counts;
  int all_pos = 0;
  for (int i : rows) {
    ++all_counts[data.labels.values[i]];
    all_pos += data.labels.values[i] == 1.0;
  }
  int n = static_cast<int>(rows.size());

  StumpModel best;
  // No-split fallback: one leaf covering everything.
  auto [flabel, fscore] = leaf(all_counts, all_pos, n);
  best.feature = 0;
  best.threshold = std::numeric_limits<double>::infinity();
  best.left_label = best.right_label = flabel;
  best.left_score = best.right_score = fscore;
  int majority_count = 0;
  for (const auto& [label, count] : all_counts) majority_count = std::max(majority_count, count);
  int best_errors = n - majority_count;

  std::vector<std::pair<double, double>> vals(n);  // (feature value, label)
  for (int f = 0; f < data.d; ++f) {
    for (int t = 0; t < n; ++t) {
      vals[t] = {data.row(rows[t])[f], data.labels.values[rows[t]]};
    }
    std::sort(vals.begin(), vals.end());

    std::map<double, int> left_counts, right_counts = all_counts;
    int left_pos = 0, right_pos = all_pos, left_n = 0;
    size_t t = 0;
    while (t < vals.size()) {
      // Move the whole tie group of equal feature values to the left side.
      size_t u = t;
      while (u < vals.size() && vals[u].first == vals[t].first) {
        ++left_counts[vals[u].second];
        left_pos += vals[u].second == 1.0;
        if (--right_counts[vals[u].second] == 0) right_counts.erase(vals[u].second);
        right_pos -= vals[u].second == 1.0;
        ++left_n;
        ++u;
      }
      if (u == vals.size()) break;  // nothing on the right, no split here
      double threshold = 0.5 * (vals[u - 1].first + vals[u].first);

      int left_major = 0, right_major = 0;
      for (const auto& [label, count] : left_counts) left_major = std::max(left_major, count);
      for (const auto& [label, count] : right_counts) right_major = std::max(right_major, count);
      int errors = (left_n - left_major) + (n - left_n - right_major);
      if (errors < best_errors) {
        best_errors = errors;
        best.feature = f;
        best.threshold = threshold;
        auto [ll, ls] = leaf(left_counts, left_pos, left_n);
        auto [rl, rs] = leaf(right_counts, right_pos, n - left_n);
        best.left_label = ll;
        best.left_score = ls;
        best.right_label = rl;
        best.right_score = rs;
      }
      t = u;
    }
  }
  return best;
}

}  // namespace

std::string Configuration::id() const {
  if (params.empty()) return learner;
  std::string out = learner + "(";
  for (size_t i = 0; i < params.size(); ++i) {
    if (i) out += ";";
    out += params[i].first + "=" + format_value(params[i].second);
  }
  out += ")";
  return out;
}

bool Configuration::has_param(std::string_view name) const {
  for (const auto& [n, v] : params) {
    if (n == name) return true;
  }
  return false;
}

double Configuration::param(std::string_view name) const {
  for (const auto& [n, v] : params) {
    if (n == name) return v;
  }
  throw Error("configuration " + id() + " has no parameter '" + std::string(name) + "'");
}

double Configuration::param_or(std::string_view name, double fallback) const {
  for (const auto& [n, v] : params) {
    if (n == name) return v;
  }
  return fallback;
}

std::vector<std::string> ConfigGrid::ids() const {
  std::vector<std::string> out;
  out.reserve(configs.size());
  for (const auto& c : configs) out.push_back(c.id());
  return out;
}

ConfigGrid expand_grid(const GridSpec& spec) {
  if (spec.blocks.empty()) throw Error("grid: no learner blocks");
  ConfigGrid grid;
  std::set<std::string> seen;
  for (const auto& block : spec.blocks) {
    if (block.learner.empty()) throw Error("grid: learner name missing");
    std::set<std::string> axis_names;
    for (const auto& axis : block.axes) {
      if (!axis_names.insert(axis.name).second) {
        throw Error("grid: duplicate axis '" + axis.name + "' for " + block.learner);
      }
      if (axis.values.empty()) {
        throw Error("grid: axis '" + axis.name + "' of " + block.learner + " has no values");
      }
      std::set<double> vals;
      for (double v : axis.values) {
        if (!std::isfinite(v)) throw Error("grid: non-finite value on axis '" + axis.name + "'");
        if (!vals.insert(v).second) {
          throw Error("grid: duplicate value " + format_value(v) + " on axis '" + axis.name +
                      "' of " + block.learner);
        }
      }
    }
    // Odometer over the axes, first axis slowest.
    std::vector<size_t> idx(block.axes.size(), 0);
    for (;;) {
      Configuration c;
      c.learner = block.learner;
      for (size_t a = 0; a < block.axes.size(); ++a) {
        c.params.emplace_back(block.axes[a].name, block.axes[a].values[idx[a]]);
      }
      std::sort(c.params.begin(), c.params.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      if (!seen.insert(c.id()).second) throw Error("grid: duplicate configuration " + c.id());
      grid.configs.push_back(std::move(c));
      // Advance, last axis fastest.
      size_t a = block.axes.size();
      while (a > 0) {
        --a;
        if (++idx[a] < block.axes[a].values.size()) break;
        idx[a] = 0;
        if (a == 0) idx.clear();
      }
      if (block.axes.empty() || idx.empty()) break;
    }
  }
  return grid;
}

std::vector<double> TrainedModel::predict_labels(const Dataset& data,
                                                 std::span<const int> rows) const {
  std::vector<double> out;
  out.reserve(rows.size());
  if (const auto* m = std::get_if<MajorityModel>(&impl)) {
    for (size_t t = 0; t < rows.size(); ++t) out.push_back(m->label);
  } else if (const auto* m = std::get_if<KnnModel>(&impl)) {
    int train_n = static_cast<int>(m->y.size());
    std::vector<std::pair<double, int>> cand(train_n);
    for (int q : rows) {
      auto xq = data.row(q);
      for (int t = 0; t < train_n; ++t) {
        double d2 = 0.0;
        const double* xt = m->x.data() + static_cast<size_t>(t) * m->d;
        for (int f = 0; f < m->d; ++f) {
          double diff = xq[f] - xt[f];
          d2 += diff * diff;
        }
        cand[t] = {d2, t};
      }
      std::sort(cand.begin(), cand.end());
      std::map<double, int> votes;
      for (int t = 0; t < m->k; ++t) ++votes[m->y[cand[t].second]];
      out.push_back(majority_label(votes));
    }
  } else if (const auto* m = std::get_if<LogisticModel>(&impl)) {
    for (int q : rows) {
      auto xq = data.row(q);
      double z = m->bias;
      for (size_t f = 0; f < m->w.size(); ++f) z += m->w[f] * xq[f];
      out.push_back(z >= 0.0 ? 1.0 : 0.0);
    }
  } else if (const auto* m = std::get_if<StumpModel>(&impl)) {
    for (int q : rows) {
      out.push_back(data.row(q)[m->feature] <= m->threshold ? m->left_label : m->right_label);
    }
  }
  return out;
}

std::vector<double> TrainedModel::predict_scores(const Dataset& data,
                                                 std::span<const int> rows) const {
  std::vector<double> out;
  out.reserve(rows.size());
  if (const auto* m = std::get_if<MajorityModel>(&impl)) {
    for (size_t t = 0; t < rows.size(); ++t) out.push_back(m->score);
  } else if (const auto* m = std::get_if<KnnModel>(&impl)) {
    int train_n = static_cast<int>(m->y.size());
    std::vector<std::pair<double, int>> cand(train_n);
    for (int q : rows) {
      auto xq = data.row(q);
      for (int t = 0; t < train_n; ++t) {
        double d2 = 0.0;
        const double* xt = m->x.data() + static_cast<size_t>(t) * m->d;
        for (int f = 0; f < m->d; ++f) {
          double diff = xq[f] - xt[f];
          d2 += diff * diff;
        }
        cand[t] = {d2, t};
      }
      std::sort(cand.begin(), cand.end());
      int pos = 0;
      for (int t = 0; t < m->k; ++t) pos += m->y[cand[t].second] == 1.0;
      out.push_back(static_cast<double>(pos) / m->k);
    }
  } else if (const auto* m = std::get_if<LogisticModel>(&impl)) {
    for (int q : rows) {
      auto xq = data.row(q);
      double z = m->bias;
      for (size_t f = 0; f < m->w.size(); ++f) z += m->w[f] * xq[f];
      out.push_back(1.0 / (1.0 + std::exp(-z)));
    }
  } else if (const auto* m = std::get_if<StumpModel>(&impl)) {
    for (int q : rows) {
      out.push_back(data.row(q)[m->feature] <= m->threshold ? m->left_score : m->right_score);
    }
  }
  return out;
}

TrainedModel train(const Configuration& config, const Dataset& data,
                   std::span<const int> rows, RngStream& rng) {
  (void)rng;  // built-ins are deterministic; kept for learner interface parity
  if (rows.empty()) throw Error("train: empty training set");
  for (int i : rows) {
    if (i < 0 || i >= data.n) throw Error("train: row index out of range");
  }
  TrainedModel model;
  model.config_id = config.id();
  if (config.learner == "majority") {
    check_params(config, {});
    model.impl = fit_majority(data, rows);
  } else if (config.learner == "knn") {
    model.impl = fit_knn(config, data, rows);
  } else if (config.learner == "logistic") {
    model.impl = fit_logistic(config, data, rows, model.warning);
  } else if (config.learner == "stump") {
    model.impl = fit_stump(config, data, rows);
  } else {
    throw Error("unknown learner '" + config.learner + "'");
  }
  note_training();
  return model;
}

uint64_t models_trained_total() { return g_models_trained.load(); }
void reset_models_trained() { g_models_trained.store(0); }
void note_training() { g_models_trained.fetch_add(1); }

std::vector<BoundLearner> bind_grid(const ConfigGrid& grid) {
  std::vector<BoundLearner> out;
  out.reserve(grid.configs.size());
  for (const auto& config : grid.configs) {
    out.push_back(BoundLearner{
        config.id(),
        [config](const Dataset& data, std::span<const int> rows, RngStream& rng) {
          return train(config, data, rows, rng);
        }});
  }
  return out;
}

}  // namespace bbcv
