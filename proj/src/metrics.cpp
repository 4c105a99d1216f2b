#include "bbcv/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace bbcv {

namespace {

void check_finite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw Error(std::string(what) + ": non-finite value");
  }
}

void check_same_size(size_t a, size_t b, const char* what) {
  if (a != b) {
    throw Error(std::string(what) + ": length mismatch (" + std::to_string(a) + " vs " +
                std::to_string(b) + ")");
  }
}

}  // namespace

MetricSpec MetricSpec::from_name(std::string_view name) {
  if (name == "zero-one") return {MetricKind::zero_one};
  if (name == "squared-error") return {MetricKind::squared_error};
  if (name == "auc") return {MetricKind::auc};
  if (name == "c-index") return {MetricKind::c_index};
  throw Error("unknown metric '" + std::string(name) +
              "' (expected zero-one, squared-error, auc or c-index)");
}

const char* MetricSpec::name() const {
  switch (kind) {
    case MetricKind::zero_one: return "zero-one";
    case MetricKind::squared_error: return "squared-error";
    case MetricKind::auc: return "auc";
    case MetricKind::c_index: return "c-index";
  }
  return "?";
}

void LabelVector::validate() const {
  if (values.empty()) throw Error("labels: empty");
  check_finite(values, "labels");
  if (!events.empty()) {
    check_same_size(events.size(), values.size(), "labels/events");
    for (uint8_t e : events) {
      if (e > 1) throw Error("labels: event flags must be 0 or 1");
    }
  }
}

double zero_one_loss(std::span<const double> y, std::span<const double> yhat) {
  check_same_size(y.size(), yhat.size(), "zero-one");
  if (y.empty()) throw Error("zero-one: empty input");
  check_finite(y, "zero-one");
  check_finite(yhat, "zero-one");
  size_t miss = 0;
  for (size_t i = 0; i < y.size(); ++i) miss += y[i] != yhat[i];
  return static_cast<double>(miss) / static_cast<double>(y.size());
}

double squared_error(std::span<const double> y, std::span<const double> yhat) {
  check_same_size(y.size(), yhat.size(), "squared-error");
  if (y.empty()) throw Error("squared-error: empty input");
  check_finite(y, "squared-error");
  check_finite(yhat, "squared-error");
  double acc = 0.0;
  for (size_t i = 0; i < y.size(); ++i) {
    double d = y[i] - yhat[i];
    acc += d * d;
  }
  return acc / static_cast<double>(y.size());
}

double weighted_auc(std::span<const double> y, std::span<const double> scores,
                    std::span<const double> w) {
  check_same_size(y.size(), scores.size(), "auc");
  if (!w.empty()) check_same_size(w.size(), y.size(), "auc weights");

  // Entries with positive weight, sorted by score ascending.
  std::vector<int> order;
  order.reserve(y.size());
  for (size_t i = 0; i < y.size(); ++i) {
    double wi = w.empty() ? 1.0 : w[i];
    if (wi < 0.0) throw Error("auc: negative weight");
    if (wi == 0.0) continue;
    if (y[i] != 0.0 && y[i] != 1.0) throw Error("auc: labels must be 0 or 1");
    order.push_back(static_cast<int>(i));
  }
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return scores[a] < scores[b]; });

  double u = 0.0, cum_neg = 0.0, w_pos = 0.0, w_neg = 0.0;
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i;
    double gp = 0.0, gn = 0.0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      double wj = w.empty() ? 1.0 : w[order[j]];
      if (y[order[j]] == 1.0) gp += wj; else gn += wj;
      ++j;
    }
    u += gp * (cum_neg + 0.5 * gn);
    cum_neg += gn;
    w_pos += gp;
    w_neg += gn;
    i = j;
  }
  if (w_pos == 0.0 || w_neg == 0.0) {
    throw DegenerateMetricError("auc undefined: only one class present");
  }
  return u / (w_pos * w_neg);
}

double auc(std::span<const double> y, std::span<const double> scores) {
  if (y.empty()) throw Error("auc: empty input");
  check_finite(scores, "auc scores");
  check_finite(y, "auc labels");
  return weighted_auc(y, scores, {});
}

double weighted_concordance_index(std::span<const double> times,
                                  std::span<const uint8_t> events,
                                  std::span<const double> risk, std::span<const double> w) {
  check_same_size(times.size(), events.size(), "c-index times/events");
  check_same_size(times.size(), risk.size(), "c-index times/risk");
  if (!w.empty()) check_same_size(w.size(), times.size(), "c-index weights");

  std::vector<int> keep;
  keep.reserve(times.size());
  for (size_t i = 0; i < times.size(); ++i) {
    double wi = w.empty() ? 1.0 : w[i];
    if (wi < 0.0) throw Error("c-index: negative weight");
    if (wi > 0.0) keep.push_back(static_cast<int>(i));
  }

  double concordant = 0.0, total = 0.0;
  for (size_t a = 0; a < keep.size(); ++a) {
    for (size_t b = a + 1; b < keep.size(); ++b) {
      int i = keep[a], j = keep[b];
      int earlier, later;
      if (times[i] < times[j] && events[i] == 1) {
        earlier = i; later = j;
      } else if (times[j] < times[i] && events[j] == 1) {
        earlier = j; later = i;
      } else {
        continue;
      }
      double ww = (w.empty() ? 1.0 : w[i]) * (w.empty() ? 1.0 : w[j]);
      total += ww;
      if (risk[earlier] > risk[later]) concordant += ww;
      else if (risk[earlier] == risk[later]) concordant += 0.5 * ww;
    }
  }
  if (total == 0.0) {
    throw DegenerateMetricError("concordance index undefined: no comparable pairs");
  }
  return concordant / total;
}

double concordance_index(std::span<const double> times, std::span<const uint8_t> events,
                         std::span<const double> risk) {
  if (times.empty()) throw Error("c-index: empty input");
  check_finite(times, "c-index times");
  check_finite(risk, "c-index risk");
  for (uint8_t e : events) {
    if (e > 1) throw Error("c-index: event flags must be 0 or 1");
  }
  return weighted_concordance_index(times, events, risk, {});
}

double as_loss(const MetricSpec& m, double value) {
  if (!std::isfinite(value)) throw Error("as_loss: non-finite value");
  return m.gain() ? 1.0 - value : value;
}

double from_loss(const MetricSpec& m, double loss) {
  if (!std::isfinite(loss)) throw Error("from_loss: non-finite loss");
  return m.gain() ? 1.0 - loss : loss;
}

}  // namespace bbcv
