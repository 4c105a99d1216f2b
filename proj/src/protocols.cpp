#include "bbcv/protocols.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace bbcv {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<int> all_rows(int n) {
  std::vector<int> rows(n);
  for (int i = 0; i < n; ++i) rows[i] = i;
  return rows;
}

std::vector<int> rows_not_in_fold(const FoldPlan& plan, int fold) {
  std::vector<int> rows;
  rows.reserve(plan.n());
  for (int i = 0; i < plan.n(); ++i) {
    if (plan.assignment[i] != fold) rows.push_back(i);
  }
  return rows;
}

std::vector<double> predict_for_metric(const TrainedModel& model, const Dataset& data,
                                       std::span<const int> rows, const MetricSpec& metric) {
  return metric.gain() ? model.predict_scores(data, rows) : model.predict_labels(data, rows);
}

LabelVector subset_labels(const LabelVector& labels, std::span<const int> rows) {
  LabelVector out;
  out.values.reserve(rows.size());
  for (int i : rows) out.values.push_back(labels.values[i]);
  if (labels.has_events()) {
    out.events.reserve(rows.size());
    for (int i : rows) out.events.push_back(labels.events[i]);
  }
  return out;
}

void note_warning(std::vector<std::string>& warnings, const std::string& w) {
  if (std::find(warnings.begin(), warnings.end(), w) == warnings.end()) warnings.push_back(w);
}

std::vector<std::string> learner_ids(std::span<const BoundLearner> learners) {
  std::vector<std::string> ids;
  ids.reserve(learners.size());
  for (const auto& l : learners) ids.push_back(l.id);
  return ids;
}

// One CV pass of every alive learner into repeat slice `rep`. Failing
// configurations are marked dead and excluded from later selection.
void fill_cvt_slice(PredictionStore& store, int rep, std::span<const BoundLearner> learners,
                    const Dataset& data, const FoldPlan& plan, const MetricSpec& metric,
                    const SeedPlan& seed, std::vector<uint8_t>& alive,
                    std::vector<std::string>& warnings, long& models) {
  auto folds = plan.folds();
  for (int i = 0; i < data.n; ++i) {
    store.fold_of[static_cast<size_t>(rep) * data.n + i] = plan.assignment[i];
  }
  for (size_t j = 0; j < learners.size(); ++j) {
    if (!alive[j]) continue;
    try {
      for (int k = 0; k < plan.k; ++k) {
        auto train_rows = rows_not_in_fold(plan, k);
        RngStream rng = seed.stream("train", (static_cast<uint64_t>(rep) << 40) |
                                                 (static_cast<uint64_t>(j) << 20) |
                                                 static_cast<uint64_t>(k));
        TrainedModel model = learners[j].fit(data, train_rows, rng);
        ++models;
        if (model.warning) note_warning(warnings, *model.warning);
        auto preds = predict_for_metric(model, data, folds[k], metric);
        for (size_t t = 0; t < folds[k].size(); ++t) {
          store.set(folds[k][t], static_cast<int>(j), rep, preds[t]);
        }
      }
    } catch (const Error& e) {
      alive[j] = 0;
      note_warning(warnings, learners[j].id + " disabled: " + e.what());
    }
  }
}

void validate_bced_params(const BcedParams& params, const MetricSpec& metric) {
  if (params.b < 100) throw Error("early dropping: B must be at least 100");
  if (!(params.alpha_drop > 0.5 && params.alpha_drop <= 1.0)) {
    throw Error("early dropping: alpha_drop must be in (0.5, 1]");
  }
  if (params.min_oos < metric.min_samples()) {
    throw Error("early dropping: min_oos must be at least the metric's minimum sample count");
  }
}

}  // namespace

const char* protocol_name(Protocol p) {
  switch (p) {
    case Protocol::cv: return "cv";
    case Protocol::cvt: return "cvt";
    case Protocol::ncv: return "ncv";
    case Protocol::tt: return "tt";
    case Protocol::bbc: return "bbc";
    case Protocol::bced: return "bced";
  }
  return "?";
}

Protocol protocol_from_name(std::string_view name) {
  if (name == "cv") return Protocol::cv;
  if (name == "cvt") return Protocol::cvt;
  if (name == "ncv") return Protocol::ncv;
  if (name == "tt") return Protocol::tt;
  if (name == "bbc") return Protocol::bbc;
  if (name == "bced") return Protocol::bced;
  throw Error("unknown protocol '" + std::string(name) + "'");
}

FoldPlan make_fold_plan(const LabelVector& labels, const MetricSpec& metric, int k,
                        RngStream rng) {
  bool classification =
      metric.kind == MetricKind::zero_one || metric.kind == MetricKind::auc;
  if (classification) return stratified_fold_plan(labels, k, std::move(rng));
  return unstratified_fold_plan(labels.size(), k, std::move(rng));
}

CvResult run_cv(const BoundLearner& learner, const Dataset& data, const FoldPlan& plan,
                const MetricSpec& metric, const SeedPlan& seed) {
  data.validate();
  plan.validate();
  if (plan.n() != data.n) throw Error("cv: fold plan does not match the dataset");

  PredictionStore store = PredictionStore::create(data.labels, {learner.id}, 1, plan.k);
  std::vector<uint8_t> alive{1};
  ProtocolReport report;
  report.protocol = "cv";
  report.metric = metric;
  long models = 0;
  fill_cvt_slice(store, 0, std::span<const BoundLearner>{&learner, 1}, data, plan, metric, seed,
                 alive, report.warnings, models);
  if (!alive[0]) {
    throw Error("cv: training failed: " +
                (report.warnings.empty() ? std::string("unknown") : report.warnings.back()));
  }

  report.estimate_loss =
      css_all(store, {}, metric, SelectionMode::fold_mean).pooled_losses[0];
  report.selection = SelectionMode::fold_mean;
  report.selected_config = 0;
  report.selected_config_id = learner.id;

  RngStream rng = seed.stream("train-final", 0);
  auto rows = all_rows(data.n);
  TrainedModel final_model = learner.fit(data, rows, rng);
  ++models;
  if (final_model.warning) note_warning(report.warnings, *final_model.warning);
  report.models_trained = models;
  report.final_model_recipe = "train " + learner.id + " on all data";
  return {std::move(report), std::move(store), std::move(final_model)};
}

CvtResult run_cvt(std::span<const BoundLearner> learners, const Dataset& data,
                  const FoldPlan& plan, const MetricSpec& metric, const SeedPlan& seed,
                  SelectionMode mode) {
  data.validate();
  plan.validate();
  if (plan.n() != data.n) throw Error("cvt: fold plan does not match the dataset");
  if (learners.empty()) throw Error("cvt: no configurations");

  PredictionStore store = PredictionStore::create(data.labels, learner_ids(learners), 1, plan.k);
  std::vector<uint8_t> alive(learners.size(), 1);
  ProtocolReport report;
  report.protocol = "cvt";
  report.metric = metric;
  report.selection = mode;
  long models = 0;
  fill_cvt_slice(store, 0, learners, data, plan, metric, seed, alive, report.warnings, models);

  SelectionOutcome sel;
  try {
    sel = css_all(store, alive, metric, mode);
  } catch (const DegenerateMetricError&) {
    throw;
  } catch (const Error& e) {
    throw Error("cvt: selection failed: " + std::string(e.what()));
  }
  report.selected_config = sel.best_index;
  report.selected_config_id = store.config_ids[sel.best_index];
  report.estimate_loss = sel.pooled_losses[sel.best_index];

  RngStream rng = seed.stream("train-final", static_cast<uint64_t>(sel.best_index));
  auto rows = all_rows(data.n);
  TrainedModel final_model = learners[sel.best_index].fit(data, rows, rng);
  ++models;
  if (final_model.warning) note_warning(report.warnings, *final_model.warning);
  report.models_trained = models;
  report.final_model_recipe = "train " + report.selected_config_id + " on all data";
  return {std::move(report), std::move(store), std::move(final_model), std::move(alive)};
}

NcvResult run_ncv(std::span<const BoundLearner> learners, const Dataset& data,
                  const FoldPlan& plan, const MetricSpec& metric, const SeedPlan& seed,
                  SelectionMode mode) {
  data.validate();
  plan.validate();
  if (plan.n() != data.n) throw Error("ncv: fold plan does not match the dataset");
  if (learners.empty()) throw Error("ncv: no configurations");
  int k_folds = plan.k;
  if (k_folds < 3) throw Error("ncv: needs K >= 3 so the inner loop has at least 2 folds");

  auto ids = learner_ids(learners);
  auto folds = plan.folds();
  int c = static_cast<int>(learners.size());

  PredictionStore outer_store = PredictionStore::create(data.labels, {"ncv-winner"}, 1, k_folds);
  for (int i = 0; i < data.n; ++i) outer_store.fold_of[i] = plan.assignment[i];

  ProtocolReport report;
  report.protocol = "ncv";
  report.metric = metric;
  report.selection = mode;
  long models = 0;
  std::vector<int> outer_winners;

  for (int k = 0; k < k_folds; ++k) {
    auto inner_rows = rows_not_in_fold(plan, k);
    std::vector<int> local(data.n, -1);
    for (size_t t = 0; t < inner_rows.size(); ++t) local[inner_rows[t]] = static_cast<int>(t);

    PredictionStore inner_store =
        PredictionStore::create(subset_labels(data.labels, inner_rows), ids, 1, k_folds - 1);
    for (size_t t = 0; t < inner_rows.size(); ++t) {
      int m = plan.assignment[inner_rows[t]];
      inner_store.fold_of[t] = m > k ? m - 1 : m;
    }

    std::vector<uint8_t> inner_alive(c, 1);
    for (int j = 0; j < c; ++j) {
      try {
        for (int m = 0; m < k_folds; ++m) {
          if (m == k) continue;
          std::vector<int> train_rows;
          train_rows.reserve(data.n);
          for (int i = 0; i < data.n; ++i) {
            if (plan.assignment[i] != k && plan.assignment[i] != m) train_rows.push_back(i);
          }
          RngStream rng = seed.stream("train-inner", (static_cast<uint64_t>(k) << 40) |
                                                         (static_cast<uint64_t>(j) << 20) |
                                                         static_cast<uint64_t>(m));
          TrainedModel model = learners[j].fit(data, train_rows, rng);
          ++models;
          if (model.warning) note_warning(report.warnings, *model.warning);
          auto preds = predict_for_metric(model, data, folds[m], metric);
          for (size_t t = 0; t < folds[m].size(); ++t) {
            inner_store.set(local[folds[m][t]], j, 0, preds[t]);
          }
        }
      } catch (const Error& e) {
        inner_alive[j] = 0;
        note_warning(report.warnings, learners[j].id + " disabled: " + e.what());
      }
    }

    SelectionOutcome inner_sel;
    try {
      inner_sel = css_all(inner_store, inner_alive, metric, mode);
    } catch (const DegenerateMetricError&) {
      throw;
    } catch (const Error& e) {
      throw Error("ncv: inner selection failed on outer fold " + std::to_string(k + 1) + ": " +
                  e.what());
    }
    outer_winners.push_back(inner_sel.best_index);

    RngStream rng = seed.stream("train-inner-final", static_cast<uint64_t>(k));
    TrainedModel winner_model = learners[inner_sel.best_index].fit(data, inner_rows, rng);
    ++models;
    if (winner_model.warning) note_warning(report.warnings, *winner_model.warning);
    auto preds = predict_for_metric(winner_model, data, folds[k], metric);
    for (size_t t = 0; t < folds[k].size(); ++t) {
      outer_store.set(folds[k][t], 0, 0, preds[t]);
    }
  }

  report.estimate_loss =
      css_all(outer_store, {}, metric, SelectionMode::fold_mean).pooled_losses[0];

  CvtResult cvt = run_cvt(learners, data, plan, metric, seed, mode);
  models += cvt.report.models_trained;
  for (const auto& w : cvt.report.warnings) note_warning(report.warnings, w);
  report.selected_config = cvt.report.selected_config;
  report.selected_config_id = cvt.report.selected_config_id;
  report.final_model_recipe = cvt.report.final_model_recipe;
  report.models_trained = models;
  return {std::move(report), std::move(outer_store), std::move(outer_winners),
          std::move(cvt.final_model)};
}

TtResult tt_correct(const PredictionStore& store, const MetricSpec& metric, SelectionMode mode,
                    bool skip_degenerate_folds) {
  store.validate();
  if (store.n_repeats != 1) throw Error("tt correction requires a single-repeat store");
  if (!store.complete()) throw Error("tt correction requires a complete store");
  if (store.k_folds < 2) throw Error("tt correction requires at least 2 folds");
  for (int f : store.fold_of) {
    if (f < 0) throw Error("tt correction: store has rows without fold information");
  }

  TtResult out;
  out.selection = css_all(store, {}, metric, mode);
  out.winner = out.selection.best_index;

  std::vector<double> w(store.n_samples, 0.0);
  double sum_winner = 0.0, sum_min = 0.0;
  int used = 0;
  for (int k = 0; k < store.k_folds; ++k) {
    for (int i = 0; i < store.n_samples; ++i) w[i] = store.fold_of[i] == k ? 1.0 : 0.0;
    try {
      double winner_loss = pooled_config_loss(store, out.winner, w, metric);
      if (std::isnan(winner_loss)) {
        throw DegenerateMetricError("not enough samples for " + std::string(metric.name()));
      }
      double fold_min = std::numeric_limits<double>::infinity();
      for (int j = 0; j < store.n_configs; ++j) {
        double l = pooled_config_loss(store, j, w, metric);
        if (std::isnan(l)) {
          throw DegenerateMetricError("not enough samples for " + std::string(metric.name()));
        }
        fold_min = std::min(fold_min, l);
      }
      sum_winner += winner_loss;
      sum_min += fold_min;
      ++used;
    } catch (const DegenerateMetricError& e) {
      if (!skip_degenerate_folds) {
        throw DegenerateMetricError("fold " + std::to_string(k + 1) + ": " + e.what());
      }
      out.skipped_folds.push_back(k);
    }
  }
  if (used == 0) throw Error("tt correction: every fold was degenerate");
  out.l_cvt = sum_winner / used;
  out.tt_bias = out.l_cvt - sum_min / used;
  out.l_tt = out.l_cvt + out.tt_bias;
  return out;
}

BbcResult bbc(const PredictionStore& store, const MetricSpec& metric, int b, double alpha,
              const SeedPlan& seed, std::span<const uint8_t> alive, BbcTrace* trace) {
  store.validate();
  if (!alive.empty() && static_cast<int>(alive.size()) != store.n_configs) {
    throw Error("bbc: alive mask length mismatch");
  }
  int n = store.n_samples;
  if (n < 2) throw Error("bbc: need at least 2 samples");
  if (b < 100) throw Error("bbc: B must be at least 100");
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error("bbc: alpha must be in (0,1)");
  if (static_cast<int>(std::floor(alpha / 2.0 * b + 1e-9)) < 1) {
    throw Error("bbc: B too small for alpha (floor(alpha/2*B) must be at least 1)");
  }
  int min_s = metric.min_samples();

  // Complete for every configuration still in play: lets the per-draw support
  // check collapse to bag sizes.
  bool eff_complete = store.present.empty();
  if (!eff_complete) {
    eff_complete = true;
    for (int j = 0; j < store.n_configs && eff_complete; ++j) {
      if (!alive.empty() && !alive[j]) continue;
      for (int r = 0; r < store.n_repeats && eff_complete; ++r) {
        const uint8_t* pr = &store.present[store.cell(0, j, r)];
        for (int i = 0; i < n; ++i) {
          if (!pr[i]) {
            eff_complete = false;
            break;
          }
        }
      }
    }
  }

  // Zero-one on a complete store reduces every per-draw selection to integer
  // mismatch sums over a precomputed matrix. All partials are exact integers
  // in double, so losses, winners and ties are bit-identical to the generic
  // path; only the work per bootstrap changes.
  const int n_cfg = store.n_configs;
  bool fast = eff_complete && metric.kind == MetricKind::zero_one &&
              static_cast<size_t>(n) * n_cfg <= (size_t{1} << 24);
  std::vector<double> mis, num;
  if (fast) {
    const double* y = store.labels.values.data();
    mis.assign(static_cast<size_t>(n) * n_cfg, 0.0);
    for (int j = 0; j < n_cfg; ++j) {
      if (!alive.empty() && !alive[j]) continue;
      for (int r = 0; r < store.n_repeats; ++r) {
        const double* col = &store.values[store.cell(0, j, r)];
        for (int i = 0; i < n; ++i) {
          mis[static_cast<size_t>(i) * n_cfg + j] += col[i] != y[i];
        }
      }
    }
    num.resize(n_cfg);
  }

  std::vector<double> per_b(b), w_in(n), w_out(n);
  if (trace) trace->rows.assign(b, {});

  for (int it = 0; it < b; ++it) {
    bool done = false;
    std::string reason = "empty out-bag";
    for (int attempt = 0; attempt < 100 && !done; ++attempt) {
      auto draw = bootstrap_draw_attempt(n, seed.stream("bbc", it, attempt));
      if (!draw) {
        reason = "empty out-bag";
        continue;
      }
      if (!fast) {
        for (int i = 0; i < n; ++i) {
          w_in[i] = draw->counts[i];
          w_out[i] = draw->counts[i] == 0 ? 1.0 : 0.0;
        }
      }
      if (eff_complete) {
        long in_entries = static_cast<long>(n) * store.n_repeats;
        long out_entries = static_cast<long>(draw->out_bag.size()) * store.n_repeats;
        if (in_entries < min_s || out_entries < min_s) {
          reason = "bag too small for the metric";
          continue;
        }
      } else {
        bool supported = true;
        for (int j = 0; j < store.n_configs; ++j) {
          if (!alive.empty() && !alive[j]) continue;
          if (weighted_present_entries(store, j, w_in) < min_s ||
              weighted_present_entries(store, j, w_out) < min_s) {
            supported = false;
            break;
          }
        }
        if (!supported) {
          reason = "a configuration lost metric support in the draw";
          continue;
        }
      }
      int winner = -1;
      if (fast) {
        std::fill(num.begin(), num.end(), 0.0);
        for (int i = 0; i < n; ++i) {
          double w = draw->counts[i];
          if (w == 0.0) continue;
          const double* row = &mis[static_cast<size_t>(i) * n_cfg];
          for (int j = 0; j < n_cfg; ++j) num[j] += w * row[j];
        }
        double den = static_cast<double>(n) * store.n_repeats;
        double best_loss = 0.0;
        for (int j = 0; j < n_cfg; ++j) {
          if (!alive.empty() && !alive[j]) continue;
          double lj = num[j] / den;
          if (winner < 0 || lj < best_loss) {
            winner = j;
            best_loss = lj;
          }
        }
        double onum = 0.0;
        for (int i : draw->out_bag) onum += mis[static_cast<size_t>(i) * n_cfg + winner];
        per_b[it] = onum / (static_cast<double>(draw->out_bag.size()) * store.n_repeats);
      } else {
        try {
          SelectionOutcome sel = css(store, w_in, alive, metric, SelectionMode::pooled);
          double loss_out = pooled_config_loss(store, sel.best_index, w_out, metric);
          if (std::isnan(loss_out)) {
            reason = "out-bag under the metric's minimum support";
            continue;
          }
          winner = sel.best_index;
          per_b[it] = loss_out;
        } catch (const DegenerateMetricError& e) {
          reason = e.what();
          continue;
        }
      }
      if (trace) {
        auto& per_rep = trace->rows[it];
        per_rep.resize(store.n_repeats);
        for (int r = 0; r < store.n_repeats; ++r) {
          for (int i = 0; i < n; ++i) {
            if (draw->counts[i] > 0 && store.is_present(i, winner, r)) {
              per_rep[r].push_back({i, draw->counts[i]});
            }
          }
        }
      }
      done = true;
    }
    if (!done) {
      throw Error("bbc: bootstrap " + std::to_string(it) +
                  " found no usable draw after 100 attempts (" + reason + ")");
    }
  }

  BbcResult out;
  double sum = 0.0;
  for (double v : per_b) sum += v;
  out.estimate_loss = sum / b;
  out.ci_loss = percentile_ci(per_b, alpha);
  out.per_bootstrap = std::move(per_b);
  out.selection = css_all(store, alive, metric, SelectionMode::pooled);
  out.selected_config = out.selection.best_index;
  return out;
}

void early_drop_test(const PredictionStore& store, std::span<const double> acc_weights,
                     std::span<const int> acc_rows, std::vector<uint8_t>& alive, int fold,
                     const BcedParams& params, const MetricSpec& metric, const SeedPlan& seed,
                     std::vector<DropEvent>& trace, std::vector<double>& p_hat) {
  int n_acc = static_cast<int>(acc_rows.size());
  if (n_acc < 2) throw Error("early dropping: need at least 2 accumulated rows");

  SelectionOutcome base = css(store, acc_weights, alive, metric, SelectionMode::pooled);
  int theta_o = base.best_index;

  // Same exact-integer shortcut as the bootstrap correction: when every alive
  // configuration has a prediction on every accumulated row, zero-one losses
  // are mismatch sums over a compact matrix indexed by accumulated row.
  const int n_cfg = store.n_configs;
  bool fast = metric.kind == MetricKind::zero_one &&
              static_cast<size_t>(n_acc) * n_cfg <= (size_t{1} << 24);
  if (fast && !store.present.empty()) {
    for (int j = 0; j < n_cfg && fast; ++j) {
      if (!alive[j]) continue;
      for (int r = 0; r < store.n_repeats && fast; ++r) {
        const uint8_t* pr = &store.present[store.cell(0, j, r)];
        for (int t = 0; t < n_acc; ++t) {
          if (!pr[acc_rows[t]]) {
            fast = false;
            break;
          }
        }
      }
    }
  }
  std::vector<double> mis, cnt, num;
  if (fast) {
    const double* y = store.labels.values.data();
    mis.assign(static_cast<size_t>(n_acc) * n_cfg, 0.0);
    for (int j = 0; j < n_cfg; ++j) {
      if (!alive[j]) continue;
      for (int r = 0; r < store.n_repeats; ++r) {
        const double* col = &store.values[store.cell(0, j, r)];
        for (int t = 0; t < n_acc; ++t) {
          int i = acc_rows[t];
          mis[static_cast<size_t>(t) * n_cfg + j] += col[i] != y[i];
        }
      }
    }
    cnt.resize(n_acc);
    num.resize(n_cfg);
  }

  std::vector<long> tally(store.n_configs, 0);
  std::vector<double> w_b(store.n_samples);
  for (int it = 0; it < params.b; ++it) {
    bool done = false;
    std::string reason;
    for (int attempt = 0; attempt < 100 && !done; ++attempt) {
      RngStream s = seed.stream("bced-drop",
                                (static_cast<uint64_t>(fold) << 32) | static_cast<uint64_t>(it),
                                attempt);
      if (fast) {
        std::fill(cnt.begin(), cnt.end(), 0.0);
        for (int t = 0; t < n_acc; ++t) {
          cnt[s.uniform_below(static_cast<uint64_t>(n_acc))] += 1.0;
        }
        std::fill(num.begin(), num.end(), 0.0);
        for (int t = 0; t < n_acc; ++t) {
          double w = cnt[t];
          if (w == 0.0) continue;
          const double* row = &mis[static_cast<size_t>(t) * n_cfg];
          for (int j = 0; j < n_cfg; ++j) num[j] += w * row[j];
        }
        double den = static_cast<double>(n_acc) * store.n_repeats;
        double ref = num[theta_o] / den;
        for (int j = 0; j < n_cfg; ++j) {
          if (alive[j] && num[j] / den > ref) ++tally[j];
        }
        done = true;
        continue;
      }
      std::fill(w_b.begin(), w_b.end(), 0.0);
      for (int t = 0; t < n_acc; ++t) {
        w_b[acc_rows[s.uniform_below(static_cast<uint64_t>(n_acc))]] += 1.0;
      }
      try {
        SelectionOutcome sel = css(store, w_b, alive, metric, SelectionMode::pooled);
        double ref = sel.pooled_losses[theta_o];
        if (std::isnan(ref)) {
          reason = "reference configuration lost support";
          continue;
        }
        for (int j = 0; j < store.n_configs; ++j) {
          if (alive[j] && sel.pooled_losses[j] > ref) ++tally[j];
        }
        done = true;
      } catch (const DegenerateMetricError& e) {
        reason = e.what();
      }
    }
    if (!done) {
      throw Error("early dropping: bootstrap " + std::to_string(it) +
                  " found no usable draw after 100 attempts (" + reason + ")");
    }
  }

  for (int j = 0; j < store.n_configs; ++j) {
    if (!alive[j]) continue;
    p_hat[j] = static_cast<double>(tally[j]) / params.b;
    if (p_hat[j] > params.alpha_drop) {
      alive[j] = 0;
      trace.push_back({fold, j, p_hat[j]});
    }
  }
  if (!alive[theta_o]) {
    throw Error("early dropping: the reference configuration was dropped (internal error)");
  }
}

BcedStoreResult bced_on_store(const PredictionStore& store, const MetricSpec& metric,
                              const BcedParams& params, const SeedPlan& seed,
                              SelectionMode mode) {
  store.validate();
  validate_bced_params(params, metric);
  if (store.n_repeats != 1) throw Error("early dropping requires a single-repeat store");
  if (!store.complete()) throw Error("early dropping on a store requires a complete store");
  if (store.k_folds < 2) throw Error("early dropping requires fold information");
  for (int f : store.fold_of) {
    if (f < 0) throw Error("early dropping: store has rows without fold information");
  }

  BcedStoreResult out;
  out.alive.assign(store.n_configs, 1);
  out.p_hat.assign(store.n_configs, 0.0);

  std::vector<double> acc_w(store.n_samples, 0.0);
  std::vector<int> acc_rows;
  int threshold = std::max(params.min_oos, metric.min_samples());
  for (int k = 0; k < store.k_folds; ++k) {
    for (int i = 0; i < store.n_samples; ++i) {
      if (store.fold_of[i] == k) {
        acc_w[i] = 1.0;
        acc_rows.push_back(i);
      }
    }
    if (k + 1 < store.k_folds && static_cast<int>(acc_rows.size()) >= threshold) {
      early_drop_test(store, acc_w, acc_rows, out.alive, k + 1, params, metric, seed,
                      out.drop_trace, out.p_hat);
    }
  }

  out.selection = css_all(store, out.alive, metric, mode);
  out.selected_config = out.selection.best_index;
  out.bbc = bbc(store, metric, params.b, params.alpha, seed, out.alive);
  return out;
}

BcedResult run_bced(std::span<const BoundLearner> learners, const Dataset& data,
                    const FoldPlan& plan, const MetricSpec& metric, const BcedParams& params,
                    const SeedPlan& seed, SelectionMode mode) {
  data.validate();
  plan.validate();
  if (plan.n() != data.n) throw Error("bced: fold plan does not match the dataset");
  if (learners.empty()) throw Error("bced: no configurations");
  validate_bced_params(params, metric);

  int k_folds = plan.k;
  int c = static_cast<int>(learners.size());
  auto folds = plan.folds();

  PredictionStore store = PredictionStore::create(data.labels, learner_ids(learners), 1, k_folds);
  for (int i = 0; i < data.n; ++i) store.fold_of[i] = plan.assignment[i];

  ProtocolReport report;
  report.protocol = "bced";
  report.metric = metric;
  report.selection = mode;
  long models = 0;

  std::vector<uint8_t> alive(c, 1);
  std::vector<DropEvent> trace;
  std::vector<double> p_hat(c, 0.0);
  std::vector<double> acc_w(data.n, 0.0);
  std::vector<int> acc_rows;
  int threshold = std::max(params.min_oos, metric.min_samples());

  for (int k = 0; k < k_folds; ++k) {
    auto train_rows = rows_not_in_fold(plan, k);
    for (int j = 0; j < c; ++j) {
      if (!alive[j]) continue;
      try {
        RngStream rng = seed.stream("train", (static_cast<uint64_t>(j) << 20) |
                                                 static_cast<uint64_t>(k));
        TrainedModel model = learners[j].fit(data, train_rows, rng);
        ++models;
        if (model.warning) note_warning(report.warnings, *model.warning);
        auto preds = predict_for_metric(model, data, folds[k], metric);
        for (size_t t = 0; t < folds[k].size(); ++t) store.set(folds[k][t], j, 0, preds[t]);
      } catch (const Error& e) {
        alive[j] = 0;
        note_warning(report.warnings, learners[j].id + " disabled: " + e.what());
      }
    }
    for (int i : folds[k]) {
      acc_w[i] = 1.0;
      acc_rows.push_back(i);
    }
    if (k + 1 < k_folds && static_cast<int>(acc_rows.size()) >= threshold) {
      early_drop_test(store, acc_w, acc_rows, alive, k + 1, params, metric, seed, trace, p_hat);
    }
  }

  SelectionOutcome sel;
  try {
    sel = css_all(store, alive, metric, mode);
  } catch (const DegenerateMetricError&) {
    throw;
  } catch (const Error& e) {
    throw Error("bced: selection failed: " + std::string(e.what()));
  }
  BbcResult correction = bbc(store, metric, params.b, params.alpha, seed, alive);

  RngStream rng = seed.stream("train-final", static_cast<uint64_t>(sel.best_index));
  auto rows = all_rows(data.n);
  TrainedModel final_model = learners[sel.best_index].fit(data, rows, rng);
  ++models;
  if (final_model.warning) note_warning(report.warnings, *final_model.warning);

  report.estimate_loss = correction.estimate_loss;
  report.ci_loss = correction.ci_loss;
  report.per_bootstrap_losses = correction.per_bootstrap;
  report.selected_config = sel.best_index;
  report.selected_config_id = store.config_ids[sel.best_index];
  report.final_model_recipe = "train " + report.selected_config_id + " on all data";
  report.models_trained = models;
  report.drop_trace = trace;

  BcedStoreResult detail;
  detail.alive = std::move(alive);
  detail.drop_trace = std::move(trace);
  detail.p_hat = std::move(p_hat);
  detail.selected_config = sel.best_index;
  detail.selection = std::move(sel);
  detail.bbc = std::move(correction);
  return {std::move(report), std::move(store), std::move(final_model), std::move(detail)};
}

RepeatedCvtResult run_cvt_repeats(std::span<const BoundLearner> learners, const Dataset& data,
                                  int k, int repeats, const MetricSpec& metric, int b,
                                  double alpha, const SeedPlan& seed, SelectionMode mode) {
  data.validate();
  if (learners.empty()) throw Error("cvt: no configurations");
  if (repeats < 1) throw Error("cvt: repeats must be at least 1");

  PredictionStore store =
      PredictionStore::create(data.labels, learner_ids(learners), repeats, k);
  std::vector<uint8_t> alive(learners.size(), 1);
  ProtocolReport report;
  report.protocol = "cvt";
  report.metric = metric;
  report.selection = mode;
  long models = 0;
  for (int r = 0; r < repeats; ++r) {
    FoldPlan plan = make_fold_plan(data.labels, metric, k, seed.stream("folds", r));
    fill_cvt_slice(store, r, learners, data, plan, metric, seed, alive, report.warnings, models);
  }

  SelectionOutcome sel;
  try {
    sel = css_all(store, alive, metric, mode);
  } catch (const DegenerateMetricError&) {
    throw;
  } catch (const Error& e) {
    throw Error("cvt: selection failed: " + std::string(e.what()));
  }
  report.selected_config = sel.best_index;
  report.selected_config_id = store.config_ids[sel.best_index];
  double raw = sel.pooled_losses[sel.best_index];
  if (repeats > 1) {
    BbcResult correction = bbc(store, metric, b, alpha, seed, alive);
    report.estimate_loss = correction.estimate_loss;
    report.ci_loss = correction.ci_loss;
    report.per_bootstrap_losses = std::move(correction.per_bootstrap);
    report.uncorrected_loss = raw;
  } else {
    report.estimate_loss = raw;
  }

  RngStream rng = seed.stream("train-final", static_cast<uint64_t>(sel.best_index));
  auto rows = all_rows(data.n);
  TrainedModel final_model = learners[sel.best_index].fit(data, rows, rng);
  ++models;
  if (final_model.warning) note_warning(report.warnings, *final_model.warning);
  report.models_trained = models;
  report.final_model_recipe = "train " + report.selected_config_id + " on all data";
  return {std::move(report), std::move(store), std::move(final_model)};
}

long count_models(Protocol p, int k, int c, const std::vector<DropEvent>* drop_trace) {
  switch (p) {
    case Protocol::cv:
      return static_cast<long>(k) + 1;
    case Protocol::cvt:
    case Protocol::tt:
    case Protocol::bbc:
      return static_cast<long>(k) * c + 1;
    case Protocol::ncv:
      return static_cast<long>(k) * k * c + k + 1;
    case Protocol::bced: {
      long dropped = drop_trace ? static_cast<long>(drop_trace->size()) : 0;
      long total = (static_cast<long>(c) - dropped) * k + 1;
      if (drop_trace) {
        for (const auto& e : *drop_trace) total += e.fold;
      }
      return total;
    }
  }
  return 0;
}

}  // namespace bbcv
