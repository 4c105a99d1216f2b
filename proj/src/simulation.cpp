#include "bbcv/simulation.hpp"

#include <cmath>
#include <cstdio>

#include "bbcv/parallel.hpp"

namespace bbcv {

namespace {

std::pair<double, double> mean_se(const std::vector<double>& v) {
  if (v.empty()) return {0.0, 0.0};
  double sum = 0.0;
  for (double x : v) sum += x;
  double mean = sum / v.size();
  if (v.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  double se = std::sqrt(ss / (v.size() - 1) / v.size());
  return {mean, se};
}

std::vector<SimProtocolStats> summarize(const std::vector<ReplicateOutcome>& reps) {
  auto collect = [&](auto proj) {
    std::vector<double> v;
    v.reserve(reps.size());
    for (const auto& r : reps) v.push_back(proj(r));
    return v;
  };
  long cvt_models = 0, ncv_models = 0, bced_models = 0;
  int bbc_hits = 0, bced_hits = 0;
  for (const auto& r : reps) {
    cvt_models += r.models_cvt;
    ncv_models += r.models_ncv;
    bced_models += r.models_bced;
    bbc_hits += r.bbc_covered ? 1 : 0;
    bced_hits += r.bced_covered ? 1 : 0;
  }
  double n = reps.empty() ? 1.0 : static_cast<double>(reps.size());

  std::vector<SimProtocolStats> stats(5);
  struct Row {
    const char* name;
    std::vector<double> bias, est;
    double models;
  };
  Row rows[5] = {
      {"cvt", collect([](const auto& r) { return r.bias_cvt; }),
       collect([](const auto& r) { return r.est_cvt; }), cvt_models / n},
      {"tt", collect([](const auto& r) { return r.bias_tt; }),
       collect([](const auto& r) { return r.est_tt; }), cvt_models / n},
      {"ncv", collect([](const auto& r) { return r.bias_ncv; }),
       collect([](const auto& r) { return r.est_ncv; }), ncv_models / n},
      {"bbc", collect([](const auto& r) { return r.bias_bbc; }),
       collect([](const auto& r) { return r.est_bbc; }), cvt_models / n},
      {"bced", collect([](const auto& r) { return r.bias_bced; }),
       collect([](const auto& r) { return r.est_bced; }), bced_models / n},
  };
  for (int i = 0; i < 5; ++i) {
    auto [mb, se] = mean_se(rows[i].bias);
    auto [me, se_e] = mean_se(rows[i].est);
    (void)se_e;
    stats[i].protocol = rows[i].name;
    stats[i].mean_bias = mb;
    stats[i].se_bias = se;
    stats[i].mean_estimate = me;
    stats[i].mean_models = rows[i].models;
  }
  stats[3].coverage = reps.empty() ? -1 : bbc_hits / n;
  stats[4].coverage = reps.empty() ? -1 : bced_hits / n;
  stats[4].speedup = bced_models > 0 ? static_cast<double>(cvt_models) / bced_models : -1;
  return stats;
}

}  // namespace

SimInstance make_instance(int n, int c, double beta_a, double beta_b, RngStream rng) {
  if (n < 2 || c < 1) throw Error("simulation: need n >= 2 and c >= 1");
  if (!(beta_a > 0.0) || !(beta_b > 0.0)) throw Error("simulation: beta parameters must be > 0");
  SimInstance inst;
  inst.n = n;
  inst.c = c;
  inst.true_perf.resize(c);
  for (int j = 0; j < c; ++j) inst.true_perf[j] = rng.beta(beta_a, beta_b);
  inst.latent.resize(static_cast<size_t>(n) * c);
  inst.correct.resize(static_cast<size_t>(n) * c);
  for (int j = 0; j < c; ++j) {
    for (int i = 0; i < n; ++i) {
      size_t at = static_cast<size_t>(j) * n + i;
      inst.latent[at] = rng.uniform01();
      inst.correct[at] = inst.latent[at] < inst.true_perf[j] ? 1 : 0;
    }
  }
  return inst;
}

PredictionStore to_store(const SimInstance& inst, const FoldPlan& plan) {
  if (plan.n() != inst.n) throw Error("simulation: fold plan does not match the instance");
  LabelVector labels;
  labels.values.assign(inst.n, 1.0);
  std::vector<std::string> ids(inst.c);
  for (int j = 0; j < inst.c; ++j) ids[j] = "c" + std::to_string(j + 1);
  PredictionStore store = PredictionStore::create(labels, ids, 1, plan.k);
  for (int j = 0; j < inst.c; ++j) {
    double* col = &store.values[store.cell(0, j, 0)];
    const uint8_t* src = &inst.correct[static_cast<size_t>(j) * inst.n];
    for (int i = 0; i < inst.n; ++i) col[i] = src[i] ? 1.0 : 0.0;
  }
  store.present.clear();
  for (int i = 0; i < inst.n; ++i) store.fold_of[i] = plan.assignment[i];
  return store;
}

double simulate_ncv_on_matrix(const PredictionStore& store, const MetricSpec& metric) {
  store.validate();
  if (store.n_repeats != 1) throw Error("simulation: matrix replay needs a single repeat");
  if (store.k_folds < 2) throw Error("simulation: matrix replay needs fold information");
  std::vector<double> w_train(store.n_samples), w_test(store.n_samples);
  double sum = 0.0;
  for (int k = 0; k < store.k_folds; ++k) {
    for (int i = 0; i < store.n_samples; ++i) {
      bool held = store.fold_of[i] == k;
      w_train[i] = held ? 0.0 : 1.0;
      w_test[i] = held ? 1.0 : 0.0;
    }
    SelectionOutcome sel = css(store, w_train, {}, metric, SelectionMode::pooled);
    double loss = pooled_config_loss(store, sel.best_index, w_test, metric);
    if (std::isnan(loss)) {
      throw DegenerateMetricError("fold " + std::to_string(k + 1) +
                                  " lacks support for the metric");
    }
    sum += loss;
  }
  return sum / store.k_folds;
}

ReplicateOutcome run_replicate(const SimSetting& setting, int k_folds, const SeedPlan& seed,
                               int replicate, const BcedParams& params) {
  SeedPlan rep_plan = seed.child("replicate", static_cast<uint64_t>(replicate));
  SimInstance inst = make_instance(setting.n, setting.c, setting.beta_a, setting.beta_b,
                                   rep_plan.stream("instance", 0));
  MetricSpec metric{MetricKind::zero_one};
  // Rows carry no class labels worth stratifying on.
  FoldPlan plan = unstratified_fold_plan(setting.n, k_folds, rep_plan.stream("folds", 0));
  PredictionStore store = to_store(inst, plan);

  ReplicateOutcome out;
  SelectionOutcome sel = css_all(store, {}, metric, SelectionMode::pooled);
  out.true_cvt = inst.true_perf[sel.best_index];
  double true_loss = 1.0 - out.true_cvt;
  out.est_cvt = 1.0 - sel.pooled_losses[sel.best_index];
  out.bias_cvt = out.est_cvt - out.true_cvt;

  TtResult tt = tt_correct(store, metric);
  out.est_tt = 1.0 - tt.l_tt;
  out.bias_tt = out.est_tt - out.true_cvt;

  out.est_ncv = 1.0 - simulate_ncv_on_matrix(store, metric);
  out.bias_ncv = out.est_ncv - out.true_cvt;

  BbcResult bb = bbc(store, metric, params.b, params.alpha, rep_plan);
  out.est_bbc = 1.0 - bb.estimate_loss;
  out.bias_bbc = out.est_bbc - out.true_cvt;
  out.bbc_covered = bb.ci_loss[0] <= true_loss && true_loss <= bb.ci_loss[1];

  BcedStoreResult bd = bced_on_store(store, metric, params, rep_plan);
  out.true_bced = inst.true_perf[bd.selected_config];
  double true_loss_bced = 1.0 - out.true_bced;
  out.est_bced = 1.0 - bd.bbc.estimate_loss;
  out.bias_bced = out.est_bced - out.true_bced;
  out.bced_covered =
      bd.bbc.ci_loss[0] <= true_loss_bced && true_loss_bced <= bd.bbc.ci_loss[1];
  for (uint8_t a : bd.alive) out.survivors += a ? 1 : 0;

  out.models_cvt = count_models(Protocol::cvt, k_folds, setting.c);
  out.models_ncv = count_models(Protocol::ncv, k_folds, setting.c);
  out.models_bced = count_models(Protocol::bced, k_folds, setting.c, &bd.drop_trace);
  return out;
}

SimStudyResult run_bias_study(std::span<const SimSetting> settings, int k_folds,
                              const SeedPlan& seed, const BcedParams& params, int workers) {
  SimStudyResult study;
  study.k_folds = k_folds;
  study.params = params;
  study.rows.resize(settings.size());
  for (size_t s = 0; s < settings.size(); ++s) {
    const SimSetting& st = settings[s];
    if (st.reps < 1) throw Error("simulation: reps must be at least 1");
    SeedPlan setting_plan = seed.child("setting", s);
    SimRow& row = study.rows[s];
    row.setting = st;
    row.replicates.resize(st.reps);
    parallel_for(
        st.reps,
        [&](int rep) { row.replicates[rep] = run_replicate(st, k_folds, setting_plan, rep, params); },
        workers);
    row.stats = summarize(row.replicates);
  }
  return study;
}

std::vector<SimSetting> smoke_settings(int reps) {
  std::vector<SimSetting> out;
  for (int n : {20, 100, 500}) {
    for (int c : {100, 500}) {
      out.push_back({n, c, 9.0, 6.0, reps});
    }
  }
  return out;
}

std::string format_study(const SimStudyResult& study) {
  std::string out;
  char buf[256];
  for (const auto& row : study.rows) {
    std::snprintf(buf, sizeof(buf), "n=%d c=%d beta=(%g,%g) reps=%d k=%d\n", row.setting.n,
                  row.setting.c, row.setting.beta_a, row.setting.beta_b, row.setting.reps,
                  study.k_folds);
    out += buf;
    std::snprintf(buf, sizeof(buf), "  %-6s %10s %10s %10s %12s %9s %8s\n", "method", "bias",
                  "se", "estimate", "models", "coverage", "speedup");
    out += buf;
    for (const auto& s : row.stats) {
      std::snprintf(buf, sizeof(buf), "  %-6s %10.4f %10.4f %10.4f %12.1f", s.protocol.c_str(),
                    s.mean_bias, s.se_bias, s.mean_estimate, s.mean_models);
      out += buf;
      if (s.coverage >= 0) {
        std::snprintf(buf, sizeof(buf), " %9.3f", s.coverage);
        out += buf;
      } else {
        out += "         -";
      }
      if (s.speedup >= 0) {
        std::snprintf(buf, sizeof(buf), " %8.2f", s.speedup);
        out += buf;
      } else {
        out += "        -";
      }
      out += "\n";
    }
  }
  return out;
}

}  // namespace bbcv
