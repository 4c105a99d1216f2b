// Gate suite for the project's stated acceptance bars. Each criterion prints
// exactly one line; the exit code is the number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <string>
#include <vector>

#include "bbcv/io.hpp"
#include "bbcv/protocols.hpp"
#include "bbcv/simulation.hpp"
#include "helpers.hpp"

using namespace bbcv;
using namespace bbcv::testutil;

namespace {

const MetricSpec kZeroOne = MetricSpec::from_name("zero-one");
const MetricSpec kAuc = MetricSpec::from_name("auc");

int g_failures = 0;

void report(int id, bool pass, const std::string& detail) {
  std::printf("ACCEPTANCE %2d %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof(buf), f, ap);
  va_end(ap);
  return buf;
}

double elapsed_s(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct MeanSe {
  double mean = 0, se = 0;
};

MeanSe mean_se(const std::vector<double>& xs) {
  MeanSe out;
  for (double x : xs) out.mean += x;
  out.mean /= xs.size();
  double ss = 0;
  for (double x : xs) ss += (x - out.mean) * (x - out.mean);
  if (xs.size() > 1) out.se = std::sqrt(ss / (xs.size() - 1) / xs.size());
  return out;
}

// ---- criterion 1: exact training counts ------------------------------------

void criterion_1() {
  auto t0 = std::chrono::steady_clock::now();
  RngStream rng(101, "settings");
  bool ok = true;
  std::string why;
  for (int it = 0; it < 200 && ok; ++it) {
    int k = 2 + static_cast<int>(rng.uniform_below(9));    // [2,10]
    int c = 1 + static_cast<int>(rng.uniform_below(50));   // [1,50]
    int k_ncv = std::max(3, k);  // nested runs need a non-trivial inner split
    Dataset d = toy_dataset(2 * k_ncv);

    std::vector<BoundLearner> learners;
    for (int j = 0; j < c; ++j) {
      learners.push_back(constant_learner("c" + std::to_string(j + 1), 1.0));
    }
    SeedPlan seed{static_cast<uint64_t>(1000 + it)};
    FoldPlan plan = make_fold_plan(d.labels, kZeroOne, k, seed.stream("folds", 0));
    FoldPlan plan_ncv = make_fold_plan(d.labels, kZeroOne, k_ncv, seed.stream("folds", 1));

    reset_models_trained();
    CvResult cv = run_cv(learners[0], d, plan, kZeroOne, seed);
    long cv_delta = static_cast<long>(models_trained_total());
    reset_models_trained();
    CvtResult cvt = run_cvt(learners, d, plan, kZeroOne, seed);
    long cvt_delta = static_cast<long>(models_trained_total());
    reset_models_trained();
    NcvResult ncv = run_ncv(learners, d, plan_ncv, kZeroOne, seed);
    long ncv_delta = static_cast<long>(models_trained_total());

    long cv_want = static_cast<long>(k) + 1;
    long cvt_want = static_cast<long>(k) * c + 1;
    long ncv_want = static_cast<long>(k_ncv) * k_ncv * c + k_ncv + 1;
    if (cv_delta != cv_want || cv.report.models_trained != cv_want ||
        cvt_delta != cvt_want || cvt.report.models_trained != cvt_want ||
        ncv_delta != ncv_want || ncv.report.models_trained != ncv_want) {
      ok = false;
      why = fmt("setting %d (k=%d c=%d): cv %ld/%ld cvt %ld/%ld ncv %ld/%ld", it, k, c,
                cv_delta, cv_want, cvt_delta, cvt_want, ncv_delta, ncv_want);
    }
  }
  double secs = elapsed_s(t0);
  if (ok && secs >= 60.0) {
    ok = false;
    why = fmt("took %.1fs (budget 60s)", secs);
  }
  report(1, ok, ok ? fmt("200 settings, counts exact, %.1fs", secs) : why);
}

// ---- criterion 2: tt bound fuzz + the leave-one-out worst case -------------

void criterion_2() {
  bool ok = true;
  std::string why;
  for (int it = 0; it < 10000 && ok; ++it) {
    RngStream rng(20000 + it, "store");
    int n = 6 + static_cast<int>(rng.uniform_below(35));
    int k = 2 + static_cast<int>(rng.uniform_below(5));
    int c = 1 + static_cast<int>(rng.uniform_below(8));
    PredictionStore st = random_binary_store(rng, n, c, k);
    TtResult tt = tt_correct(st, kZeroOne);
    if (!(tt.tt_bias >= 0.0 && tt.tt_bias <= tt.l_cvt && tt.l_tt >= tt.l_cvt &&
          tt.l_tt <= 2.0 * tt.l_cvt)) {
      ok = false;
      why = fmt("store %d violates the bounds: l_cvt=%.17g bias=%.17g l_tt=%.17g", it, tt.l_cvt,
                tt.tt_bias, tt.l_tt);
    }
  }

  // leave-one-out with two complementary configurations: every fold has a
  // perfect option, so the whole winner loss is charged again as bias
  std::vector<double> labels(4, 1.0);
  std::vector<std::vector<double>> cols{{1, 1, 0, 0}, {0, 0, 1, 1}};
  std::vector<int> fold_of{0, 1, 2, 3};
  PredictionStore loo = make_store(labels, cols, 4, fold_of);
  TtResult tt = tt_correct(loo, kZeroOne);
  if (!(tt.l_tt == 2.0 * tt.l_cvt && tt.l_cvt == 0.5 && tt.l_tt == 1.0)) {
    ok = false;
    why = fmt("loo instance: l_cvt=%.17g l_tt=%.17g", tt.l_cvt, tt.l_tt);
  }
  report(2, ok, ok ? "10000 stores inside the bounds, loo instance doubles exactly" : why);
}

// ---- criteria 3 and 6b: smoke-grid bias signs and ci coverage --------------

struct SmokeOutcome {
  SimStudyResult study;
  double secs = 0;
};

SmokeOutcome run_smoke() {
  SmokeOutcome out;
  auto t0 = std::chrono::steady_clock::now();
  BcedParams params;
  params.b = 1000;
  params.alpha = 0.05;
  params.alpha_drop = 0.99;
  params.min_oos = 1;
  auto settings = smoke_settings(200);
  out.study = run_bias_study(settings, 10, SeedPlan{20260815}, params);
  out.secs = elapsed_s(t0);
  return out;
}

void criterion_3(const SmokeOutcome& smoke) {
  bool ok = true;
  std::string why;
  std::string summary;
  for (const SimRow& row : smoke.study.rows) {
    const auto& cvt = row.stats[0];
    const auto& ncv = row.stats[2];
    const auto& bbc = row.stats[3];

    if (row.setting.n == 20) {
      bool a = cvt.mean_bias > 0.0 && cvt.mean_bias >= 0.05 - 2.0 * cvt.se_bias;
      if (!a) {
        ok = false;
        why += fmt("[a n=%d c=%d cvt=%.3f se=%.3f]", row.setting.n, row.setting.c,
                   cvt.mean_bias, cvt.se_bias);
      }
      summary += fmt("cvt@%d/%d=%+.3f ", row.setting.n, row.setting.c, cvt.mean_bias);
    }
    bool b = bbc.mean_bias >= -0.06 - 2.0 * bbc.se_bias && bbc.mean_bias <= 0.01 + 2.0 * bbc.se_bias;
    if (!b) {
      ok = false;
      why += fmt("[b n=%d c=%d bbc=%.3f se=%.3f]", row.setting.n, row.setting.c, bbc.mean_bias,
                 bbc.se_bias);
    }
    bool cok = std::fabs(ncv.mean_bias) <= 0.03 + 2.0 * ncv.se_bias;
    if (!cok) {
      ok = false;
      why += fmt("[c n=%d c=%d ncv=%.3f se=%.3f]", row.setting.n, row.setting.c, ncv.mean_bias,
                 ncv.se_bias);
    }
    std::vector<double> diffs;
    for (const auto& rep : row.replicates) diffs.push_back(rep.bias_bced - rep.bias_ncv);
    MeanSe d = mean_se(diffs);
    if (!(std::fabs(d.mean) <= 0.02 + 2.0 * d.se)) {
      ok = false;
      why += fmt("[d n=%d c=%d bced-ncv=%.3f se=%.3f]", row.setting.n, row.setting.c, d.mean,
                 d.se);
    }
  }
  if (ok && smoke.secs >= 600.0) {
    ok = false;
    why = fmt("took %.0fs (budget 600s)", smoke.secs);
  }
  report(3, ok, ok ? summary + fmt("all rows inside 2se bands, %.0fs", smoke.secs) : why);
}

void criterion_6(const SmokeOutcome& smoke) {
  bool ok = true;
  std::string why;

  auto ranks = percentile_ranks(1000, 0.05);
  if (ranks != std::array<int, 2>{25, 975}) {
    ok = false;
    why += fmt("[ranks %d/%d]", ranks[0], ranks[1]);
  }
  RngStream rng(60, "ci");
  std::vector<double> values(1000);
  for (double& v : values) v = rng.uniform01();
  auto ci = percentile_ci(values, 0.05);
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  if (ci[0] != sorted[24] || ci[1] != sorted[974]) {
    ok = false;
    why += "[interval endpoints are not the 25th/975th order statistics]";
  }

  std::string cov_txt;
  for (const SimRow& row : smoke.study.rows) {
    if (row.setting.n != 100) continue;
    double cov = row.stats[3].coverage;
    cov_txt += fmt("cov@100/%d=%.3f ", row.setting.c, cov);
    if (!(cov >= 0.90)) {
      ok = false;
      why += fmt("[coverage %.3f at c=%d]", cov, row.setting.c);
    }
  }
  report(6, ok, ok ? "b=1000 endpoints are b(25)/b(975), " + cov_txt : why);
}

// ---- criterion 4: single-configuration convergence -------------------------

void criterion_4() {
  bool ok = true;
  std::string why;
  double worst = 0;
  for (int it = 0; it < 20 && ok; ++it) {
    RngStream rng(400 + it, "store");
    PredictionStore st = random_binary_store(rng, 200, 1, 5);
    std::vector<double> unit(200, 1.0);
    double pooled = pooled_config_loss(st, 0, unit, kZeroOne);
    BbcResult res = bbc(st, kZeroOne, 10000, 0.05, SeedPlan{static_cast<uint64_t>(4000 + it)});
    double gap = std::fabs(res.estimate_loss - pooled);
    worst = std::max(worst, gap);
    if (gap >= 0.01) {
      ok = false;
      why = fmt("seed %d: |bbc - pooled| = %.4f", it, gap);
    }
  }
  report(4, ok, ok ? fmt("20 seeds, worst |bbc-pooled| = %.4f", worst) : why);
}

// ---- criterion 5: distinct in-bag fraction ----------------------------------

void criterion_5() {
  const int n = 1000, draws = 10000;
  SeedPlan seed{632};
  double sum = 0;
  for (int b = 0; b < draws; ++b) {
    sum += static_cast<double>(bootstrap_draw(n, seed, "frac", b).distinct_in_bag()) / n;
  }
  double mean = sum / draws;
  bool ok = mean >= 0.627 && mean <= 0.637;
  report(5, ok, fmt("mean distinct fraction %.4f", mean));
}

// ---- criterion 7: no-drop equivalence and the two-config scenario ----------

void criterion_7() {
  bool ok = true;
  std::string why;

  GridSpec spec;
  spec.blocks.push_back({"knn", {{"k", {1, 3, 5}}}});
  auto learners = bind_grid(expand_grid(spec));
  for (int it = 0; it < 50 && ok; ++it) {
    RngStream rng(700 + it, "data");
    Dataset d;
    d.n = 24;
    d.d = 1;
    d.x.resize(24);
    d.labels.values.resize(24);
    for (int i = 0; i < 24; ++i) {
      d.x[i] = i * 1.13;
      d.labels.values[i] = i < 2 ? i : (rng.uniform_below(2) ? 1.0 : 0.0);
    }
    SeedPlan seed{static_cast<uint64_t>(7000 + it)};
    FoldPlan plan = make_fold_plan(d.labels, kZeroOne, 4, seed.stream("folds", 0));

    CvtResult cvt = run_cvt(learners, d, plan, kZeroOne, seed);
    BbcResult manual = bbc(cvt.store, kZeroOne, 300, 0.05, seed, cvt.alive);

    BcedParams params;
    params.b = 300;
    params.alpha_drop = 1.0;
    params.min_oos = 1;
    BcedResult bced = run_bced(learners, d, plan, kZeroOne, params, seed);
    bool same = bced.detail.drop_trace.empty() &&
                bced.detail.bbc.per_bootstrap == manual.per_bootstrap &&
                bced.report.estimate_loss == manual.estimate_loss &&
                bced.report.ci_loss.has_value() &&
                (*bced.report.ci_loss)[0] == manual.ci_loss[0] &&
                (*bced.report.ci_loss)[1] == manual.ci_loss[1] &&
                bced.report.selected_config == cvt.report.selected_config &&
                bced.store.values == cvt.store.values;
    if (!same) {
      ok = false;
      why = fmt("seed %d: alpha_drop=1.0 run diverged from cvt+bbc", it);
    }
  }

  if (ok) {
    // one always-correct and one always-wrong configuration at k=10
    Dataset d = toy_dataset(20);
    std::vector<BoundLearner> two{oracle_learner("right"), oracle_learner("wrong", true)};
    SeedPlan seed{777};
    FoldPlan plan = make_fold_plan(d.labels, kZeroOne, 10, seed.stream("folds", 0));
    BcedParams params;
    params.b = 1000;
    params.alpha_drop = 0.99;
    params.min_oos = 2;

    reset_models_trained();
    run_cvt(two, d, plan, kZeroOne, seed);
    long cvt_models = static_cast<long>(models_trained_total());
    reset_models_trained();
    BcedResult res = run_bced(two, d, plan, kZeroOne, params, seed);
    long bced_models = static_cast<long>(models_trained_total());

    bool scenario = cvt_models == 21 && bced_models == 12 &&
                    res.report.models_trained == 12 &&
                    res.detail.drop_trace.size() == 1 &&
                    res.detail.drop_trace[0].fold == 1 &&
                    res.detail.drop_trace[0].config == 1 &&
                    res.detail.drop_trace[0].p_hat == 1.0 &&
                    count_models(Protocol::bced, 10, 2, &res.detail.drop_trace) == 12;
    if (!scenario) {
      ok = false;
      why = fmt("scenario: cvt=%ld bced=%ld drops=%zu", cvt_models, bced_models,
                res.detail.drop_trace.size());
    }
  }
  report(7, ok, ok ? "50 seeds bit-identical, scenario drops at fold 1 with p=1 (21 -> 12)" : why);
}

// ---- criterion 8: training savings under dropping ---------------------------

void criterion_8() {
  auto t0 = std::chrono::steady_clock::now();
  SimSetting setting;
  setting.n = 500;
  setting.c = 100;
  setting.reps = 200;
  BcedParams params;
  params.b = 1000;
  params.alpha = 0.05;
  params.alpha_drop = 0.99;
  params.min_oos = 50;
  SimStudyResult study = run_bias_study({&setting, 1}, 10, SeedPlan{88}, params);
  double mean_ratio = 0;
  for (const auto& rep : study.rows[0].replicates) {
    mean_ratio += static_cast<double>(rep.models_cvt) / rep.models_bced;
  }
  mean_ratio /= study.rows[0].replicates.size();
  bool ok = mean_ratio >= 2.0;
  report(8, ok, fmt("mean cvt/bced training ratio %.2f over 200 replicates, %.0fs", mean_ratio,
                    elapsed_s(t0)));
}

// ---- criterion 9: one row draw shared by every repeat -----------------------

void criterion_9() {
  bool ok = true;
  std::string why;

  RngStream rng(90, "store");
  PredictionStore one = random_binary_store(rng, 50, 3, 5);
  PredictionStore three = PredictionStore::create(one.labels, one.config_ids, 3, one.k_folds);
  for (int r = 0; r < 3; ++r) {
    for (int i = 0; i < one.n_samples; ++i) {
      three.fold_of[r * one.n_samples + i] = one.fold_of[i];
      for (int j = 0; j < one.n_configs; ++j) three.set(i, j, r, one.value(i, j));
    }
  }
  BbcTrace trace;
  bbc(three, kZeroOne, 500, 0.05, SeedPlan{91}, {}, &trace);
  for (size_t b = 0; b < trace.rows.size() && ok; ++b) {
    const auto& per_rep = trace.rows[b];
    if (per_rep.size() != 3 || per_rep[1] != per_rep[0] || per_rep[2] != per_rep[0]) {
      ok = false;
      why = fmt("bootstrap %zu drew different rows across repeats", b);
    }
  }

  for (int it = 0; it < 10 && ok; ++it) {
    RngStream srng(92 + it, "store");
    PredictionStore single = it % 2 ? random_score_store(srng, 40, 3, 4)
                                    : random_binary_store(srng, 40, 3, 4);
    PredictionStore dup = PredictionStore::create(single.labels, single.config_ids, 2,
                                                  single.k_folds);
    for (int r = 0; r < 2; ++r) {
      for (int i = 0; i < single.n_samples; ++i) {
        dup.fold_of[r * single.n_samples + i] = single.fold_of[i];
        for (int j = 0; j < single.n_configs; ++j) dup.set(i, j, r, single.value(i, j));
      }
    }
    const MetricSpec metric = it % 2 ? kAuc : kZeroOne;
    SeedPlan seed{static_cast<uint64_t>(9000 + it)};
    BbcResult a = bbc(single, metric, 500, 0.05, seed);
    BbcResult b = bbc(dup, metric, 500, 0.05, seed);
    if (a.per_bootstrap != b.per_bootstrap || a.estimate_loss != b.estimate_loss ||
        a.ci_loss != b.ci_loss) {
      ok = false;
      why = fmt("duplicated store diverged (%s, seed %d)", metric.name(), it);
    }
  }
  report(9, ok, ok ? "row multisets identical across repeats, duplicated store exact" : why);
}

// ---- criterion 10: oracle equivalence ----------------------------------------

void criterion_10() {
  bool ok = true;
  std::string why;

  RngStream rng(100, "auc");
  for (int it = 0; it < 1000 && ok; ++it) {
    int n = 2 + static_cast<int>(rng.uniform_below(60));
    std::vector<double> y(n), s(n);
    y[0] = 1.0;
    y[1] = 0.0;
    for (int i = 2; i < n; ++i) y[i] = rng.uniform_below(2) ? 1.0 : 0.0;
    for (int i = 0; i < n; ++i) s[i] = static_cast<double>(rng.uniform_below(12)) / 11.0;
    if (std::fabs(auc(y, s) - auc_oracle(y, s)) > 1e-12) {
      ok = false;
      why = fmt("auc instance %d deviates from the all-pairs oracle", it);
    }
  }

  for (int it = 0; it < 500 && ok; ++it) {
    RngStream srng(10000 + it, "store");
    int n = 6 + static_cast<int>(srng.uniform_below(40));
    int c = 1 + static_cast<int>(srng.uniform_below(10));
    int k = 2 + static_cast<int>(srng.uniform_below(3));
    if (it % 2 == 0) {
      PredictionStore st = random_binary_store(srng, n, c, k);
      if (css_all(st, {}, kZeroOne).best_index != brute_force_zero_one_winner(st, {})) {
        ok = false;
        why = fmt("zero-one store %d picked a different winner", it);
      }
    } else {
      PredictionStore st = random_score_store(srng, n, c, k);
      if (css_all(st, {}, kAuc).best_index != brute_force_auc_winner(st, {})) {
        ok = false;
        why = fmt("auc store %d picked a different winner", it);
      }
    }
  }
  report(10, ok, ok ? "1000 auc instances exact, 500 stores pick identical winners" : why);
}

}  // namespace

int main() {
  criterion_1();
  criterion_2();
  SmokeOutcome smoke = run_smoke();
  criterion_3(smoke);
  criterion_4();
  criterion_5();
  criterion_6(smoke);
  criterion_7();
  criterion_8();
  criterion_9();
  criterion_10();
  if (g_failures == 0) {
    std::printf("all acceptance criteria pass\n");
  } else {
    std::printf("%d acceptance criteria failed\n", g_failures);
  }
  return g_failures;
}
