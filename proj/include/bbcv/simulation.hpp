#pragma once

#include <span>
#include <string>
#include <vector>

#include "bbcv/protocols.hpp"

namespace bbcv {

// Synthetic study: configurations are Bernoulli predictors with latent
// accuracy P_j ~ Beta(a, b); the prediction of config j on sample i is
// correct iff r_ij < P_j with r_ij ~ U(0,1) drawn fresh per cell. Independent
// cells are what create the multiple-comparison optimism the corrections
// target.
struct SimSetting {
  int n = 0;
  int c = 0;
  double beta_a = 9.0;
  double beta_b = 6.0;
  int reps = 200;
};

struct SimInstance {
  int n = 0;
  int c = 0;
  std::vector<uint8_t> correct;   // column-major, correct[j * n + i]
  std::vector<double> true_perf;  // P_j, so true zero-one loss is 1 - P_j
  std::vector<double> latent;     // r_ij, same layout as correct; kept for audit
};

SimInstance make_instance(int n, int c, double beta_a, double beta_b, RngStream rng);

// Encodes the correctness matrix as a prediction store scored with zero-one
// loss: every label is 1 and a correct prediction stores 1.
PredictionStore to_store(const SimInstance& inst, const FoldPlan& plan);

// Fold-held-out selection replayed on the matrix: select on the other folds,
// score the per-fold winner on the held-out fold, average.
double simulate_ncv_on_matrix(const PredictionStore& store, const MetricSpec& metric);

// Estimates and biases are on the accuracy scale: est = 1 - loss estimate,
// bias = est - true accuracy of the selected configuration, so optimism is
// positive. Coverage is judged on the loss-scale CI, which is equivalent.
struct ReplicateOutcome {
  double bias_cvt = 0, bias_tt = 0, bias_ncv = 0, bias_bbc = 0, bias_bced = 0;
  double est_cvt = 0, est_tt = 0, est_ncv = 0, est_bbc = 0, est_bced = 0;
  double true_cvt = 0, true_bced = 0;  // accuracy of the selected config
  bool bbc_covered = false;
  bool bced_covered = false;
  long models_cvt = 0, models_ncv = 0, models_bced = 0;
  int survivors = 0;
};

ReplicateOutcome run_replicate(const SimSetting& setting, int k_folds, const SeedPlan& seed,
                               int replicate, const BcedParams& params);

struct SimProtocolStats {
  std::string protocol;
  double mean_bias = 0;
  double se_bias = 0;
  double mean_estimate = 0;
  double mean_models = 0;
  double coverage = -1;  // fraction of replicates whose CI contains the truth; -1 if n/a
  double speedup = -1;   // total cvt models / total models for this protocol; -1 if n/a
};

struct SimRow {
  SimSetting setting;
  std::vector<SimProtocolStats> stats;  // cvt, tt, ncv, bbc, bced
  std::vector<ReplicateOutcome> replicates;
};

struct SimStudyResult {
  int k_folds = 0;
  BcedParams params;
  std::vector<SimRow> rows;
};

SimStudyResult run_bias_study(std::span<const SimSetting> settings, int k_folds,
                              const SeedPlan& seed, const BcedParams& params, int workers = 0);

std::vector<SimSetting> smoke_settings(int reps = 200);

std::string format_study(const SimStudyResult& study);

}  // namespace bbcv
