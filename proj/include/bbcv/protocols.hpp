#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bbcv/learners.hpp"
#include "bbcv/resampling.hpp"
#include "bbcv/selection.hpp"

namespace bbcv {

enum class Protocol { cv, cvt, ncv, tt, bbc, bced };

const char* protocol_name(Protocol p);
Protocol protocol_from_name(std::string_view name);

// One permanently dropped configuration: the 1-based fold after which the
// drop happened (= folds it was trained for) and the deciding p-hat.
struct DropEvent {
  int fold = 0;
  int config = -1;
  double p_hat = 0.0;
};

struct ProtocolReport {
  std::string protocol;
  MetricSpec metric;
  SelectionMode selection = SelectionMode::pooled;
  double estimate_loss = 0.0;
  std::optional<std::array<double, 2>> ci_loss;
  std::optional<double> uncorrected_loss;
  int selected_config = -1;
  std::string selected_config_id;
  std::string final_model_recipe;
  long models_trained = 0;
  std::vector<double> per_bootstrap_losses;
  std::vector<DropEvent> drop_trace;
  std::vector<std::string> warnings;
};

// Builds the fold plan a protocol run uses: stratified for classification
// metrics, unstratified for continuous/survival labels.
FoldPlan make_fold_plan(const LabelVector& labels, const MetricSpec& metric, int k,
                        RngStream rng);

struct CvResult {
  ProtocolReport report;
  PredictionStore store;
  TrainedModel final_model;
};

// Plain K-fold estimate of a single configuration: K fold models plus one
// final model on all data; the estimate is the mean of per-fold losses.
CvResult run_cv(const BoundLearner& learner, const Dataset& data, const FoldPlan& plan,
                const MetricSpec& metric, const SeedPlan& seed);

struct CvtResult {
  ProtocolReport report;
  PredictionStore store;
  TrainedModel final_model;
  std::vector<uint8_t> alive;
};

// CV with tuning: fills the full prediction store (K*C models), selects by
// css and reports the winner's loss on its own out-of-sample predictions
// (the optimistically biased estimate the corrections fix), then fits the
// winner on all data. Configurations whose training fails are marked dead
// and excluded from selection.
CvtResult run_cvt(std::span<const BoundLearner> learners, const Dataset& data,
                  const FoldPlan& plan, const MetricSpec& metric, const SeedPlan& seed,
                  SelectionMode mode = SelectionMode::pooled);

struct NcvResult {
  ProtocolReport report;
  PredictionStore outer_store;
  std::vector<int> outer_winners;
  TrainedModel final_model;
};

// Nested CV: per outer fold, an inner CV-with-tuning over the remaining K-1
// folds picks a winner, which is refit on everything but the outer fold and
// scored there. K^2*C + K + 1 models; the final model matches run_cvt's.
NcvResult run_ncv(std::span<const BoundLearner> learners, const Dataset& data,
                  const FoldPlan& plan, const MetricSpec& metric, const SeedPlan& seed,
                  SelectionMode mode = SelectionMode::pooled);

struct TtResult {
  int winner = -1;
  double l_cvt = 0.0;   // fold-averaged loss of the winner
  double tt_bias = 0.0; // mean gap between the winner and the per-fold best
  double l_tt = 0.0;
  std::vector<int> skipped_folds;
  SelectionOutcome selection;
};

// Additive correction on a complete single-repeat store: adds the mean
// per-fold winner-vs-fold-best gap back onto the fold-averaged winner loss.
// Guarantees 0 <= tt_bias <= l_cvt, so l_cvt <= l_tt <= 2*l_cvt. Degenerate
// folds abort unless skip_degenerate_folds drops them from both averages.
TtResult tt_correct(const PredictionStore& store, const MetricSpec& metric,
                    SelectionMode mode = SelectionMode::pooled,
                    bool skip_degenerate_folds = false);

// Instrumentation for the bootstrap row sampling: per bootstrap and repeat,
// the (row, count) multiset that was pooled. Used to verify that one draw is
// applied jointly across repeats.
struct BbcTrace {
  std::vector<std::vector<std::vector<std::pair<int, int>>>> rows;
};

struct BbcResult {
  double estimate_loss = 0.0;
  std::array<double, 2> ci_loss{0.0, 0.0};
  std::vector<double> per_bootstrap;
  int selected_config = -1;
  SelectionOutcome selection;
};

// Bootstrap bias correction: B times, resample the rows of the store with
// replacement, select by css on the in-bag multiset and score the selection
// on the out-bag rows; the estimate is the mean of those B losses and the CI
// the percentile interval. Rows are sampled once per iteration and applied
// jointly to every repeat. Draws are retried (bounded) when the out-bag is
// empty, a configuration loses metric support, or the metric degenerates.
BbcResult bbc(const PredictionStore& store, const MetricSpec& metric, int b, double alpha,
              const SeedPlan& seed, std::span<const uint8_t> alive = {},
              BbcTrace* trace = nullptr);

struct BcedParams {
  int b = 1000;
  double alpha = 0.05;
  double alpha_drop = 0.99;
  int min_oos = 50;
};

// Bootstrap dropping test over the accumulated out-of-sample rows: keeps the
// current css winner and drops every alive configuration whose bootstrap
// probability of losing to it exceeds alpha_drop. fold is 1-based and only
// labels the trace and the draw streams.
void early_drop_test(const PredictionStore& store, std::span<const double> acc_weights,
                     std::span<const int> acc_rows, std::vector<uint8_t>& alive, int fold,
                     const BcedParams& params, const MetricSpec& metric, const SeedPlan& seed,
                     std::vector<DropEvent>& trace, std::vector<double>& p_hat);

struct BcedStoreResult {
  std::vector<uint8_t> alive;
  std::vector<DropEvent> drop_trace;
  std::vector<double> p_hat;
  int selected_config = -1;
  SelectionOutcome selection;
  BbcResult bbc;
};

// Early-dropping schedule on an already-filled complete store: walks the
// folds in order, accumulates their rows, runs the dropping test between
// folds once min_oos rows are available, then estimates via bbc restricted
// to the surviving columns. This is the training-free core of run_bced.
BcedStoreResult bced_on_store(const PredictionStore& store, const MetricSpec& metric,
                              const BcedParams& params, const SeedPlan& seed,
                              SelectionMode mode = SelectionMode::pooled);

struct BcedResult {
  ProtocolReport report;
  PredictionStore store;
  TrainedModel final_model;
  BcedStoreResult detail;
};

// CV with tuning and early dropping: after each fold, configurations that are
// bootstrap-dominated on the accumulated out-of-sample predictions stop being
// trained. Final selection and the bbc estimate use the survivors only.
BcedResult run_bced(std::span<const BoundLearner> learners, const Dataset& data,
                    const FoldPlan& plan, const MetricSpec& metric, const BcedParams& params,
                    const SeedPlan& seed, SelectionMode mode = SelectionMode::pooled);

struct RepeatedCvtResult {
  ProtocolReport report;
  PredictionStore store;
  TrainedModel final_model;
};

// R independent CV-with-tuning passes pooled into an N x C x R tensor.
// Selection pools across repeats; with repeats > 1 the reported estimate and
// CI come from bbc over the tensor (one row draw shared by all repeats) and
// the raw pooled winner loss is kept as uncorrected_loss.
RepeatedCvtResult run_cvt_repeats(std::span<const BoundLearner> learners, const Dataset& data,
                                  int k, int repeats, const MetricSpec& metric, int b,
                                  double alpha, const SeedPlan& seed,
                                  SelectionMode mode = SelectionMode::pooled);

// Expected training counts: K+1 (cv), K*C+1 (cvt, and the store-only
// corrections that ride on it), K^2*C+K+1 (ncv). For bced the drop trace
// yields survivors*K + sum of drop folds + 1.
long count_models(Protocol p, int k, int c, const std::vector<DropEvent>* drop_trace = nullptr);

}  // namespace bbcv
