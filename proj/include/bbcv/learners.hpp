#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "bbcv/dataset.hpp"
#include "bbcv/rng.hpp"

namespace bbcv {

// One hyper-parameter configuration of a built-in learner. Params are kept
// sorted by name; the id string is the canonical wire form, e.g. "knn(k=3)".
struct Configuration {
  std::string learner;
  std::vector<std::pair<std::string, double>> params;

  std::string id() const;
  bool has_param(std::string_view name) const;
  double param(std::string_view name) const;
  double param_or(std::string_view name, double fallback) const;
};

struct GridAxis {
  std::string name;
  std::vector<double> values;
};

struct GridBlock {
  std::string learner;
  std::vector<GridAxis> axes;
};

struct GridSpec {
  std::vector<GridBlock> blocks;
};

struct ConfigGrid {
  std::vector<Configuration> configs;

  int size() const { return static_cast<int>(configs.size()); }
  std::vector<std::string> ids() const;
};

// Cartesian product per block, blocks in order, first axis slowest. Duplicate
// axis values and duplicate resulting configurations are errors.
ConfigGrid expand_grid(const GridSpec& spec);

struct MajorityModel {
  double label = 0.0;
  double score = 0.5;  // positive-class prior of the training rows
};

struct KnnModel {
  int k = 1;
  int d = 0;
  std::vector<double> x;  // training rows, row-major
  std::vector<double> y;
};

struct LogisticModel {
  std::vector<double> w;
  double bias = 0.0;
};

struct StumpModel {
  int feature = 0;
  double threshold = 0.0;  // x[feature] <= threshold goes left
  double left_label = 0.0, right_label = 0.0;
  double left_score = 0.5, right_score = 0.5;
};

struct TrainedModel {
  std::string config_id;
  std::variant<MajorityModel, KnnModel, LogisticModel, StumpModel> impl;
  std::optional<std::string> warning;

  std::vector<double> predict_labels(const Dataset& data, std::span<const int> rows) const;
  // Positive-class score in [0,1] for ranking metrics.
  std::vector<double> predict_scores(const Dataset& data, std::span<const int> rows) const;
};

// Fits the configuration on the given training rows. Deterministic for every
// built-in learner; the stream parameter exists for learners that need
// randomness. Increments the global training counter.
TrainedModel train(const Configuration& config, const Dataset& data,
                   std::span<const int> rows, RngStream& rng);

// Global count of fitted models, used to verify protocol accounting.
uint64_t models_trained_total();
void reset_models_trained();
// Exposed so injected test learners participate in the accounting.
void note_training();

// Type-erased trained-model factory the protocols consume; tests can inject
// synthetic learners with prescribed behavior.
struct BoundLearner {
  std::string id;
  std::function<TrainedModel(const Dataset&, std::span<const int>, RngStream&)> fit;
};

std::vector<BoundLearner> bind_grid(const ConfigGrid& grid);

}  // namespace bbcv
