#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "bbcv/dataset.hpp"
#include "bbcv/learners.hpp"
#include "bbcv/protocols.hpp"
#include "bbcv/simulation.hpp"

namespace bbcv {

// Numeric CSV with a header row; every column except the label column is a
// feature, in header order.
Dataset parse_dataset_csv(std::istream& in, const std::string& label_col,
                          const std::string& origin);
Dataset load_dataset_csv(const std::string& path, const std::string& label_col = "label");

// {"learners": [{"learner": "knn", "params": {"k": [1,3,5]}}, ...]}
// Parameter axes are expanded in alphabetical order.
GridSpec parse_grid_json(const std::string& text);
GridSpec load_grid_json(const std::string& path);

// Prediction matrix CSV: header "sample_id,label,fold[,repeat]" followed by
// one column per configuration. Missing predictions are "NA", folds are
// 1-based and contiguous, survival labels are written "time:event". Sample
// order is first appearance.
PredictionStore parse_prediction_matrix(std::istream& in, const std::string& origin);
PredictionStore load_prediction_matrix(const std::string& path);
void write_prediction_matrix(std::ostream& out, const PredictionStore& store);
std::string prediction_matrix_to_string(const PredictionStore& store);

std::string report_to_json(const ProtocolReport& report);
ProtocolReport report_from_json(const std::string& text);
std::string format_report(const ProtocolReport& report);

std::string study_to_json(const SimStudyResult& study);

// Entry point used by the executable: args exclude the program name.
// Exit codes: 0 ok, 1 data/runtime error, 2 usage error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bbcv
