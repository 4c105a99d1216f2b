#include "bbcv/io.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "bbcv/version.hpp"
#include "json.hpp"

namespace bbcv {

namespace {

using nlohmann::json;

std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(trim(cur));
  return out;
}

double parse_double_field(const std::string& s, const std::string& where) {
  if (s.empty()) throw ParseError(where + ": empty numeric field");
  const char* begin = s.c_str();
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  if (end != begin + s.size()) throw ParseError(where + ": bad number '" + s + "'");
  return v;
}

long parse_int_field(const std::string& s, const std::string& where) {
  if (s.empty()) throw ParseError(where + ": empty integer field");
  const char* begin = s.c_str();
  char* end = nullptr;
  long v = std::strtol(begin, &end, 10);
  if (end != begin + s.size()) throw ParseError(where + ": bad integer '" + s + "'");
  return v;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << text;
  if (!out) throw Error("failed writing " + path);
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

Dataset parse_dataset_csv(std::istream& in, const std::string& label_col,
                          const std::string& origin) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(origin + ": empty file");
  auto header = split_csv(line);
  int label_idx = -1;
  for (size_t c = 0; c < header.size(); ++c) {
    if (header[c] == label_col) {
      if (label_idx >= 0) throw ParseError(origin + ": duplicate label column '" + label_col + "'");
      label_idx = static_cast<int>(c);
    }
  }
  if (label_idx < 0) throw ParseError(origin + ": no column named '" + label_col + "'");
  if (header.size() < 2) throw ParseError(origin + ": need at least one feature column");
  for (size_t c = 0; c < header.size(); ++c) {
    for (size_t c2 = c + 1; c2 < header.size(); ++c2) {
      if (header[c] == header[c2]) {
        throw ParseError(origin + ": duplicate column '" + header[c] + "'");
      }
    }
  }

  Dataset data;
  data.d = static_cast<int>(header.size()) - 1;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::string where = origin + ":" + std::to_string(lineno);
    auto fields = split_csv(line);
    if (fields.size() != header.size()) {
      throw ParseError(where + ": expected " + std::to_string(header.size()) + " fields, got " +
                       std::to_string(fields.size()));
    }
    for (size_t c = 0; c < fields.size(); ++c) {
      double v = parse_double_field(fields[c], where + " column '" + header[c] + "'");
      if (!std::isfinite(v)) throw ParseError(where + ": non-finite value in '" + header[c] + "'");
      if (static_cast<int>(c) == label_idx) {
        data.labels.values.push_back(v);
      } else {
        data.x.push_back(v);
      }
    }
    ++data.n;
  }
  if (data.n == 0) throw ParseError(origin + ": no data rows");
  try {
    data.validate();
  } catch (const Error& e) {
    throw ParseError(origin + ": " + e.what());
  }
  return data;
}

Dataset load_dataset_csv(const std::string& path, const std::string& label_col) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return parse_dataset_csv(in, label_col, path);
}

GridSpec parse_grid_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("grid: ") + e.what());
  }
  if (!j.is_object() || !j.contains("learners") || !j["learners"].is_array()) {
    throw ParseError("grid: expected an object with a 'learners' array");
  }
  GridSpec spec;
  for (const auto& b : j["learners"]) {
    if (!b.is_object() || !b.contains("learner") || !b["learner"].is_string()) {
      throw ParseError("grid: every entry needs a 'learner' name");
    }
    GridBlock block;
    block.learner = b["learner"].get<std::string>();
    if (b.contains("params")) {
      if (!b["params"].is_object()) throw ParseError("grid: 'params' must be an object");
      for (const auto& [name, vals] : b["params"].items()) {
        GridAxis axis;
        axis.name = name;
        if (vals.is_array()) {
          for (const auto& v : vals) {
            if (!v.is_number()) {
              throw ParseError("grid: parameter '" + name + "' has a non-numeric value");
            }
            axis.values.push_back(v.get<double>());
          }
        } else if (vals.is_number()) {
          axis.values.push_back(vals.get<double>());
        } else {
          throw ParseError("grid: parameter '" + name + "' must be a number or array of numbers");
        }
        if (axis.values.empty()) throw ParseError("grid: parameter '" + name + "' has no values");
        block.axes.push_back(std::move(axis));
      }
      std::sort(block.axes.begin(), block.axes.end(),
                [](const GridAxis& a, const GridAxis& b2) { return a.name < b2.name; });
    }
    spec.blocks.push_back(std::move(block));
  }
  if (spec.blocks.empty()) throw ParseError("grid: no learners");
  return spec;
}

GridSpec load_grid_json(const std::string& path) { return parse_grid_json(read_text_file(path)); }

PredictionStore parse_prediction_matrix(std::istream& in, const std::string& origin) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(origin + ": empty file");
  auto header = split_csv(line);
  bool has_repeat = header.size() >= 4 && header[3] == "repeat";
  size_t fixed = has_repeat ? 4 : 3;
  if (header.size() < fixed + 1 || header[0] != "sample_id" || header[1] != "label" ||
      header[2] != "fold") {
    throw ParseError(origin +
                     ": header must be sample_id,label,fold[,repeat] followed by at least one "
                     "configuration column");
  }
  std::vector<std::string> config_ids(header.begin() + fixed, header.end());

  struct Row {
    int sample = 0;
    int rep1 = 1;
    int fold1 = 1;
    std::vector<double> preds;
    std::vector<uint8_t> have;
  };
  std::vector<Row> rows;
  std::vector<std::string> sample_order;
  std::map<std::string, int> sample_index;
  std::vector<double> label_value;
  std::vector<uint8_t> label_event;
  bool survival = false;
  bool saw_any = false;
  std::set<std::pair<int, int>> seen_rows;
  std::set<int> folds_seen;
  int max_fold = 0, max_rep = 1;

  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::string where = origin + ":" + std::to_string(lineno);
    auto f = split_csv(line);
    if (f.size() != header.size()) {
      throw ParseError(where + ": expected " + std::to_string(header.size()) + " fields, got " +
                       std::to_string(f.size()));
    }
    const std::string& sid = f[0];
    if (sid.empty()) throw ParseError(where + ": empty sample_id");

    double lv;
    bool has_event = false;
    uint8_t ev = 0;
    if (auto colon = f[1].find(':'); colon != std::string::npos) {
      lv = parse_double_field(f[1].substr(0, colon), where + " label time");
      long e = parse_int_field(f[1].substr(colon + 1), where + " label event");
      if (e != 0 && e != 1) throw ParseError(where + ": event must be 0 or 1");
      has_event = true;
      ev = static_cast<uint8_t>(e);
    } else {
      lv = parse_double_field(f[1], where + " label");
    }
    if (!std::isfinite(lv)) throw ParseError(where + ": label must be finite");
    if (!saw_any) {
      survival = has_event;
      saw_any = true;
    } else if (survival != has_event) {
      throw ParseError(where + ": mixed survival and plain labels");
    }

    int si;
    if (auto it = sample_index.find(sid); it == sample_index.end()) {
      si = static_cast<int>(sample_order.size());
      sample_index.emplace(sid, si);
      sample_order.push_back(sid);
      label_value.push_back(lv);
      label_event.push_back(ev);
    } else {
      si = it->second;
      if (label_value[si] != lv || (survival && label_event[si] != ev)) {
        throw ParseError(where + ": label disagrees with an earlier row for sample '" + sid + "'");
      }
    }

    long fold1 = parse_int_field(f[2], where + " fold");
    if (fold1 < 1) throw ParseError(where + ": fold must be >= 1");
    long rep1 = 1;
    if (has_repeat) {
      rep1 = parse_int_field(f[3], where + " repeat");
      if (rep1 < 1) throw ParseError(where + ": repeat must be >= 1");
    }
    if (!seen_rows.insert({si, static_cast<int>(rep1)}).second) {
      throw ParseError(where + ": duplicate row for sample '" + sid + "' repeat " +
                       std::to_string(rep1));
    }
    folds_seen.insert(static_cast<int>(fold1));
    max_fold = std::max(max_fold, static_cast<int>(fold1));
    max_rep = std::max(max_rep, static_cast<int>(rep1));

    Row row;
    row.sample = si;
    row.rep1 = static_cast<int>(rep1);
    row.fold1 = static_cast<int>(fold1);
    row.preds.resize(config_ids.size(), 0.0);
    row.have.resize(config_ids.size(), 0);
    for (size_t c = 0; c < config_ids.size(); ++c) {
      const std::string& field = f[fixed + c];
      if (field == "NA") continue;
      double v = parse_double_field(field, where + " column '" + config_ids[c] + "'");
      if (!std::isfinite(v)) {
        throw ParseError(where + ": prediction in '" + config_ids[c] + "' must be finite or NA");
      }
      row.preds[c] = v;
      row.have[c] = 1;
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(origin + ": no data rows");
  if (max_fold < 2) throw ParseError(origin + ": need at least 2 folds");
  for (int k = 1; k <= max_fold; ++k) {
    if (!folds_seen.count(k)) {
      throw ParseError(origin + ": fold ids must be contiguous 1..K; fold " + std::to_string(k) +
                       " never appears");
    }
  }

  LabelVector labels;
  labels.values = std::move(label_value);
  if (survival) labels.events = std::move(label_event);
  PredictionStore store =
      PredictionStore::create(std::move(labels), std::move(config_ids), max_rep, max_fold);
  store.sample_ids = std::move(sample_order);
  int n = store.n_samples;
  for (const Row& row : rows) {
    store.fold_of[static_cast<size_t>(row.rep1 - 1) * n + row.sample] = row.fold1 - 1;
    for (size_t c = 0; c < row.preds.size(); ++c) {
      if (row.have[c]) store.set(row.sample, static_cast<int>(c), row.rep1 - 1, row.preds[c]);
    }
  }
  try {
    store.validate();
  } catch (const Error& e) {
    throw ParseError(origin + ": " + e.what());
  }
  return store;
}

PredictionStore load_prediction_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return parse_prediction_matrix(in, path);
}

void write_prediction_matrix(std::ostream& out, const PredictionStore& store) {
  store.validate();
  for (const auto& id : store.config_ids) {
    if (id.find(',') != std::string::npos) {
      throw Error("config id '" + id + "' contains a comma and cannot be written as CSV");
    }
  }
  for (const auto& id : store.sample_ids) {
    if (id.find(',') != std::string::npos) {
      throw Error("sample id '" + id + "' contains a comma and cannot be written as CSV");
    }
  }
  bool rep_col = store.n_repeats > 1;
  out << "sample_id,label,fold";
  if (rep_col) out << ",repeat";
  for (const auto& id : store.config_ids) out << ',' << id;
  out << '\n';
  int n = store.n_samples;
  for (int r = 0; r < store.n_repeats; ++r) {
    for (int i = 0; i < n; ++i) {
      int fold = store.fold_of[static_cast<size_t>(r) * n + i];
      if (fold < 0) continue;  // nothing out-of-sample here
      if (store.sample_ids.empty()) {
        out << 's' << (i + 1);
      } else {
        out << store.sample_ids[i];
      }
      out << ',' << fmt17(store.labels.values[i]);
      if (store.labels.has_events()) out << ':' << static_cast<int>(store.labels.events[i]);
      out << ',' << (fold + 1);
      if (rep_col) out << ',' << (r + 1);
      for (int j = 0; j < store.n_configs; ++j) {
        out << ',';
        if (store.is_present(i, j, r)) {
          out << fmt17(store.value(i, j, r));
        } else {
          out << "NA";
        }
      }
      out << '\n';
    }
  }
}

std::string prediction_matrix_to_string(const PredictionStore& store) {
  std::ostringstream out;
  write_prediction_matrix(out, store);
  return out.str();
}

std::string report_to_json(const ProtocolReport& report) {
  json j;
  j["tool"] = "bbcv";
  j["version"] = kVersion;
  j["protocol"] = report.protocol;
  j["metric"] = std::string(report.metric.name());
  j["selection"] = selection_mode_name(report.selection);
  j["estimate_loss"] = report.estimate_loss;
  if (report.ci_loss) j["ci_loss"] = {(*report.ci_loss)[0], (*report.ci_loss)[1]};
  if (report.uncorrected_loss) j["uncorrected_loss"] = *report.uncorrected_loss;
  j["selected_config"] = report.selected_config;
  j["selected_config_id"] = report.selected_config_id;
  j["final_model_recipe"] = report.final_model_recipe;
  j["models_trained"] = report.models_trained;
  j["warnings"] = report.warnings;
  if (!report.drop_trace.empty()) {
    json trace = json::array();
    for (const auto& e : report.drop_trace) {
      trace.push_back({{"fold", e.fold}, {"config", e.config}, {"p_hat", e.p_hat}});
    }
    j["drop_trace"] = std::move(trace);
  }
  if (!report.per_bootstrap_losses.empty()) {
    j["per_bootstrap_losses"] = report.per_bootstrap_losses;
  }
  return j.dump(2) + "\n";
}

ProtocolReport report_from_json(const std::string& text) {
  try {
    json j = json::parse(text);
    ProtocolReport report;
    report.protocol = j.at("protocol").get<std::string>();
    report.metric = MetricSpec::from_name(j.at("metric").get<std::string>());
    report.selection = selection_mode_from_name(j.value("selection", "pooled"));
    report.estimate_loss = j.at("estimate_loss").get<double>();
    if (j.contains("ci_loss")) {
      auto ci = j["ci_loss"];
      if (!ci.is_array() || ci.size() != 2) throw ParseError("report: ci_loss must be [lo, hi]");
      report.ci_loss = {{ci[0].get<double>(), ci[1].get<double>()}};
    }
    if (j.contains("uncorrected_loss")) {
      report.uncorrected_loss = j["uncorrected_loss"].get<double>();
    }
    report.selected_config = j.value("selected_config", -1);
    report.selected_config_id = j.value("selected_config_id", std::string{});
    report.final_model_recipe = j.value("final_model_recipe", std::string{});
    report.models_trained = j.value("models_trained", 0L);
    if (j.contains("warnings")) report.warnings = j["warnings"].get<std::vector<std::string>>();
    if (j.contains("drop_trace")) {
      for (const auto& e : j["drop_trace"]) {
        report.drop_trace.push_back(
            {e.at("fold").get<int>(), e.at("config").get<int>(), e.at("p_hat").get<double>()});
      }
    }
    if (j.contains("per_bootstrap_losses")) {
      report.per_bootstrap_losses = j["per_bootstrap_losses"].get<std::vector<double>>();
    }
    return report;
  } catch (const json::exception& e) {
    throw ParseError(std::string("report: ") + e.what());
  } catch (const Error&) {
    throw;
  }
}

std::string format_report(const ProtocolReport& report) {
  std::ostringstream out;
  out << "protocol: " << report.protocol << " (metric " << report.metric.name() << ", selection "
      << selection_mode_name(report.selection) << ")\n";
  out << "estimated loss: " << fmt17(report.estimate_loss) << '\n';
  if (report.ci_loss) {
    out << "bootstrap CI: [" << fmt17((*report.ci_loss)[0]) << ", " << fmt17((*report.ci_loss)[1])
        << "]\n";
  }
  if (report.uncorrected_loss) {
    out << "uncorrected loss: " << fmt17(*report.uncorrected_loss) << '\n';
  }
  if (!report.selected_config_id.empty()) {
    out << "selected configuration: " << report.selected_config_id << " (index "
        << report.selected_config << ")\n";
  }
  if (!report.final_model_recipe.empty()) {
    out << "final model: " << report.final_model_recipe << '\n';
  }
  out << "models trained: " << report.models_trained << '\n';
  if (!report.drop_trace.empty()) {
    out << "dropped configurations: " << report.drop_trace.size() << '\n';
    for (const auto& e : report.drop_trace) {
      out << "  after fold " << e.fold << ": config " << e.config << " (p-hat " << e.p_hat
          << ")\n";
    }
  }
  if (!report.per_bootstrap_losses.empty()) {
    out << "bootstrap iterations: " << report.per_bootstrap_losses.size() << '\n';
  }
  for (const auto& w : report.warnings) out << "warning: " << w << '\n';
  return out.str();
}

std::string study_to_json(const SimStudyResult& study) {
  json rows = json::array();
  for (const auto& row : study.rows) {
    json stats = json::array();
    for (const auto& s : row.stats) {
      json e = {{"protocol", s.protocol},
                {"mean_bias", s.mean_bias},
                {"se_bias", s.se_bias},
                {"mean_estimate", s.mean_estimate},
                {"mean_models", s.mean_models}};
      if (s.coverage >= 0) e["coverage"] = s.coverage;
      if (s.speedup >= 0) e["speedup"] = s.speedup;
      stats.push_back(std::move(e));
    }
    rows.push_back({{"n", row.setting.n},
                    {"c", row.setting.c},
                    {"beta_a", row.setting.beta_a},
                    {"beta_b", row.setting.beta_b},
                    {"reps", row.setting.reps},
                    {"stats", std::move(stats)}});
  }
  json j = {{"tool", "bbcv"},
            {"version", kVersion},
            {"k_folds", study.k_folds},
            {"b", study.params.b},
            {"alpha", study.params.alpha},
            {"alpha_drop", study.params.alpha_drop},
            {"min_oos", study.params.min_oos},
            {"settings", std::move(rows)}};
  return j.dump(2) + "\n";
}

namespace {

MetricSpec metric_from_cli(const std::string& name) {
  try {
    return MetricSpec::from_name(name);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

SelectionMode selection_from_cli(const std::string& name) {
  try {
    return selection_mode_from_name(name);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

void check_bootstrap_opts(int b, double alpha) {
  if (b < 100) throw UsageError("--b must be at least 100");
  if (!(alpha > 0.0 && alpha < 1.0)) throw UsageError("--alpha must be in (0,1)");
}

struct CorrectOpts {
  std::string matrix, metric = "zero-one", method = "bbc", selection = "pooled", out_path;
  int b = 1000, min_oos = 50;
  double alpha = 0.05, alpha_drop = 0.99;
  uint64_t seed = 1;
  bool skip_degenerate = false;
};

int cmd_correct(const CorrectOpts& o, std::ostream& out) {
  MetricSpec metric = metric_from_cli(o.metric);
  SelectionMode mode = selection_from_cli(o.selection);
  if (o.method != "bbc" && o.method != "tt" && o.method != "bced") {
    throw UsageError("unknown method '" + o.method + "' (expected bbc, tt or bced)");
  }
  if (o.method != "tt") check_bootstrap_opts(o.b, o.alpha);
  if (!(o.alpha_drop > 0.5 && o.alpha_drop <= 1.0)) {
    throw UsageError("--alpha-drop must be in (0.5, 1]");
  }
  if (o.min_oos < 1) throw UsageError("--min-oos must be at least 1");

  PredictionStore store = load_prediction_matrix(o.matrix);
  SeedPlan seed{o.seed};
  ProtocolReport report;
  report.metric = metric;
  report.selection = mode;

  if (o.method == "bbc") {
    BbcResult res = bbc(store, metric, o.b, o.alpha, seed);
    report.protocol = "bbc";
    report.estimate_loss = res.estimate_loss;
    report.ci_loss = res.ci_loss;
    report.per_bootstrap_losses = std::move(res.per_bootstrap);
    report.selected_config = css_all(store, {}, metric, mode).best_index;
  } else if (o.method == "tt") {
    TtResult res = tt_correct(store, metric, mode, o.skip_degenerate);
    report.protocol = "tt";
    report.estimate_loss = res.l_tt;
    report.uncorrected_loss = res.l_cvt;
    report.selected_config = res.winner;
    for (int k : res.skipped_folds) {
      report.warnings.push_back("fold " + std::to_string(k + 1) +
                                " skipped: metric degenerate there");
    }
  } else {
    BcedParams params{o.b, o.alpha, o.alpha_drop, o.min_oos};
    BcedStoreResult res = bced_on_store(store, metric, params, seed, mode);
    report.protocol = "bced";
    report.estimate_loss = res.bbc.estimate_loss;
    report.ci_loss = res.bbc.ci_loss;
    report.per_bootstrap_losses = std::move(res.bbc.per_bootstrap);
    report.drop_trace = res.drop_trace;
    report.selected_config = res.selected_config;
  }
  report.selected_config_id = store.config_ids[report.selected_config];
  report.final_model_recipe = "train " + report.selected_config_id + " on all data";
  report.models_trained = 0;

  std::string js = report_to_json(report);
  out << js;
  if (!o.out_path.empty()) write_text_file(o.out_path, js);
  return 0;
}

struct RunOpts {
  std::string data, grid, metric = "zero-one", method = "cvt", label_col = "label",
              selection = "pooled", dump_path, out_path;
  int k = 5, repeats = 1, b = 1000, min_oos = 50;
  double alpha = 0.05, alpha_drop = 0.99;
  uint64_t seed = 1;
};

int cmd_run(const RunOpts& o, std::ostream& out) {
  MetricSpec metric = metric_from_cli(o.metric);
  if (metric.kind != MetricKind::zero_one && metric.kind != MetricKind::auc) {
    throw UsageError("run supports the zero-one and auc metrics");
  }
  SelectionMode mode = selection_from_cli(o.selection);
  if (o.method != "cv" && o.method != "cvt" && o.method != "ncv" && o.method != "bced") {
    throw UsageError("unknown method '" + o.method + "' (expected cv, cvt, ncv or bced)");
  }
  if (o.k < 2) throw UsageError("--k must be at least 2");
  if (o.method == "ncv" && o.k < 3) throw UsageError("ncv needs --k of at least 3");
  if (o.repeats < 1) throw UsageError("--repeats must be at least 1");
  if (o.repeats > 1 && o.method != "cvt") {
    throw UsageError("--repeats above 1 is only supported with cvt");
  }
  check_bootstrap_opts(o.b, o.alpha);
  if (!(o.alpha_drop > 0.5 && o.alpha_drop <= 1.0)) {
    throw UsageError("--alpha-drop must be in (0.5, 1]");
  }
  if (o.min_oos < 1) throw UsageError("--min-oos must be at least 1");

  Dataset data = load_dataset_csv(o.data, o.label_col);
  ConfigGrid grid = expand_grid(load_grid_json(o.grid));
  auto learners = bind_grid(grid);
  SeedPlan seed{o.seed};

  ProtocolReport report;
  PredictionStore store;
  if (o.method == "cv") {
    if (grid.size() != 1) {
      throw UsageError("cv runs exactly one configuration; the grid expands to " +
                       std::to_string(grid.size()));
    }
    FoldPlan plan = make_fold_plan(data.labels, metric, o.k, seed.stream("folds", 0));
    CvResult res = run_cv(learners[0], data, plan, metric, seed);
    report = std::move(res.report);
    store = std::move(res.store);
  } else if (o.method == "cvt") {
    RepeatedCvtResult res = run_cvt_repeats(learners, data, o.k, o.repeats, metric, o.b, o.alpha,
                                            seed, mode);
    report = std::move(res.report);
    store = std::move(res.store);
  } else if (o.method == "ncv") {
    FoldPlan plan = make_fold_plan(data.labels, metric, o.k, seed.stream("folds", 0));
    NcvResult res = run_ncv(learners, data, plan, metric, seed, mode);
    report = std::move(res.report);
    store = std::move(res.outer_store);
  } else {
    FoldPlan plan = make_fold_plan(data.labels, metric, o.k, seed.stream("folds", 0));
    BcedParams params{o.b, o.alpha, o.alpha_drop, o.min_oos};
    BcedResult res = run_bced(learners, data, plan, metric, params, seed, mode);
    report = std::move(res.report);
    store = std::move(res.store);
  }

  if (!o.dump_path.empty()) {
    std::ostringstream buf;
    write_prediction_matrix(buf, store);
    write_text_file(o.dump_path, buf.str());
  }
  std::string js = report_to_json(report);
  out << js;
  if (!o.out_path.empty()) write_text_file(o.out_path, js);
  return 0;
}

struct SimulateOpts {
  std::string preset = "smoke", out_path;
  int n = 0, c = 0, reps = 200, k = 5, b = 1000, min_oos = 1, workers = 0;
  double alpha = 0.05, alpha_drop = 0.99, beta_a = 9.0, beta_b = 6.0;
  uint64_t seed = 1;
};

int cmd_simulate(const SimulateOpts& o, std::ostream& out) {
  if (o.k < 2) throw UsageError("--k must be at least 2");
  if (o.reps < 1) throw UsageError("--reps must be at least 1");
  check_bootstrap_opts(o.b, o.alpha);
  if (!(o.alpha_drop > 0.5 && o.alpha_drop <= 1.0)) {
    throw UsageError("--alpha-drop must be in (0.5, 1]");
  }
  if (o.min_oos < 1) throw UsageError("--min-oos must be at least 1");

  std::vector<SimSetting> settings;
  if (o.n > 0 || o.c > 0) {
    if (o.n < 2 || o.c < 1) {
      throw UsageError("custom settings need both --n (>= 2) and --c (>= 1)");
    }
    settings.push_back({o.n, o.c, o.beta_a, o.beta_b, o.reps});
  } else if (o.preset == "smoke") {
    settings = smoke_settings(o.reps);
  } else {
    throw UsageError("unknown preset '" + o.preset + "' (expected smoke)");
  }

  BcedParams params{o.b, o.alpha, o.alpha_drop, o.min_oos};
  SeedPlan seed{o.seed};
  SimStudyResult study = run_bias_study(settings, o.k, seed, params, o.workers);
  out << format_study(study);
  if (!o.out_path.empty()) write_text_file(o.out_path, study_to_json(study));
  return 0;
}

struct ReportOpts {
  std::string in_path;
  bool as_json = false;
};

int cmd_report(const ReportOpts& o, std::ostream& out) {
  ProtocolReport report = report_from_json(read_text_file(o.in_path));
  out << (o.as_json ? report_to_json(report) : format_report(report));
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"cross-validated hyper-parameter tuning with corrected performance estimates"};
  app.name("bbcv");
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("bbcv ") + kVersion);

  CorrectOpts co;
  auto* correct = app.add_subcommand(
      "correct", "correct the selection bias of a pooled prediction matrix");
  correct->add_option("--matrix", co.matrix, "prediction matrix CSV")->required();
  correct->add_option("--metric", co.metric, "zero-one, squared-error, auc or c-index");
  correct->add_option("--method", co.method, "bbc, tt or bced");
  correct->add_option("--selection", co.selection, "pooled or fold-mean");
  correct->add_option("--b", co.b, "bootstrap iterations");
  correct->add_option("--alpha", co.alpha, "CI miss probability");
  correct->add_option("--alpha-drop", co.alpha_drop, "dropping threshold on p-hat");
  correct->add_option("--min-oos", co.min_oos, "rows required before dropping starts");
  correct->add_option("--seed", co.seed, "master seed");
  correct->add_flag("--skip-degenerate-folds", co.skip_degenerate,
                    "tt: skip folds where the metric is undefined");
  correct->add_option("--out", co.out_path, "also write the report JSON here");

  RunOpts ro;
  auto* run = app.add_subcommand("run", "train a configuration grid under a tuning protocol");
  run->add_option("--data", ro.data, "dataset CSV")->required();
  run->add_option("--grid", ro.grid, "configuration grid JSON")->required();
  run->add_option("--metric", ro.metric, "zero-one or auc");
  run->add_option("--method", ro.method, "cv, cvt, ncv or bced");
  run->add_option("--k", ro.k, "number of folds");
  run->add_option("--repeats", ro.repeats, "fold-plan repeats (cvt only)");
  run->add_option("--b", ro.b, "bootstrap iterations");
  run->add_option("--alpha", ro.alpha, "CI miss probability");
  run->add_option("--alpha-drop", ro.alpha_drop, "dropping threshold on p-hat");
  run->add_option("--min-oos", ro.min_oos, "rows required before dropping starts");
  run->add_option("--seed", ro.seed, "master seed");
  run->add_option("--label-col", ro.label_col, "label column name");
  run->add_option("--selection", ro.selection, "pooled or fold-mean");
  run->add_option("--dump-predictions", ro.dump_path, "write the prediction matrix CSV here");
  run->add_option("--out", ro.out_path, "also write the report JSON here");

  SimulateOpts so;
  auto* simulate = app.add_subcommand("simulate", "synthetic bias study on Bernoulli predictors");
  simulate->add_option("--preset", so.preset, "smoke");
  simulate->add_option("--n", so.n, "samples (custom setting)");
  simulate->add_option("--c", so.c, "configurations (custom setting)");
  simulate->add_option("--beta-a", so.beta_a, "accuracy prior alpha");
  simulate->add_option("--beta-b", so.beta_b, "accuracy prior beta");
  simulate->add_option("--reps", so.reps, "replicates per setting");
  simulate->add_option("--k", so.k, "number of folds");
  simulate->add_option("--b", so.b, "bootstrap iterations");
  simulate->add_option("--alpha", so.alpha, "CI miss probability");
  simulate->add_option("--alpha-drop", so.alpha_drop, "dropping threshold on p-hat");
  simulate->add_option("--min-oos", so.min_oos, "rows required before dropping starts");
  simulate->add_option("--seed", so.seed, "master seed");
  simulate->add_option("--workers", so.workers, "worker threads (0 = auto)");
  simulate->add_option("--out", so.out_path, "write the study JSON here");

  ReportOpts po;
  auto* rep = app.add_subcommand("report", "pretty-print a saved report");
  rep->add_option("--in", po.in_path, "report JSON file")->required();
  rep->add_flag("--json", po.as_json, "re-emit normalized JSON");

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("bbcv");
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*correct) return cmd_correct(co, out);
    if (*run) return cmd_run(ro, out);
    if (*simulate) return cmd_simulate(so, out);
    if (*rep) return cmd_report(po, out);
    err << "error: no subcommand\n";
    return 2;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace bbcv
