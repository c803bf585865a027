#include "audioad/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <json.hpp>

#include "audioad/error.hpp"
#include "audioad/parallel.hpp"
#include "audioad/rng.hpp"
#include "audioad/text.hpp"

namespace audioad {
namespace {

constexpr int kReportVersion = 1;

std::vector<std::vector<std::size_t>> indices_by_class(std::span<const int> labels, std::size_t num_classes) {
  std::vector<std::vector<std::size_t>> by_class(num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes) {
      throw Error(ErrorCode::kLabelOutOfRange, "label " + std::to_string(labels[i]));
    }
    by_class[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  return by_class;
}

}  // namespace

std::size_t ConfusionMatrix::total() const { return std::accumulate(counts.begin(), counts.end(), std::size_t{0}); }

ConfusionMatrix confusion_matrix(std::span<const int> y_true, std::span<const int> y_pred, std::size_t num_classes) {
  if (y_true.size() != y_pred.size()) {
    throw Error(ErrorCode::kLengthMismatch, std::to_string(y_true.size()) + " labels vs " +
                                                std::to_string(y_pred.size()) + " predictions");
  }
  ConfusionMatrix cm;
  cm.num_classes = num_classes;
  cm.counts.assign(num_classes * num_classes, 0);
  for (std::size_t n = 0; n < y_true.size(); ++n) {
    const int t = y_true[n];
    const int p = y_pred[n];
    if (t < 0 || p < 0 || static_cast<std::size_t>(t) >= num_classes || static_cast<std::size_t>(p) >= num_classes) {
      throw Error(ErrorCode::kLabelOutOfRange, "pair " + std::to_string(t) + "," + std::to_string(p) + " at " +
                                                   std::to_string(n));
    }
    ++cm.counts[static_cast<std::size_t>(t) * num_classes + static_cast<std::size_t>(p)];
  }
  return cm;
}

Metrics compute_metrics(const ConfusionMatrix& cm) {
  const std::size_t total = cm.total();
  if (total == 0) throw Error(ErrorCode::kEmptyMatrix, "confusion matrix has no instances");
  const std::size_t k = cm.num_classes;
  Metrics m;
  std::size_t trace = 0;
  m.per_class.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    trace += cm.at(c, c);
    std::size_t column = 0;
    std::size_t row = 0;
    for (std::size_t i = 0; i < k; ++i) {
      column += cm.at(i, c);
      row += cm.at(c, i);
    }
    auto& pc = m.per_class[c];
    pc.precision_degenerate = column == 0;
    pc.recall_degenerate = row == 0;
    pc.precision = column == 0 ? 0.0 : static_cast<double>(cm.at(c, c)) / static_cast<double>(column);
    pc.recall = row == 0 ? 0.0 : static_cast<double>(cm.at(c, c)) / static_cast<double>(row);
    m.macro_precision += pc.precision;
    m.macro_recall += pc.recall;
  }
  m.accuracy = static_cast<double>(trace) / static_cast<double>(total);
  m.macro_precision /= static_cast<double>(k);
  m.macro_recall /= static_cast<double>(k);
  return m;
}

FeatureSet subset(const FeatureSet& data, std::span<const std::size_t> indices) {
  FeatureSet out;
  out.names = data.names;
  out.class_names = data.class_names;
  out.vectors.reserve(indices.size());
  for (std::size_t i : indices) out.vectors.push_back(data.vectors.at(i));
  return out;
}

TrainTestSplit stratified_split(const FeatureSet& data, double test_frac, std::uint64_t seed) {
  if (!(test_frac > 0.0 && test_frac < 1.0)) throw Error(ErrorCode::kInvalidArgument, "test_frac must be in (0, 1)");
  const std::vector<int> labels = data.labels();
  auto by_class = indices_by_class(labels, data.class_names.size());
  Rng rng(seed);
  std::vector<bool> is_test(labels.size(), false);
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& idx = by_class[c];
    if (idx.size() < 2) {
      throw Error(ErrorCode::kClassTooSmall, "class '" + data.class_names[c] + "' has " +
                                                 std::to_string(idx.size()) + " instances, need >= 2");
    }
    rng.shuffle(idx);
    const auto n_test = static_cast<std::size_t>(std::llround(test_frac * static_cast<double>(idx.size())));
    for (std::size_t i = 0; i < n_test; ++i) is_test[idx[i]] = true;
  }
  std::vector<std::size_t> train_idx;
  std::vector<std::size_t> test_idx;
  for (std::size_t i = 0; i < labels.size(); ++i) (is_test[i] ? test_idx : train_idx).push_back(i);
  return {subset(data, train_idx), subset(data, test_idx)};
}

std::vector<std::vector<std::size_t>> stratified_folds(std::span<const int> labels, std::size_t num_classes,
                                                       std::size_t k, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorCode::kInvalidArgument, "need k >= 2 folds");
  auto by_class = indices_by_class(labels, num_classes);
  Rng rng(seed);
  std::vector<std::vector<std::size_t>> folds(k);
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& idx = by_class[c];
    if (idx.size() < k) {
      throw Error(ErrorCode::kClassTooSmall, "class " + std::to_string(c) + " has " + std::to_string(idx.size()) +
                                                 " instances for " + std::to_string(k) + " folds");
    }
    rng.shuffle(idx);
    for (std::size_t i = 0; i < idx.size(); ++i) folds[i % k].push_back(idx[i]);
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

CrossValidationResult cross_validate(const FeatureSet& data, std::size_t k, const Recipe& recipe,
                                     std::uint64_t seed, std::size_t threads) {
  const std::vector<int> labels = data.labels();
  const auto folds = stratified_folds(labels, data.class_names.size(), k, seed);
  CrossValidationResult result;
  result.folds.resize(k);
  parallel_for(k, threads, [&](std::size_t f) {
    std::vector<bool> in_test(labels.size(), false);
    for (std::size_t i : folds[f]) in_test[i] = true;
    std::vector<std::size_t> train_idx;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (!in_test[i]) train_idx.push_back(i);
    }
    const FeatureSet test = subset(data, folds[f]);
    const std::vector<int> predicted = recipe(subset(data, train_idx), test);
    FoldResult& fr = result.folds[f];
    fr.test_indices = folds[f];
    fr.confusion = confusion_matrix(test.labels(), predicted, data.class_names.size());
    fr.confusion.class_names = data.class_names;
    fr.metrics = compute_metrics(fr.confusion);
  });
  for (const auto& f : result.folds) result.mean_accuracy += f.metrics.accuracy;
  result.mean_accuracy /= static_cast<double>(k);
  double var = 0.0;
  for (const auto& f : result.folds) {
    var += (f.metrics.accuracy - result.mean_accuracy) * (f.metrics.accuracy - result.mean_accuracy);
  }
  result.std_accuracy = std::sqrt(var / static_cast<double>(k));
  return result;
}

EvaluationReport make_report(std::string model_kind, const ConfusionMatrix& cm, std::uint64_t seed,
                             std::map<std::string, std::string> config) {
  EvaluationReport r;
  r.model_kind = std::move(model_kind);
  r.confusion = cm;
  r.metrics = compute_metrics(cm);
  r.seed = seed;
  r.config = std::move(config);
  return r;
}

namespace {

std::string quote(const std::string& s) { return nlohmann::json(s).dump(); }
std::string fixed4(double v) { return format_fixed(v, 4); }
const char* boolean(bool b) { return b ? "true" : "false"; }

}  // namespace

std::string render_report(const EvaluationReport& r) {
  const auto& cm = r.confusion;
  std::string out = "{\n";
  out += "  \"format\": \"audioad-report\",\n";
  out += "  \"format_version\": " + std::to_string(kReportVersion) + ",\n";
  out += "  \"model_kind\": " + quote(r.model_kind) + ",\n";
  out += "  \"seed\": " + std::to_string(r.seed) + ",\n";
  out += "  \"class_names\": [";
  for (std::size_t c = 0; c < cm.class_names.size(); ++c) out += (c ? ", " : "") + quote(cm.class_names[c]);
  out += "],\n";
  out += "  \"confusion_matrix\": [";
  for (std::size_t t = 0; t < cm.num_classes; ++t) {
    out += t ? ", [" : "[";
    for (std::size_t p = 0; p < cm.num_classes; ++p) out += (p ? ", " : "") + std::to_string(cm.at(t, p));
    out += "]";
  }
  out += "],\n";
  out += "  \"instances\": " + std::to_string(cm.total()) + ",\n";
  out += "  \"accuracy\": " + fixed4(r.metrics.accuracy) + ",\n";
  out += "  \"macro_precision\": " + fixed4(r.metrics.macro_precision) + ",\n";
  out += "  \"macro_recall\": " + fixed4(r.metrics.macro_recall) + ",\n";
  out += "  \"per_class\": [";
  for (std::size_t c = 0; c < r.metrics.per_class.size(); ++c) {
    const auto& pc = r.metrics.per_class[c];
    const std::string name = c < cm.class_names.size() ? cm.class_names[c] : std::to_string(c);
    out += c ? ",\n    " : "\n    ";
    out += "{\"class\": " + quote(name) + ", \"precision\": " + fixed4(pc.precision) +
           ", \"recall\": " + fixed4(pc.recall) + ", \"precision_degenerate\": " + boolean(pc.precision_degenerate) +
           ", \"recall_degenerate\": " + boolean(pc.recall_degenerate) + "}";
  }
  out += r.metrics.per_class.empty() ? "],\n" : "\n  ],\n";
  out += "  \"comparison\": [";
  for (std::size_t i = 0; i < r.comparison.size(); ++i) {
    const auto& row = r.comparison[i];
    out += i ? ",\n    " : "\n    ";
    out += "{\"model\": " + quote(row.model) + ", \"accuracy\": " + fixed4(row.accuracy) +
           ", \"macro_precision\": " + fixed4(row.macro_precision) + ", \"macro_recall\": " +
           fixed4(row.macro_recall) + "}";
  }
  out += r.comparison.empty() ? "],\n" : "\n  ],\n";
  if (r.importance_top10) {
    out += "  \"importance_top10\": [";
    for (std::size_t i = 0; i < r.importance_top10->size(); ++i) {
      const auto& [name, value] = (*r.importance_top10)[i];
      out += i ? ",\n    " : "\n    ";
      out += "{\"feature\": " + quote(name) + ", \"importance\": " + fixed4(value) + "}";
    }
    out += r.importance_top10->empty() ? "],\n" : "\n  ],\n";
  } else {
    out += "  \"importance_top10\": null,\n";
  }
  out += "  \"importance_no_splits\": " + std::string(boolean(r.importance_no_splits)) + ",\n";
  out += "  \"config\": {";
  std::size_t i = 0;
  for (const auto& [key, value] : r.config) {
    out += i++ ? ",\n    " : "\n    ";
    out += quote(key) + ": " + quote(value);
  }
  out += r.config.empty() ? "}\n" : "\n  }\n";
  out += "}\n";
  return out;
}

EvaluationReport parse_report(const std::string& text) {
  using nlohmann::json;
  try {
    const json j = json::parse(text);
    if (j.at("format").get<std::string>() != "audioad-report" || j.at("format_version").get<int>() != kReportVersion) {
      throw Error(ErrorCode::kInvalidArgument, "not a version-1 audioad report");
    }
    EvaluationReport r;
    r.model_kind = j.at("model_kind").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.confusion.class_names = j.at("class_names").get<std::vector<std::string>>();
    const auto rows = j.at("confusion_matrix").get<std::vector<std::vector<std::size_t>>>();
    r.confusion.num_classes = rows.size();
    for (const auto& row : rows) {
      if (row.size() != rows.size()) throw Error(ErrorCode::kInvalidArgument, "confusion matrix is not square");
      r.confusion.counts.insert(r.confusion.counts.end(), row.begin(), row.end());
    }
    r.metrics.accuracy = j.at("accuracy").get<double>();
    r.metrics.macro_precision = j.at("macro_precision").get<double>();
    r.metrics.macro_recall = j.at("macro_recall").get<double>();
    for (const auto& pc : j.at("per_class")) {
      r.metrics.per_class.push_back({pc.at("precision").get<double>(), pc.at("recall").get<double>(),
                                     pc.at("precision_degenerate").get<bool>(), pc.at("recall_degenerate").get<bool>()});
    }
    for (const auto& row : j.at("comparison")) {
      r.comparison.push_back({row.at("model").get<std::string>(), row.at("accuracy").get<double>(),
                              row.at("macro_precision").get<double>(), row.at("macro_recall").get<double>()});
    }
    if (!j.at("importance_top10").is_null()) {
      r.importance_top10.emplace();
      for (const auto& e : j.at("importance_top10")) {
        r.importance_top10->emplace_back(e.at("feature").get<std::string>(), e.at("importance").get<double>());
      }
    }
    r.importance_no_splits = j.at("importance_no_splits").get<bool>();
    r.config = j.at("config").get<std::map<std::string, std::string>>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("malformed report: ") + e.what());
  }
}

void emit_report(const EvaluationReport& report, const std::string& path) {
  write_text_file(path, render_report(report));
}

std::string confusion_to_csv(const ConfusionMatrix& cm) {
  std::string out = "true\\pred";
  for (std::size_t c = 0; c < cm.num_classes; ++c) {
    out += "," + (c < cm.class_names.size() ? cm.class_names[c] : std::to_string(c));
  }
  out += "\n";
  for (std::size_t t = 0; t < cm.num_classes; ++t) {
    out += t < cm.class_names.size() ? cm.class_names[t] : std::to_string(t);
    for (std::size_t p = 0; p < cm.num_classes; ++p) out += "," + std::to_string(cm.at(t, p));
    out += "\n";
  }
  return out;
}

}  // namespace audioad
