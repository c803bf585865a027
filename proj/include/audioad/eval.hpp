#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "audioad/features.hpp"

namespace audioad {

// counts[t * K + p]: instances of true class t predicted as p.
struct ConfusionMatrix {
  std::vector<std::size_t> counts;
  std::size_t num_classes = 0;
  std::vector<std::string> class_names;

  std::size_t at(std::size_t t, std::size_t p) const { return counts[t * num_classes + p]; }
  std::size_t total() const;
  bool operator==(const ConfusionMatrix&) const = default;
};

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  bool precision_degenerate = false;  // predicted column empty
  bool recall_degenerate = false;     // true row empty
};

struct Metrics {
  double accuracy = 0.0;
  std::vector<ClassMetrics> per_class;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
};

ConfusionMatrix confusion_matrix(std::span<const int> y_true, std::span<const int> y_pred, std::size_t num_classes);

Metrics compute_metrics(const ConfusionMatrix& cm);

struct TrainTestSplit {
  FeatureSet train;
  FeatureSet test;
};

// Per class, round(test_frac * n_c) instances go to test via a seeded
// shuffle. Both halves keep the original instance order.
TrainTestSplit stratified_split(const FeatureSet& data, double test_frac, std::uint64_t seed);

// Stratified k-fold partition; fold f holds the test indices of round f.
std::vector<std::vector<std::size_t>> stratified_folds(std::span<const int> labels, std::size_t num_classes,
                                                       std::size_t k, std::uint64_t seed);

// Trains on `train` and returns one predicted label per row of `test`.
using Recipe = std::function<std::vector<int>(const FeatureSet& train, const FeatureSet& test)>;

struct FoldResult {
  std::vector<std::size_t> test_indices;
  ConfusionMatrix confusion;
  Metrics metrics;
};

struct CrossValidationResult {
  std::vector<FoldResult> folds;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;  // population std over folds
};

CrossValidationResult cross_validate(const FeatureSet& data, std::size_t k, const Recipe& recipe,
                                     std::uint64_t seed, std::size_t threads = 1);

FeatureSet subset(const FeatureSet& data, std::span<const std::size_t> indices);

struct ComparisonRow {
  std::string model;
  double accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
};

struct EvaluationReport {
  std::string model_kind;
  ConfusionMatrix confusion;
  Metrics metrics;
  std::optional<std::vector<std::pair<std::string, double>>> importance_top10;
  bool importance_no_splits = false;
  std::vector<ComparisonRow> comparison;
  std::map<std::string, std::string> config;
  std::uint64_t seed = 0;
};

EvaluationReport make_report(std::string model_kind, const ConfusionMatrix& cm, std::uint64_t seed,
                             std::map<std::string, std::string> config);

// JSON with a fixed key order; metrics and importances printed with four
// decimals. See docs/report_format.md.
std::string render_report(const EvaluationReport& report);
EvaluationReport parse_report(const std::string& text);
void emit_report(const EvaluationReport& report, const std::string& path);

// Confusion matrix as CSV: header "true\\pred,<classes>", one row per class.
std::string confusion_to_csv(const ConfusionMatrix& cm);

}  // namespace audioad
