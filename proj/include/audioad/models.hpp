#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "audioad/features.hpp"
#include "audioad/rng.hpp"

namespace audioad {

// Feature names and class names a model was trained on.
struct ModelSchema {
  std::vector<std::string> feature_names;
  std::vector<std::string> class_names;

  bool operator==(const ModelSchema&) const = default;
};

struct TreeParams {
  std::size_t max_depth = 0;  // 0 = unlimited
  std::size_t min_samples_leaf = 1;
};

// A split node has feature >= 0 and routes x[feature] <= threshold left.
// A leaf has feature == -1 and a class-probability vector.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::size_t samples = 0;
  double impurity_decrease = 0.0;  // samples-weighted Gini decrease at this split
  std::vector<double> proba;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;
  TreeParams params;
  ModelSchema schema;

  std::vector<double> predict_proba(std::span<const double> x) const;
};

struct RandomForest {
  std::vector<DecisionTree> trees;
  std::size_t mtry = 0;
  std::uint64_t seed = 0;
  std::vector<double> importances;
  ModelSchema schema;

  std::vector<double> predict_proba(std::span<const double> x) const;
  bool has_splits() const;
};

struct LinearSvm {
  std::vector<double> weights;
  double bias = 0.0;
  std::vector<double> scaler_mean;
  std::vector<double> scaler_std;
  double lambda = 0.01;
  std::size_t epochs = 0;
  std::uint64_t seed = 0;
  ModelSchema schema;

  // Signed margin on standardized features; positive favours class 1.
  double decision_value(std::span<const double> x) const;
  std::vector<double> predict_proba(std::span<const double> x) const;
};

using BaseModel = std::variant<DecisionTree, RandomForest, LinearSvm>;

struct EnsembleMember {
  BaseModel model;
  double weight = 1.0;
};

struct EnsembleModel {
  std::vector<EnsembleMember> members;  // weights normalized to sum 1
  ModelSchema schema;

  std::vector<double> predict_proba(std::span<const double> x) const;
};

using AnyModel = std::variant<DecisionTree, RandomForest, LinearSvm, EnsembleModel>;

// Dense training view of a labeled FeatureSet.
struct Dataset {
  std::vector<double> x;  // row-major, rows() x cols()
  std::vector<int> y;
  std::size_t n_features = 0;
  ModelSchema schema;

  static Dataset from(const FeatureSet& set);
  std::size_t rows() const noexcept { return y.size(); }
  std::size_t n_classes() const noexcept { return schema.class_names.size(); }
  std::span<const double> row(std::size_t i) const { return {x.data() + i * n_features, n_features}; }
};

DecisionTree train_tree(const FeatureSet& data, const TreeParams& params, Rng& rng,
                        std::optional<std::size_t> mtry = std::nullopt);

// Grows a tree on the given (possibly repeated) row indices. Adds each
// split's weighted impurity decrease to `importance` when non-null.
DecisionTree train_tree_on(const Dataset& data, std::span<const std::size_t> rows, const TreeParams& params,
                           Rng& rng, std::optional<std::size_t> mtry, std::vector<double>* importance);

struct ForestParams {
  std::size_t n_trees = 100;
  std::size_t mtry = 0;  // 0 = round(sqrt(n_features))
  TreeParams tree;
  bool bootstrap = true;
  std::size_t threads = 1;  // 0 = hardware concurrency; never changes the result
};

std::size_t default_mtry(std::size_t n_features);

RandomForest train_forest(const FeatureSet& data, const ForestParams& params, std::uint64_t seed);

struct SvmParams {
  double lambda = 0.01;
  std::size_t epochs = 50;
};

// Linear SVM trained by stochastic subgradient descent on
// lambda/2 * |w|^2 + mean hinge, step 1/(lambda * t). The bias is an extra
// weight on a constant-1 input and is regularized with the rest.
LinearSvm train_svm(const FeatureSet& data, const SvmParams& params, std::uint64_t seed);

// lambda/2 * (|w|^2 + b^2) + mean hinge loss over the set.
double svm_objective(const LinearSvm& model, const Dataset& data);

EnsembleModel make_ensemble(std::vector<EnsembleMember> members);

ModelSchema schema_of(const AnyModel& model);

std::vector<double> predict_proba(const AnyModel& model, std::span<const double> x);

// Checks the vector's names against the model schema first.
std::vector<double> predict_proba(const AnyModel& model, const FeatureVector& x);

// Index of the largest probability; ties go to the lowest class index.
int argmax_class(std::span<const double> proba);

struct Vote {
  int label = 0;
  std::vector<double> proba;
};

Vote soft_vote(const EnsembleModel& ensemble, const FeatureVector& x);
Vote soft_vote(const EnsembleModel& ensemble, std::span<const double> x);

int predict(const AnyModel& model, std::span<const double> x);

struct FeatureImportance {
  std::vector<std::pair<std::string, double>> ranking;  // descending
  bool no_splits = false;
};

// Descending by importance; equal importances keep schema order.
FeatureImportance feature_importance(const RandomForest& forest);

// Self-describing JSON document; `config_echo` entries are stored under
// "config". Field names are listed in docs/model_format.md.
std::string serialize_model(const AnyModel& model, const std::map<std::string, std::string>& config_echo = {});
AnyModel deserialize_model(const std::string& text);

void save_model(const AnyModel& model, const std::string& path,
                const std::map<std::string, std::string>& config_echo = {});
AnyModel load_model(const std::string& path);

}  // namespace audioad
