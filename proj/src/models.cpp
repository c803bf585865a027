#include "audioad/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <json.hpp>

#include "audioad/error.hpp"
#include "audioad/parallel.hpp"
#include "audioad/text.hpp"

namespace audioad {
namespace {

constexpr double kMinGain = 1e-12;
constexpr int kFormatVersion = 1;

double gini(std::span<const std::size_t> counts, std::size_t total) {
  if (total == 0) return 0.0;
  double sum_sq = 0.0;
  for (std::size_t c : counts) {
    const double p = static_cast<double>(c) / static_cast<double>(total);
    sum_sq += p * p;
  }
  return 1.0 - sum_sq;
}

void check_features(const ModelSchema& schema, std::span<const double> x) {
  if (x.size() != schema.feature_names.size()) {
    throw Error(ErrorCode::kSchemaMismatch, "expected " + std::to_string(schema.feature_names.size()) +
                                                " features, got " + std::to_string(x.size()));
  }
}

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const Dataset& data, const TreeParams& params, Rng& rng, std::optional<std::size_t> mtry,
              std::vector<double>* importance)
      : data_(data), params_(params), rng_(rng), mtry_(mtry), importance_(importance) {}

  DecisionTree build(std::vector<std::size_t> rows) {
    DecisionTree tree;
    tree.params = params_;
    tree.schema = data_.schema;
    grow(tree, std::move(rows), 0);
    return tree;
  }

 private:
  std::vector<std::size_t> class_counts(const std::vector<std::size_t>& rows) const {
    std::vector<std::size_t> counts(data_.n_classes(), 0);
    for (std::size_t r : rows) ++counts[static_cast<std::size_t>(data_.y[r])];
    return counts;
  }

  std::vector<std::size_t> candidate_features() {
    std::vector<std::size_t> all(data_.n_features);
    std::iota(all.begin(), all.end(), 0);
    if (!mtry_ || *mtry_ >= data_.n_features) return all;
    // Partial Fisher-Yates: the first mtry slots are a uniform sample.
    for (std::size_t i = 0; i < *mtry_; ++i) {
      std::swap(all[i], all[i + rng_.index(all.size() - i)]);
    }
    all.resize(*mtry_);
    std::sort(all.begin(), all.end());
    return all;
  }

  Split best_split(const std::vector<std::size_t>& rows, const std::vector<std::size_t>& counts) {
    const std::size_t n = rows.size();
    const double parent = gini(counts, n);
    Split best;
    std::vector<std::pair<double, int>> column(n);
    std::vector<std::size_t> left(counts.size());
    std::vector<std::size_t> right(counts.size());
    for (std::size_t f : candidate_features()) {
      for (std::size_t i = 0; i < n; ++i) {
        column[i] = {data_.x[rows[i] * data_.n_features + f], data_.y[rows[i]]};
      }
      std::sort(column.begin(), column.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      std::fill(left.begin(), left.end(), 0);
      right = counts;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        const auto cls = static_cast<std::size_t>(column[i].second);
        ++left[cls];
        --right[cls];
        if (!(column[i].first < column[i + 1].first)) continue;
        const std::size_t nl = i + 1;
        const std::size_t nr = n - nl;
        if (nl < params_.min_samples_leaf || nr < params_.min_samples_leaf) continue;
        const double child = (static_cast<double>(nl) * gini(left, nl) + static_cast<double>(nr) * gini(right, nr)) /
                             static_cast<double>(n);
        const double gain = parent - child;
        if (gain > kMinGain && gain > best.gain) {
          const double a = column[i].first;
          const double b = column[i + 1].first;
          double mid = a + (b - a) / 2.0;
          if (!(mid < b)) mid = a;
          best = {static_cast<int>(f), mid, gain};
        }
      }
    }
    return best;
  }

  int grow(DecisionTree& tree, std::vector<std::size_t> rows, std::size_t depth) {
    const auto counts = class_counts(rows);
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes[id].samples = rows.size();

    const bool pure = std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; }) <= 1;
    const bool depth_reached = params_.max_depth != 0 && depth >= params_.max_depth;
    const bool too_small = rows.size() < 2 * params_.min_samples_leaf;
    Split split;
    if (!pure && !depth_reached && !too_small) split = best_split(rows, counts);

    if (split.feature < 0) {
      auto& proba = tree.nodes[id].proba;
      proba.resize(counts.size());
      for (std::size_t c = 0; c < counts.size(); ++c) {
        proba[c] = static_cast<double>(counts[c]) / static_cast<double>(rows.size());
      }
      return id;
    }

    std::vector<std::size_t> left_rows;
    std::vector<std::size_t> right_rows;
    for (std::size_t r : rows) {
      (data_.x[r * data_.n_features + static_cast<std::size_t>(split.feature)] <= split.threshold ? left_rows
                                                                                                 : right_rows)
          .push_back(r);
    }
    const double decrease = static_cast<double>(rows.size()) * split.gain;
    tree.nodes[id].feature = split.feature;
    tree.nodes[id].threshold = split.threshold;
    tree.nodes[id].impurity_decrease = decrease;
    if (importance_ != nullptr) (*importance_)[static_cast<std::size_t>(split.feature)] += decrease;
    rows.clear();
    rows.shrink_to_fit();
    const int l = grow(tree, std::move(left_rows), depth + 1);
    const int r = grow(tree, std::move(right_rows), depth + 1);
    tree.nodes[id].left = l;
    tree.nodes[id].right = r;
    return id;
  }

  const Dataset& data_;
  const TreeParams& params_;
  Rng& rng_;
  std::optional<std::size_t> mtry_;
  std::vector<double>* importance_;
};

}  // namespace

Dataset Dataset::from(const FeatureSet& set) {
  set.check_schema();
  Dataset d;
  d.n_features = set.num_features();
  d.schema = {set.names, set.class_names};
  d.x.reserve(set.size() * d.n_features);
  for (const auto& v : set.vectors) {
    if (!v.label) throw Error(ErrorCode::kInvalidArgument, "clip " + v.clip_id + " is unlabeled");
    d.x.insert(d.x.end(), v.values.begin(), v.values.end());
    d.y.push_back(*v.label);
  }
  return d;
}

std::vector<double> DecisionTree::predict_proba(std::span<const double> x) const {
  check_features(schema, x);
  std::size_t id = 0;
  while (nodes.at(id).feature >= 0) {
    const auto& node = nodes[id];
    id = static_cast<std::size_t>(x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left
                                                                                               : node.right);
  }
  return nodes[id].proba;
}

std::vector<double> RandomForest::predict_proba(std::span<const double> x) const {
  check_features(schema, x);
  std::vector<double> acc(schema.class_names.size(), 0.0);
  for (const auto& t : trees) {
    const auto p = t.predict_proba(x);
    for (std::size_t c = 0; c < acc.size(); ++c) acc[c] += p[c];
  }
  for (double& v : acc) v /= static_cast<double>(trees.size());
  return acc;
}

bool RandomForest::has_splits() const {
  return std::any_of(trees.begin(), trees.end(), [](const DecisionTree& t) { return t.nodes.size() > 1; });
}

double LinearSvm::decision_value(std::span<const double> x) const {
  check_features(schema, x);
  double d = bias;
  for (std::size_t j = 0; j < weights.size(); ++j) d += weights[j] * (x[j] - scaler_mean[j]) / scaler_std[j];
  return d;
}

std::vector<double> LinearSvm::predict_proba(std::span<const double> x) const {
  const double p1 = 1.0 / (1.0 + std::exp(-decision_value(x)));
  return {1.0 - p1, p1};
}

std::vector<double> EnsembleModel::predict_proba(std::span<const double> x) const {
  std::vector<double> acc(schema.class_names.size(), 0.0);
  for (const auto& m : members) {
    const auto p = std::visit([&](const auto& model) { return model.predict_proba(x); }, m.model);
    for (std::size_t c = 0; c < acc.size(); ++c) acc[c] += m.weight * p[c];
  }
  return acc;
}

DecisionTree train_tree_on(const Dataset& data, std::span<const std::size_t> rows, const TreeParams& params,
                           Rng& rng, std::optional<std::size_t> mtry, std::vector<double>* importance) {
  if (rows.empty()) throw Error(ErrorCode::kEmptyDataset, "no training instances");
  if (params.min_samples_leaf < 1) throw Error(ErrorCode::kInvalidArgument, "min_samples_leaf must be >= 1");
  if (mtry && (*mtry < 1 || *mtry > data.n_features)) {
    throw Error(ErrorCode::kInvalidArgument, "mtry must be in [1, n_features]");
  }
  for (std::size_t r : rows) {
    if (data.y[r] < 0 || static_cast<std::size_t>(data.y[r]) >= data.n_classes()) {
      throw Error(ErrorCode::kLabelOutOfRange, "label " + std::to_string(data.y[r]));
    }
  }
  TreeBuilder builder(data, params, rng, mtry, importance);
  return builder.build({rows.begin(), rows.end()});
}

DecisionTree train_tree(const FeatureSet& data, const TreeParams& params, Rng& rng, std::optional<std::size_t> mtry) {
  if (data.size() == 0) throw Error(ErrorCode::kEmptyDataset, "no training instances");
  const Dataset d = Dataset::from(data);
  std::vector<std::size_t> rows(d.rows());
  std::iota(rows.begin(), rows.end(), 0);
  return train_tree_on(d, rows, params, rng, mtry, nullptr);
}

std::size_t default_mtry(std::size_t n_features) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n_features)))));
}

RandomForest train_forest(const FeatureSet& data, const ForestParams& params, std::uint64_t seed) {
  if (data.size() == 0) throw Error(ErrorCode::kEmptyDataset, "no training instances");
  if (params.n_trees < 1) throw Error(ErrorCode::kInvalidArgument, "n_trees must be >= 1");
  const Dataset d = Dataset::from(data);
  const std::size_t mtry = params.mtry == 0 ? default_mtry(d.n_features) : params.mtry;
  if (mtry > d.n_features) throw Error(ErrorCode::kInvalidArgument, "mtry exceeds feature count");

  RandomForest forest;
  forest.mtry = mtry;
  forest.seed = seed;
  forest.schema = d.schema;
  forest.trees.resize(params.n_trees);
  std::vector<std::vector<double>> per_tree(params.n_trees, std::vector<double>(d.n_features, 0.0));

  parallel_for(params.n_trees, params.threads, [&](std::size_t t) {
    Rng rng = Rng::stream(seed, t);
    std::vector<std::size_t> rows(d.rows());
    if (params.bootstrap) {
      for (auto& r : rows) r = rng.index(d.rows());
    } else {
      std::iota(rows.begin(), rows.end(), 0);
    }
    forest.trees[t] = train_tree_on(d, rows, params.tree, rng, mtry, &per_tree[t]);
  });

  // Summed in tree order so the result is independent of thread count.
  forest.importances.assign(d.n_features, 0.0);
  for (const auto& imp : per_tree) {
    for (std::size_t f = 0; f < d.n_features; ++f) forest.importances[f] += imp[f];
  }
  const double total = std::accumulate(forest.importances.begin(), forest.importances.end(), 0.0);
  if (total > 0.0) {
    for (double& v : forest.importances) v /= total;
  }
  return forest;
}

double svm_objective(const LinearSvm& model, const Dataset& data) {
  double reg = model.bias * model.bias;
  for (double w : model.weights) reg += w * w;
  double hinge = 0.0;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const double y = data.y[i] == 1 ? 1.0 : -1.0;
    hinge += std::max(0.0, 1.0 - y * model.decision_value(data.row(i)));
  }
  return 0.5 * model.lambda * reg + hinge / static_cast<double>(data.rows());
}

LinearSvm train_svm(const FeatureSet& data, const SvmParams& params, std::uint64_t seed) {
  if (!(params.lambda > 0.0)) throw Error(ErrorCode::kInvalidArgument, "lambda must be > 0");
  const Dataset d = Dataset::from(data);
  if (d.n_classes() != 2) {
    throw Error(ErrorCode::kNotBinary, "linear SVM needs exactly 2 classes, got " + std::to_string(d.n_classes()));
  }
  std::size_t per_class[2] = {0, 0};
  for (int y : d.y) ++per_class[y];
  for (int c = 0; c < 2; ++c) {
    if (per_class[c] == 0) throw Error(ErrorCode::kEmptyClass, "class '" + d.schema.class_names[c] + "' has no instances");
  }

  LinearSvm svm;
  svm.lambda = params.lambda;
  svm.epochs = params.epochs;
  svm.seed = seed;
  svm.schema = d.schema;
  const std::size_t n = d.rows();
  const std::size_t m = d.n_features;
  svm.scaler_mean.assign(m, 0.0);
  svm.scaler_std.assign(m, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) svm.scaler_mean[j] += d.x[i * m + j];
  }
  for (double& v : svm.scaler_mean) v /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double diff = d.x[i * m + j] - svm.scaler_mean[j];
      svm.scaler_std[j] += diff * diff;
    }
  }
  for (double& v : svm.scaler_std) {
    v = std::sqrt(v / static_cast<double>(n));
    if (!(v > 0.0)) v = 1.0;
  }

  std::vector<double> z(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) z[i * m + j] = (d.x[i * m + j] - svm.scaler_mean[j]) / svm.scaler_std[j];
  }

  svm.weights.assign(m, 0.0);
  Rng rng(seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::size_t t = 0;
  for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t i : order) {
      ++t;
      const double eta = 1.0 / (params.lambda * static_cast<double>(t));
      const double y = d.y[i] == 1 ? 1.0 : -1.0;
      const double* xi = z.data() + i * m;
      double margin = svm.bias;
      for (std::size_t j = 0; j < m; ++j) margin += svm.weights[j] * xi[j];
      margin *= y;
      const double shrink = 1.0 - eta * params.lambda;
      for (double& w : svm.weights) w *= shrink;
      svm.bias *= shrink;
      if (margin < 1.0) {
        for (std::size_t j = 0; j < m; ++j) svm.weights[j] += eta * y * xi[j];
        svm.bias += eta * y;
      }
    }
  }
  return svm;
}

EnsembleModel make_ensemble(std::vector<EnsembleMember> members) {
  if (members.empty()) throw Error(ErrorCode::kInvalidArgument, "ensemble needs at least one member");
  double total = 0.0;
  for (const auto& m : members) {
    if (!(m.weight >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "ensemble weights must be >= 0");
    total += m.weight;
  }
  if (!(total > 0.0)) throw Error(ErrorCode::kInvalidArgument, "ensemble weights sum to zero");
  EnsembleModel e;
  e.schema = std::visit([](const auto& model) { return model.schema; }, members.front().model);
  for (auto& m : members) {
    const ModelSchema s = std::visit([](const auto& model) { return model.schema; }, m.model);
    if (s != e.schema) throw Error(ErrorCode::kSchemaMismatch, "ensemble members disagree on schema");
    m.weight /= total;
    e.members.push_back(std::move(m));
  }
  return e;
}

ModelSchema schema_of(const AnyModel& model) {
  return std::visit([](const auto& m) { return m.schema; }, model);
}

std::vector<double> predict_proba(const AnyModel& model, std::span<const double> x) {
  return std::visit([&](const auto& m) { return m.predict_proba(x); }, model);
}

std::vector<double> predict_proba(const AnyModel& model, const FeatureVector& x) {
  const ModelSchema schema = schema_of(model);
  const auto& want = schema.feature_names;
  for (std::size_t i = 0; i < std::max(want.size(), x.names.size()); ++i) {
    const std::string got = i < x.names.size() ? x.names[i] : "<missing>";
    const std::string exp = i < want.size() ? want[i] : "<none>";
    if (got != exp) {
      throw Error(ErrorCode::kSchemaMismatch, "column " + std::to_string(i) + ": '" + got + "' != '" + exp + "'");
    }
  }
  return predict_proba(model, std::span<const double>(x.values));
}

int argmax_class(std::span<const double> proba) {
  int best = 0;
  for (std::size_t c = 1; c < proba.size(); ++c) {
    if (proba[c] > proba[static_cast<std::size_t>(best)]) best = static_cast<int>(c);
  }
  return best;
}

Vote soft_vote(const EnsembleModel& ensemble, std::span<const double> x) {
  Vote v;
  v.proba = ensemble.predict_proba(x);
  v.label = argmax_class(v.proba);
  return v;
}

Vote soft_vote(const EnsembleModel& ensemble, const FeatureVector& x) {
  Vote v;
  v.proba = predict_proba(AnyModel{ensemble}, x);
  v.label = argmax_class(v.proba);
  return v;
}

int predict(const AnyModel& model, std::span<const double> x) { return argmax_class(predict_proba(model, x)); }

FeatureImportance feature_importance(const RandomForest& forest) {
  FeatureImportance out;
  const auto& names = forest.schema.feature_names;
  std::vector<std::size_t> order(names.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return forest.importances[a] > forest.importances[b];
  });
  for (std::size_t i : order) out.ranking.emplace_back(names[i], forest.importances[i]);
  out.no_splits = !forest.has_splits();
  return out;
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

using nlohmann::json;

json schema_json(const ModelSchema& s) { return {{"feature_names", s.feature_names}, {"class_names", s.class_names}}; }

ModelSchema schema_from(const json& j) {
  return {j.at("feature_names").get<std::vector<std::string>>(), j.at("class_names").get<std::vector<std::string>>()};
}

json tree_json(const DecisionTree& t) {
  json nodes = json::array();
  for (const auto& n : t.nodes) {
    if (n.feature >= 0) {
      nodes.push_back({{"feature", n.feature},
                       {"threshold", n.threshold},
                       {"left", n.left},
                       {"right", n.right},
                       {"samples", n.samples},
                       {"impurity_decrease", n.impurity_decrease}});
    } else {
      nodes.push_back({{"leaf", n.proba}, {"samples", n.samples}});
    }
  }
  return {{"max_depth", t.params.max_depth}, {"min_samples_leaf", t.params.min_samples_leaf}, {"nodes", nodes}};
}

DecisionTree tree_from(const json& j, const ModelSchema& schema) {
  DecisionTree t;
  t.schema = schema;
  t.params.max_depth = j.at("max_depth").get<std::size_t>();
  t.params.min_samples_leaf = j.at("min_samples_leaf").get<std::size_t>();
  for (const auto& n : j.at("nodes")) {
    TreeNode node;
    node.samples = n.at("samples").get<std::size_t>();
    if (n.contains("leaf")) {
      node.proba = n.at("leaf").get<std::vector<double>>();
      if (node.proba.size() != schema.class_names.size()) {
        throw Error(ErrorCode::kSchemaMismatch, "leaf probability length differs from class count");
      }
    } else {
      node.feature = n.at("feature").get<int>();
      node.threshold = n.at("threshold").get<double>();
      node.left = n.at("left").get<int>();
      node.right = n.at("right").get<int>();
      node.impurity_decrease = n.at("impurity_decrease").get<double>();
    }
    t.nodes.push_back(std::move(node));
  }
  const auto count = static_cast<int>(t.nodes.size());
  for (const auto& n : t.nodes) {
    if (n.feature >= 0 && (n.left <= 0 || n.right <= 0 || n.left >= count || n.right >= count ||
                           static_cast<std::size_t>(n.feature) >= schema.feature_names.size())) {
      throw Error(ErrorCode::kInvalidArgument, "tree node references out of range");
    }
  }
  if (t.nodes.empty()) throw Error(ErrorCode::kInvalidArgument, "tree has no nodes");
  return t;
}

json forest_body(const RandomForest& f) {
  json trees = json::array();
  for (const auto& t : f.trees) trees.push_back(tree_json(t));
  return {{"mtry", f.mtry}, {"seed", f.seed}, {"importances", f.importances}, {"trees", trees}};
}

RandomForest forest_from(const json& j, const ModelSchema& schema) {
  RandomForest f;
  f.schema = schema;
  f.mtry = j.at("mtry").get<std::size_t>();
  f.seed = j.at("seed").get<std::uint64_t>();
  f.importances = j.at("importances").get<std::vector<double>>();
  for (const auto& t : j.at("trees")) f.trees.push_back(tree_from(t, schema));
  if (f.trees.empty()) throw Error(ErrorCode::kInvalidArgument, "forest has no trees");
  return f;
}

json svm_body(const LinearSvm& s) {
  return {{"weights", s.weights},         {"bias", s.bias},     {"scaler_mean", s.scaler_mean},
          {"scaler_std", s.scaler_std},   {"lambda", s.lambda}, {"epochs", s.epochs},
          {"seed", s.seed}};
}

LinearSvm svm_from(const json& j, const ModelSchema& schema) {
  LinearSvm s;
  s.schema = schema;
  s.weights = j.at("weights").get<std::vector<double>>();
  s.bias = j.at("bias").get<double>();
  s.scaler_mean = j.at("scaler_mean").get<std::vector<double>>();
  s.scaler_std = j.at("scaler_std").get<std::vector<double>>();
  s.lambda = j.at("lambda").get<double>();
  s.epochs = j.at("epochs").get<std::size_t>();
  s.seed = j.at("seed").get<std::uint64_t>();
  const std::size_t m = schema.feature_names.size();
  if (s.weights.size() != m || s.scaler_mean.size() != m || s.scaler_std.size() != m) {
    throw Error(ErrorCode::kSchemaMismatch, "SVM vectors do not match feature count");
  }
  return s;
}

std::string kind_of(const BaseModel& m) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, DecisionTree>) return "decision_tree";
        else if constexpr (std::is_same_v<T, RandomForest>) return "random_forest";
        else return "linear_svm";
      },
      m);
}

json base_body(const BaseModel& m) {
  return std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, DecisionTree>) return {{"tree", tree_json(v)}};
        else if constexpr (std::is_same_v<T, RandomForest>) return forest_body(v);
        else return svm_body(v);
      },
      m);
}

BaseModel base_from(const std::string& kind, const json& body, const ModelSchema& schema) {
  if (kind == "decision_tree") return tree_from(body.at("tree"), schema);
  if (kind == "random_forest") return forest_from(body, schema);
  if (kind == "linear_svm") return svm_from(body, schema);
  throw Error(ErrorCode::kInvalidArgument, "unknown model kind '" + kind + "'");
}

}  // namespace

std::string serialize_model(const AnyModel& model, const std::map<std::string, std::string>& config_echo) {
  json doc;
  doc["format"] = "audioad-model";
  doc["format_version"] = kFormatVersion;
  doc["schema"] = schema_json(schema_of(model));
  doc["config"] = config_echo;
  if (const auto* e = std::get_if<EnsembleModel>(&model)) {
    doc["kind"] = "ensemble";
    json members = json::array();
    for (const auto& m : e->members) {
      members.push_back({{"kind", kind_of(m.model)}, {"weight", m.weight}, {"model", base_body(m.model)}});
    }
    doc["model"] = {{"members", members}};
  } else {
    const BaseModel base = std::visit(
        [](const auto& v) -> BaseModel {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, EnsembleModel>) throw Error(ErrorCode::kInvalidArgument, "unreachable");
          else return v;
        },
        model);
    doc["kind"] = kind_of(base);
    doc["model"] = base_body(base);
  }
  return doc.dump(1) + "\n";
}

AnyModel deserialize_model(const std::string& text) {
  try {
    const json doc = json::parse(text);
    if (doc.at("format").get<std::string>() != "audioad-model") {
      throw Error(ErrorCode::kInvalidArgument, "not an audioad model document");
    }
    if (doc.at("format_version").get<int>() != kFormatVersion) {
      throw Error(ErrorCode::kInvalidArgument, "unsupported model format_version");
    }
    const ModelSchema schema = schema_from(doc.at("schema"));
    const std::string kind = doc.at("kind").get<std::string>();
    if (kind == "ensemble") {
      // Stored weights are already normalized; keep them bit-exact.
      EnsembleModel e;
      e.schema = schema;
      for (const auto& m : doc.at("model").at("members")) {
        const double w = m.at("weight").get<double>();
        if (!(w >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "negative ensemble weight");
        e.members.push_back({base_from(m.at("kind").get<std::string>(), m.at("model"), schema), w});
      }
      if (e.members.empty()) throw Error(ErrorCode::kInvalidArgument, "ensemble has no members");
      return e;
    }
    return std::visit([](auto&& v) -> AnyModel { return std::move(v); }, base_from(kind, doc.at("model"), schema));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("malformed model document: ") + e.what());
  }
}

void save_model(const AnyModel& model, const std::string& path, const std::map<std::string, std::string>& config_echo) {
  write_text_file(path, serialize_model(model, config_echo));
}

AnyModel load_model(const std::string& path) { return deserialize_model(read_text_file(path)); }

}  // namespace audioad
