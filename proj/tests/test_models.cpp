#include <doctest.h>

#include <cmath>
#include <numeric>

#include "audioad/error.hpp"
#include "audioad/models.hpp"
#include "oracles.hpp"

using namespace audioad;

namespace {

FeatureSet make_set(const std::vector<std::vector<double>>& rows, const std::vector<int>& labels,
                    std::vector<std::string> classes = {"A", "B"}) {
  FeatureSet s;
  for (std::size_t j = 0; j < rows.at(0).size(); ++j) s.names.push_back("f" + std::to_string(j));
  s.class_names = std::move(classes);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    FeatureVector v;
    v.names = s.names;
    v.values = rows[i];
    v.label = labels[i];
    v.clip_id = "r" + std::to_string(i);
    s.vectors.push_back(std::move(v));
  }
  return s;
}

// Feature 0 decides the label; the rest are noise.
FeatureSet informative_set(std::size_t n, std::size_t n_features, std::uint64_t seed) {
  oracle::Lcg lcg(seed);
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> r(n_features);
    for (auto& v : r) v = lcg.symmetric();
    labels.push_back(r[0] > 0.1 ? 1 : 0);
    rows.push_back(r);
  }
  return make_set(rows, labels);
}

DecisionTree leaf_tree(std::vector<double> proba, const ModelSchema& schema) {
  DecisionTree t;
  t.schema = schema;
  TreeNode leaf;
  leaf.proba = std::move(proba);
  t.nodes.push_back(leaf);
  return t;
}

}  // namespace

TEST_CASE("decision tree examples") {
  Rng rng(1);
  SUBCASE("pure node is a single leaf") {
    const auto t = train_tree(make_set({{0.0}, {1.0}, {2.0}}, {1, 1, 1}), {}, rng);
    REQUIRE(t.nodes.size() == 1);
    CHECK(t.nodes[0].proba == std::vector<double>{0.0, 1.0});
  }
  SUBCASE("one split at 1.5") {
    const auto t = train_tree(make_set({{0.0}, {1.0}, {2.0}, {3.0}}, {0, 0, 1, 1}), {}, rng);
    REQUIRE(t.nodes.size() == 3);
    CHECK(t.nodes[0].feature == 0);
    CHECK(t.nodes[0].threshold == 1.5);
    for (double x : {0.0, 1.0}) CHECK(argmax_class(t.predict_proba(std::vector<double>{x})) == 0);
    for (double x : {2.0, 3.0}) CHECK(argmax_class(t.predict_proba(std::vector<double>{x})) == 1);
  }
  SUBCASE("conflicting duplicates give empirical frequencies") {
    const auto t = train_tree(make_set({{1.0, 2.0}, {1.0, 2.0}, {1.0, 2.0}, {1.0, 2.0}}, {0, 1, 1, 1}), {}, rng);
    REQUIRE(t.nodes.size() == 1);
    CHECK(t.nodes[0].proba[0] == doctest::Approx(0.25));
    CHECK(t.nodes[0].proba[1] == doctest::Approx(0.75));
  }
  SUBCASE("gain ties go to the lowest feature index") {
    const auto t = train_tree(make_set({{0.0, 0.0}, {1.0, 1.0}}, {0, 1}), {}, rng);
    CHECK(t.nodes[0].feature == 0);
  }
  SUBCASE("depth and leaf-size limits") {
    const auto data = informative_set(200, 4, 3);
    TreeParams p;
    p.max_depth = 1;
    CHECK(train_tree(data, p, rng).nodes.size() <= 3);
    p = TreeParams{};
    p.min_samples_leaf = 40;
    for (const auto& n : train_tree(data, p, rng).nodes) {
      if (n.feature < 0) CHECK(n.samples >= 40);
    }
  }
  SUBCASE("empty dataset") {
    FeatureSet empty;
    empty.names = {"f0"};
    empty.class_names = {"A", "B"};
    try {
      train_tree(empty, {}, rng);
      FAIL("expected EmptyDataset");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kEmptyDataset);
    }
  }
}

TEST_CASE("tree invariants on random data") {
  const auto data = informative_set(150, 5, 9);
  Rng rng(2);
  const auto t = train_tree(data, {}, rng);
  const auto ds = Dataset::from(data);
  for (const auto& node : t.nodes) {
    if (node.feature < 0) {
      CHECK(std::accumulate(node.proba.begin(), node.proba.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-9));
      continue;
    }
    // Threshold is a midpoint of two consecutive distinct training values.
    std::vector<double> vals;
    for (std::size_t i = 0; i < ds.rows(); ++i) vals.push_back(ds.row(i)[node.feature]);
    std::sort(vals.begin(), vals.end());
    bool found = false;
    for (std::size_t i = 1; i < vals.size(); ++i) {
      if (vals[i] != vals[i - 1] && vals[i - 1] <= node.threshold && node.threshold < vals[i] &&
          std::abs(node.threshold - (vals[i - 1] + vals[i]) / 2) < 1e-12) {
        found = true;
      }
    }
    CHECK(found);
  }
}

TEST_CASE("monotone feature transforms keep tree predictions on training points") {
  const auto data = informative_set(120, 3, 4);
  auto transformed = data;
  for (auto& v : transformed.vectors) {
    v.values[0] = std::exp(3.0 * v.values[0]);
    v.values[1] = std::pow(v.values[1] + 2.0, 3);
    v.values[2] = 5.0 * v.values[2] - 1.0;
  }
  Rng r1(5), r2(5);
  const auto a = train_tree(data, {}, r1);
  const auto b = train_tree(transformed, {}, r2);
  for (std::size_t i = 0; i < data.size(); ++i) {
    CHECK(argmax_class(a.predict_proba(data.vectors[i].values)) ==
          argmax_class(b.predict_proba(transformed.vectors[i].values)));
  }
}

TEST_CASE("random forest") {
  const auto data = informative_set(200, 6, 11);
  ForestParams p;
  p.n_trees = 25;

  SUBCASE("same seed, same forest, any thread count") {
    const auto a = train_forest(data, p, 42);
    p.threads = 4;
    const auto b = train_forest(data, p, 42);
    CHECK(serialize_model(a) == serialize_model(b));
    CHECK(a.importances == b.importances);
  }
  SUBCASE("single tree without bootstrap equals train_tree") {
    p.n_trees = 1;
    p.bootstrap = false;
    p.mtry = 6;
    const auto f = train_forest(data, p, 7);
    Rng rng = Rng::stream(7, 0);
    const auto t = train_tree(data, {}, rng, 6);
    REQUIRE(f.trees.size() == 1);
    CHECK(serialize_model(f.trees[0]) == serialize_model(t));
  }
  SUBCASE("informative feature ranks first, importances sum to one") {
    const auto f = train_forest(data, p, 3);
    const auto imp = feature_importance(f);
    CHECK(imp.ranking[0].first == "f0");
    CHECK_FALSE(imp.no_splits);
    double sum = 0.0;
    for (const auto& [name, v] : imp.ranking) {
      CHECK(v >= 0.0);
      sum += v;
    }
    CHECK(std::abs(sum - 1.0) < 1e-9);
    for (std::size_t i = 1; i < imp.ranking.size(); ++i) CHECK(imp.ranking[i - 1].second >= imp.ranking[i].second);
  }
  SUBCASE("predict_proba is the mean of the trees") {
    const auto f = train_forest(data, p, 8);
    oracle::Lcg lcg(12);
    for (int t = 0; t < 30; ++t) {
      std::vector<double> x(6);
      for (auto& v : x) v = lcg.symmetric();
      std::vector<double> mean(2, 0.0);
      for (const auto& tree : f.trees) {
        const auto pr = tree.predict_proba(x);
        for (int c = 0; c < 2; ++c) mean[c] += pr[c];
      }
      const auto got = f.predict_proba(x);
      for (int c = 0; c < 2; ++c) CHECK(got[c] == doctest::Approx(mean[c] / f.trees.size()).epsilon(1e-12));
    }
  }
  SUBCASE("pure data gives no splits and zero importances") {
    const auto pure = make_set({{1.0}, {2.0}, {3.0}}, {0, 0, 0});
    const auto f = train_forest(pure, p, 1);
    const auto imp = feature_importance(f);
    CHECK(imp.no_splits);
    CHECK(imp.ranking[0].second == 0.0);
    CHECK(predict_proba(AnyModel{f}, std::vector<double>{5.0}) == std::vector<double>{1.0, 0.0});
  }
  CHECK(default_mtry(30) == 5);
  p.mtry = 7;
  CHECK_THROWS_AS(train_forest(data, p, 1), Error);
}

TEST_CASE("forest probability from hand-built trees") {
  const ModelSchema schema{{"f0"}, {"A", "B"}};
  RandomForest f;
  f.schema = schema;
  f.trees = {leaf_tree({0, 1}, schema), leaf_tree({0, 1}, schema), leaf_tree({0, 1}, schema), leaf_tree({1, 0}, schema)};
  const auto p = f.predict_proba(std::vector<double>{0.0});
  CHECK(p[0] == doctest::Approx(0.25));
  CHECK(p[1] == doctest::Approx(0.75));
}

TEST_CASE("linear SVM") {
  SUBCASE("two separable points") {
    const auto data = make_set({{-1.0}, {1.0}}, {0, 1});
    SvmParams p;
    p.epochs = 100;
    const auto m = train_svm(data, p, 1);
    CHECK(m.decision_value(std::vector<double>{-1.0}) < 0.0);
    CHECK(m.decision_value(std::vector<double>{1.0}) > 0.0);
  }
  SUBCASE("zero epochs") {
    SvmParams p;
    p.epochs = 0;
    const auto m = train_svm(informative_set(20, 3, 1), p, 1);
    for (double w : m.weights) CHECK(w == 0.0);
    CHECK(m.bias == 0.0);
    CHECK(m.decision_value(std::vector<double>{0.3, 0.1, 0.2}) == 0.0);
    CHECK(m.predict_proba(std::vector<double>{0.3, 0.1, 0.2}) == std::vector<double>{0.5, 0.5});
    CHECK(predict(AnyModel{m}, std::vector<double>{0.3, 0.1, 0.2}) == 0);
  }
  SUBCASE("duplicated instances keep the scaler") {
    auto data = informative_set(30, 3, 2);
    const auto a = train_svm(data, {}, 1);
    const auto copy = data.vectors;
    data.vectors.insert(data.vectors.end(), copy.begin(), copy.end());
    const auto b = train_svm(data, {}, 1);
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(a.scaler_mean[j] == doctest::Approx(b.scaler_mean[j]).epsilon(1e-12));
      CHECK(a.scaler_std[j] == doctest::Approx(b.scaler_std[j]).epsilon(1e-12));
    }
  }
  SUBCASE("zero-variance feature gets std 1") {
    const auto m = train_svm(make_set({{1.0, 0.0}, {1.0, 1.0}}, {0, 1}), {}, 1);
    CHECK(m.scaler_std[0] == 1.0);
  }
  SUBCASE("objective decreases on separable data") {
    const auto data = informative_set(100, 4, 6);
    SvmParams p;
    p.epochs = 0;
    const auto start = train_svm(data, p, 3);
    p.epochs = 30;
    const auto end = train_svm(data, p, 3);
    const auto ds = Dataset::from(data);
    CHECK(svm_objective(end, ds) <= svm_objective(start, ds));
  }
  SUBCASE("errors") {
    try {
      train_svm(make_set({{0.0}, {1.0}, {2.0}}, {0, 1, 2}, {"A", "B", "C"}), {}, 1);
      FAIL("expected NotBinary");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kNotBinary);
    }
    try {
      train_svm(make_set({{0.0}, {1.0}}, {0, 0}), {}, 1);
      FAIL("expected EmptyClass");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kEmptyClass);
    }
  }
}

TEST_CASE("soft voting") {
  const ModelSchema schema{{"f0"}, {"A", "B"}};
  RandomForest a, b;
  a.schema = b.schema = schema;
  a.trees = {leaf_tree({0.9, 0.1}, schema)};
  b.trees = {leaf_tree({0.2, 0.8}, schema)};
  const auto ens = make_ensemble({{a, 1.0}, {b, 1.0}});
  CHECK(ens.members[0].weight == 0.5);
  const auto v = soft_vote(ens, std::vector<double>{0.0});
  CHECK(v.proba[0] == doctest::Approx(0.55));
  CHECK(v.proba[1] == doctest::Approx(0.45));
  CHECK(v.label == 0);

  const auto same = make_ensemble({{a, 0.2}, {a, 0.8}});
  CHECK(soft_vote(same, std::vector<double>{0.0}).proba[0] == doctest::Approx(0.9));

  CHECK(argmax_class(std::vector<double>{0.5, 0.5}) == 0);

  FeatureVector wrong;
  wrong.names = {"g0"};
  wrong.values = {0.0};
  try {
    soft_vote(ens, wrong);
    FAIL("expected SchemaMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kSchemaMismatch);
  }
  CHECK_THROWS_AS(make_ensemble({}), Error);
  CHECK_THROWS_AS(make_ensemble({{a, -1.0}}), Error);
}

TEST_CASE("serialization round trip") {
  const auto data = informative_set(120, 5, 21);
  ForestParams fp;
  fp.n_trees = 10;
  const auto forest = train_forest(data, fp, 4);
  const auto svm = train_svm(data, {}, 4);
  const auto ens = make_ensemble({{forest, 0.3}, {svm, 0.7}});
  Rng rng(5);
  const auto tree = train_tree(data, {}, rng);

  oracle::Lcg lcg(99);
  std::vector<std::vector<double>> inputs(100, std::vector<double>(5));
  for (auto& x : inputs) {
    for (auto& v : x) v = 2.0 * lcg.symmetric();
  }
  for (const AnyModel& m : {AnyModel{tree}, AnyModel{forest}, AnyModel{svm}, AnyModel{ens}}) {
    const auto text = serialize_model(m, {{"seed", "4"}});
    const auto back = deserialize_model(text);
    CHECK(back.index() == m.index());
    CHECK(serialize_model(back, {{"seed", "4"}}) == text);
    for (const auto& x : inputs) CHECK(predict_proba(back, x) == predict_proba(m, x));
    CHECK(schema_of(back) == schema_of(m));
  }
  CHECK_THROWS_AS(deserialize_model("{\"format\": \"other\"}"), Error);
  CHECK_THROWS_AS(deserialize_model("not json"), Error);
}
