#include "doctest.h"

#include <cmath>

#include "tabens/tree.hpp"

using namespace tabens;

TEST_CASE("impurity closed forms") {
  CHECK(impurity({5, 5}, Criterion::Gini) == doctest::Approx(0.5));
  CHECK(impurity({10, 0}, Criterion::Gini) == doctest::Approx(0.0));
  CHECK(impurity({10, 0}, Criterion::Entropy) == doctest::Approx(0.0));
  CHECK(impurity({10, 0}, Criterion::LogLoss) == doctest::Approx(0.0));
  // counts (3,1): -0.75 log2 0.75 - 0.25 log2 0.25
  CHECK(impurity({3, 1}, Criterion::Entropy) == doctest::Approx(0.8112781244591328));
  CHECK(impurity({3, 1}, Criterion::LogLoss) ==
        doctest::Approx(0.8112781244591328 * std::log(2.0)));
  CHECK_THROWS_AS(impurity({0, 0}, Criterion::Gini), DataError);
}

namespace {

DecisionTree fit_tree(const Matrix& x, const std::vector<int>& y, int classes, TreeParams params,
                      std::uint64_t seed = 1) {
  const FeatureBins bins = FeatureBins::build(x);
  Rng rng(seed);
  DecisionTree tree;
  tree.fit(x, bins, y, classes, params, rng);
  return tree;
}

}  // namespace

TEST_CASE("single-leaf tree reports class frequencies") {
  Matrix x(3, 1);
  x << 1, 2, 3;
  TreeParams params;
  params.max_depth = 0;  // no splits allowed
  const DecisionTree tree = fit_tree(x, {0, 0, 1}, 2, params);
  const Matrix proba = tree.predict_proba(x);
  for (int i = 0; i < 3; ++i) {
    CHECK(proba(i, 0) == doctest::Approx(2.0 / 3.0));
    CHECK(proba(i, 1) == doctest::Approx(1.0 / 3.0));
  }
}

TEST_CASE("tree separates a clean split") {
  Matrix x(6, 2);
  x << 0, 5, 1, 9, 2, 4, 10, 5, 11, 8, 12, 3;
  const std::vector<int> y{0, 0, 0, 1, 1, 1};
  const DecisionTree tree = fit_tree(x, y, 2, TreeParams{});
  const Matrix proba = tree.predict_proba(x);
  for (int i = 0; i < 6; ++i) CHECK(argmax(proba.row(i)) == y[static_cast<std::size_t>(i)]);
}

TEST_CASE("constraints: depth, leaf size, impurity decrease") {
  Rng rng(3);
  const int n = 400;
  Matrix x(n, 4);
  std::vector<int> y;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 4; ++j) x(i, j) = rng.uniform();
    y.push_back((x(i, 0) > 0.5 ? 1 : 0) + (x(i, 1) > 0.5 ? 1 : 0));
  }

  TreeParams params;
  params.max_depth = 4;
  params.min_samples_leaf = 7;
  params.min_impurity_decrease = 0.001;
  const DecisionTree tree = fit_tree(x, y, 3, params);

  CHECK(tree.max_depth_reached() <= 4);
  for (const auto& node : tree.nodes()) {
    if (node.feature < 0) {
      CHECK(node.n_samples >= 7);
    } else {
      // Accepted splits reduce weighted impurity by at least the threshold.
      const auto& left = tree.nodes()[static_cast<std::size_t>(node.left)];
      const auto& right = tree.nodes()[static_cast<std::size_t>(node.right)];
      const double decrease =
          (node.n_weighted / static_cast<double>(n)) *
          (node.impurity - (left.n_weighted / node.n_weighted) * left.impurity -
           (right.n_weighted / node.n_weighted) * right.impurity);
      CHECK(decrease >= params.min_impurity_decrease - 1e-12);
    }
  }
}

TEST_CASE("random splitter also respects constraints") {
  Rng rng(5);
  const int n = 300;
  Matrix x(n, 3);
  std::vector<int> y;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 3; ++j) x(i, j) = rng.uniform();
    y.push_back(x(i, 1) > 0.6 ? 1 : 0);
  }
  TreeParams params;
  params.splitter = Splitter::Random;
  params.max_depth = 6;
  params.min_samples_leaf = 3;
  const DecisionTree tree = fit_tree(x, y, 2, params);
  CHECK(tree.max_depth_reached() <= 6);
  for (const auto& node : tree.nodes()) {
    if (node.feature < 0) CHECK(node.n_samples >= 3);
  }
  // Learns the one informative feature well enough to beat chance soundly.
  const Matrix proba = tree.predict_proba(x);
  int correct = 0;
  for (int i = 0; i < n; ++i) {
    correct += argmax(proba.row(i)) == y[static_cast<std::size_t>(i)] ? 1 : 0;
  }
  CHECK(correct > n * 0.9);
}

TEST_CASE("tree fit is deterministic per seed") {
  Rng rng(6);
  Matrix x(100, 3);
  std::vector<int> y;
  for (int i = 0; i < 100; ++i) {
    for (int j = 0; j < 3; ++j) x(i, j) = rng.uniform();
    y.push_back(rng.below(2));
  }
  TreeParams params;
  params.max_features = FeatureSubset::Sqrt;
  const DecisionTree a = fit_tree(x, y, 2, params, 42);
  const DecisionTree b = fit_tree(x, y, 2, params, 42);
  CHECK(a.predict_proba(x) == b.predict_proba(x));
}

TEST_CASE("regression tree fits a step function") {
  Matrix x(8, 1);
  x << 0, 1, 2, 3, 10, 11, 12, 13;
  Vector target(8);
  target << -1, -1, -1, -1, 1, 1, 1, 1;
  const FeatureBins bins = FeatureBins::build(x);
  Rng rng(1);
  TreeParams params;
  params.max_depth = 2;
  RegressionTree tree;
  tree.fit(x, bins, target, params, rng);
  for (int i = 0; i < 8; ++i) {
    CHECK(tree.predict_one(x.row(i)) == doctest::Approx(target(i)));
  }
}

TEST_CASE("regression tree respects min_samples_split") {
  Matrix x(4, 1);
  x << 0, 1, 2, 3;
  Vector target(4);
  target << 0, 1, 2, 3;
  const FeatureBins bins = FeatureBins::build(x);
  Rng rng(1);
  TreeParams params;
  params.min_samples_split = 5;  // root cannot split
  RegressionTree tree;
  tree.fit(x, bins, target, params, rng);
  CHECK(tree.nodes().size() == 1);
  CHECK(tree.predict_one(x.row(0)) == doctest::Approx(1.5));
}

TEST_CASE("feature bins quantize wide features but keep small ones exact") {
  Rng rng(9);
  Matrix x(1000, 2);
  for (int i = 0; i < 1000; ++i) {
    x(i, 0) = rng.uniform();                    // 1000 distinct values -> binned
    x(i, 1) = static_cast<double>(rng.below(5));  // 5 distinct -> exact midpoints
  }
  const FeatureBins bins = FeatureBins::build(x, 256);
  CHECK(bins.bin_count(0) <= 256);
  CHECK(bins.cuts[1].size() == 4);
  CHECK(bins.cuts[1][0] == doctest::Approx(0.5));
  CHECK(bins.cuts[1][3] == doctest::Approx(3.5));
}
