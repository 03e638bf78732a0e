#pragma once

#include "json.hpp"
#include "tabens/core.hpp"
#include "tabens/learners.hpp"

namespace tabens {

/// Per-feature threshold candidates shared by every tree of an ensemble fit.
/// Features with few distinct values get exact midpoints; wide continuous
/// features are quantile-binned (256 bins) for split-search speed.
struct FeatureBins {
  std::vector<std::vector<double>> cuts;                           // ascending thresholds
  Eigen::Matrix<std::uint16_t, Eigen::Dynamic, Eigen::Dynamic> codes;  // row x feature bin ids

  static FeatureBins build(const Matrix& features, int max_bins = 256);
  int bin_count(int feature) const { return static_cast<int>(cuts[feature].size()) + 1; }
};

enum class FeatureSubset { All, Sqrt, Log2 };
FeatureSubset feature_subset_from_name(const std::string& name);

enum class Splitter { Best, Random };

struct TreeParams {
  Criterion criterion = Criterion::Gini;           // classification trees
  bool friedman_score = false;                     // regression trees: friedman_mse selection
  Splitter splitter = Splitter::Best;
  int max_depth = -1;                              // -1 = unlimited
  int min_samples_leaf = 1;
  int min_samples_split = 2;
  double min_impurity_decrease = 0.0;
  FeatureSubset max_features = FeatureSubset::All;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  int depth = 0;
  double n_weighted = 0.0;
  long n_samples = 0;
  double impurity = 0.0;
  Vector class_dist;   // leaf class probabilities (classification)
  double value = 0.0;  // leaf prediction (regression)
};

/// Greedy impurity-minimising classification tree over binned features,
/// with optional per-row sample weights (AdaBoost) and per-split feature
/// subsampling (random forest).
class DecisionTree {
 public:
  void fit(const Matrix& features, const FeatureBins& bins, const std::vector<int>& labels,
           int class_count, const TreeParams& params, Rng& rng,
           const Vector* sample_weights = nullptr);

  int apply(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;  // leaf node index
  Matrix predict_proba(const Matrix& features) const;

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  int max_depth_reached() const;

  nlohmann::json to_json() const;
  static DecisionTree from_json(const nlohmann::json& j, int class_count);

 private:
  std::vector<TreeNode> nodes_;
  int class_count_ = 0;
};

/// Squared-error regression tree (gradient-boosting base learner). Leaf
/// values can be overwritten after fitting, which boosting uses for its
/// Newton leaf updates.
class RegressionTree {
 public:
  void fit(const Matrix& features, const FeatureBins& bins, const Vector& targets,
           const TreeParams& params, Rng& rng);

  int apply(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;
  double predict_one(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;
  void set_leaf_value(int node, double value) { nodes_[node].value = value; }

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::vector<int> leaf_ids() const;

  nlohmann::json to_json() const;
  static RegressionTree from_json(const nlohmann::json& j);

 private:
  std::vector<TreeNode> nodes_;
};

}  // namespace tabens
