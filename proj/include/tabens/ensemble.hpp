#pragma once

#include "tabens/core.hpp"
#include "tabens/learners.hpp"
#include "tabens/tabular.hpp"

namespace tabens {

/// Hard-voting combiner over fitted members held in leaderboard rank order
/// (members[0] is the highest-ranked, which also breaks vote ties).
struct VotingEnsemble {
  std::vector<const Model*> members;
  Vector weights;  // all 1 for majority mode

  std::vector<int> predict(const Matrix& features) const;
};

/// Weights proportional to positive validation metric values, normalized to
/// sum 1.
Vector compute_weights(const std::vector<double>& validation_metric_values);

/// Per row: the class with most votes wins; ties go to the class predicted
/// by the highest-ranked member among the tied classes. Member rank order =
/// row order of `member_predictions`.
std::vector<int> majority_hard_vote(const std::vector<std::vector<int>>& member_predictions,
                                    int class_count);

std::vector<int> weighted_hard_vote(const std::vector<std::vector<int>>& member_predictions,
                                    const Vector& weights, int class_count);

enum class MetaFeatureKind { Probabilities, HardLabels };

struct StackingConfig {
  int folds = 10;
  std::uint64_t seed = 0;
  MetaFeatureKind meta_features = MetaFeatureKind::Probabilities;
  bool in_sample = false;  // true reproduces the naive (leaky) protocol
  std::vector<int> meta_hidden{100, 100};
  int meta_max_iter = 500;
  double meta_learning_rate_init = 0.05;  // meta net must actually converge
  std::uint64_t meta_seed = 0;
  int threads = 1;  // per-fold base fits are independent
};

/// Stacking over base specs with an MLP meta-classifier. Meta-features for
/// training rows are out-of-fold base predictions unless in_sample is set.
class StackingEnsemble {
 public:
  static StackingEnsemble fit(const std::vector<LearnerSpec>& base_specs,
                              const DataTable& training_table, const StackingConfig& config);

  std::vector<int> predict(const Matrix& features) const;
  Matrix meta_features_for(const Matrix& features) const;

  const std::vector<std::unique_ptr<Model>>& base_models() const { return base_models_; }
  const Model& meta_model() const { return *meta_model_; }
  MetaFeatureKind meta_feature_kind() const { return meta_kind_; }

  /// members x class_count probability columns, member-major order.
  int meta_feature_width() const;

  /// Manifest: member ids, weights/rank order, meta-feature layout.
  nlohmann::json manifest() const;

 private:
  std::vector<std::unique_ptr<Model>> base_models_;  // fit on the full training table
  std::unique_ptr<Model> meta_model_;
  MetaFeatureKind meta_kind_ = MetaFeatureKind::Probabilities;
  int class_count_ = 0;
};

}  // namespace tabens
