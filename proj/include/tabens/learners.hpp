#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "tabens/core.hpp"

namespace tabens {

enum class Family {
  LogisticRegression,
  Knn,
  GaussianNb,
  BernoulliNb,
  DecisionTree,
  RandomForest,
  GradientBoosting,
  AdaBoost,
  LinearSvc,
  Mlp,
};

std::string family_name(Family f);
Family family_from_name(const std::string& name);

using ParamValue = std::variant<bool, double, std::string, std::vector<double>>;

/// One algorithm family plus a concrete hyperparameter assignment.
struct LearnerSpec {
  std::string id;
  Family family = Family::LogisticRegression;
  std::map<std::string, ParamValue> params;

  bool has(const std::string& name) const { return params.count(name) > 0; }
  double number(const std::string& name, double fallback) const;
  int integer(const std::string& name, int fallback) const;
  std::string text(const std::string& name, const std::string& fallback) const;
  bool flag(const std::string& name, bool fallback) const;
  std::vector<int> int_list(const std::string& name, const std::vector<int>& fallback) const;

  std::string params_as_text() const;  // "k=v k=v", keys sorted
};

/// A fitted classifier. Immutable after fit; safe for concurrent prediction.
class Model {
 public:
  virtual ~Model() = default;

  const LearnerSpec& spec() const { return spec_; }
  int class_count() const { return class_count_; }
  int feature_count() const { return feature_count_; }

  /// One hard label per row. Default: row-argmax of predict_proba with
  /// lowest-class-id tie-break; families with their own tie rules override.
  virtual std::vector<int> predict(const Matrix& features) const;

  /// Row-stochastic matrix, rows sum to 1 within 1e-9.
  virtual Matrix predict_proba(const Matrix& features) const = 0;

  /// Per-stage training diagnostics where the family has stages
  /// (gradient boosting: training log-loss; AdaBoost: sample-weight sums).
  virtual std::vector<double> training_curve() const { return {}; }

  /// Count of non-fatal numeric fallbacks hit during fit/predict setup.
  virtual long warning_count() const { return 0; }

  nlohmann::json to_json() const;

 protected:
  Model(LearnerSpec spec, int class_count, int feature_count)
      : spec_(std::move(spec)), class_count_(class_count), feature_count_(feature_count) {}

  void check_features(const Matrix& features) const;
  virtual void save_state(nlohmann::json& out) const = 0;

  LearnerSpec spec_;
  int class_count_ = 0;
  int feature_count_ = 0;
};

/// Train one model. Deterministic given (spec, data, seed); a `random_state`
/// param in the spec is folded into the effective seed.
std::unique_ptr<Model> fit(const LearnerSpec& spec, const Matrix& features,
                           const std::vector<int>& labels, int class_count, std::uint64_t seed);

/// Round-trips fit() results bit-exactly (predictions identical).
std::unique_ptr<Model> model_from_json(const nlohmann::json& j);
std::unique_ptr<Model> load_model(const std::string& path);
void save_model(const Model& model, const std::string& path);

// ---- family sub-steps exposed for direct use and testing ----

enum class Criterion { Gini, Entropy, LogLoss };
Criterion criterion_from_name(const std::string& name);

/// gini = 1 - sum p^2; entropy = -sum p log2 p; log_loss = -sum p ln p.
double impurity(const std::vector<double>& class_counts, Criterion criterion);

enum class KnnMetric { Manhattan, Euclidean, Cosine, Minkowski };
KnnMetric knn_metric_from_name(const std::string& name);

/// Cosine with a zero vector falls back to distance 1 and sets *zero_vector.
double knn_distance(const VectorRef& a, const VectorRef& b, KnnMetric metric, double p,
                    bool* zero_vector = nullptr);

/// SAMME stage weight: alpha = ln((1-eps)/eps) + ln(K-1).
/// Requires 0 < eps < 1 - 1/K (the weak-learner condition).
double samme_update(double weighted_error, int class_count);

/// Negative gradient of multiclass log-loss w.r.t. raw scores: y_onehot - p.
Matrix gb_negative_gradient(const Matrix& labels_onehot, const Matrix& probabilities);

}  // namespace tabens
