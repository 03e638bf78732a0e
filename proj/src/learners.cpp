#include "tabens/learners.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "tabens/linear.hpp"
#include "tabens/mlp.hpp"
#include "tabens/tree.hpp"

namespace tabens {

// ---------------------------------------------------------------------------
// family names / spec params
// ---------------------------------------------------------------------------

std::string family_name(Family f) {
  switch (f) {
    case Family::LogisticRegression: return "logistic_regression";
    case Family::Knn: return "knn";
    case Family::GaussianNb: return "gaussian_nb";
    case Family::BernoulliNb: return "bernoulli_nb";
    case Family::DecisionTree: return "decision_tree";
    case Family::RandomForest: return "random_forest";
    case Family::GradientBoosting: return "gradient_boosting";
    case Family::AdaBoost: return "adaboost";
    case Family::LinearSvc: return "linear_svc";
    case Family::Mlp: return "mlp";
  }
  return "unknown";
}

Family family_from_name(const std::string& name) {
  static const std::map<std::string, Family> table = {
      {"logistic_regression", Family::LogisticRegression},
      {"knn", Family::Knn},
      {"gaussian_nb", Family::GaussianNb},
      {"bernoulli_nb", Family::BernoulliNb},
      {"decision_tree", Family::DecisionTree},
      {"random_forest", Family::RandomForest},
      {"gradient_boosting", Family::GradientBoosting},
      {"adaboost", Family::AdaBoost},
      {"linear_svc", Family::LinearSvc},
      {"mlp", Family::Mlp},
  };
  const auto it = table.find(name);
  if (it == table.end()) throw ConfigError("unknown learner family: " + name);
  return it->second;
}

double LearnerSpec::number(const std::string& name, double fallback) const {
  const auto it = params.find(name);
  if (it == params.end()) return fallback;
  if (const auto* d = std::get_if<double>(&it->second)) return *d;
  throw ConfigError("spec " + id + ": param '" + name + "' must be numeric");
}

int LearnerSpec::integer(const std::string& name, int fallback) const {
  const auto it = params.find(name);
  if (it == params.end()) return fallback;
  if (const auto* d = std::get_if<double>(&it->second)) {
    const int v = static_cast<int>(std::llround(*d));
    if (static_cast<double>(v) != *d) {
      throw ConfigError("spec " + id + ": param '" + name + "' must be an integer");
    }
    return v;
  }
  throw ConfigError("spec " + id + ": param '" + name + "' must be an integer");
}

std::string LearnerSpec::text(const std::string& name, const std::string& fallback) const {
  const auto it = params.find(name);
  if (it == params.end()) return fallback;
  if (const auto* s = std::get_if<std::string>(&it->second)) return *s;
  throw ConfigError("spec " + id + ": param '" + name + "' must be a string");
}

bool LearnerSpec::flag(const std::string& name, bool fallback) const {
  const auto it = params.find(name);
  if (it == params.end()) return fallback;
  if (const auto* b = std::get_if<bool>(&it->second)) return *b;
  throw ConfigError("spec " + id + ": param '" + name + "' must be a boolean");
}

std::vector<int> LearnerSpec::int_list(const std::string& name,
                                       const std::vector<int>& fallback) const {
  const auto it = params.find(name);
  if (it == params.end()) return fallback;
  if (const auto* v = std::get_if<std::vector<double>>(&it->second)) {
    std::vector<int> out;
    for (double d : *v) out.push_back(static_cast<int>(std::llround(d)));
    return out;
  }
  throw ConfigError("spec " + id + ": param '" + name + "' must be an integer list");
}

std::string LearnerSpec::params_as_text() const {
  std::ostringstream os;
  bool first = true;
  for (const auto& [key, value] : params) {
    if (!first) os << ' ';
    first = false;
    os << key << '=';
    if (const auto* b = std::get_if<bool>(&value)) {
      os << (*b ? "true" : "false");
    } else if (const auto* d = std::get_if<double>(&value)) {
      if (*d == std::floor(*d) && std::abs(*d) < 1e15) {
        os << static_cast<long long>(*d);
      } else {
        os << *d;
      }
    } else if (const auto* s = std::get_if<std::string>(&value)) {
      os << *s;
    } else if (const auto* v = std::get_if<std::vector<double>>(&value)) {
      os << '(';
      for (std::size_t i = 0; i < v->size(); ++i) {
        if (i) os << ',';
        os << static_cast<long long>((*v)[i]);
      }
      os << ')';
    }
  }
  return os.str();
}

namespace {

void require_legal_params(const LearnerSpec& spec, const std::set<std::string>& legal) {
  for (const auto& [key, value] : spec.params) {
    if (!legal.count(key)) {
      throw ConfigError("spec " + spec.id + ": param '" + key + "' not legal for family " +
                        family_name(spec.family));
    }
  }
}

Matrix matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  if (rows.empty()) return Matrix(0, 0);
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t k = 0; k < rows[i].size(); ++k) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
    }
  }
  return m;
}

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> row(m.cols());
    for (Eigen::Index j = 0; j < m.cols(); ++j) row[static_cast<std::size_t>(j)] = m(i, j);
    rows.push_back(row);
  }
  return rows;
}

nlohmann::json vector_to_json(const Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Vector vector_from_json(const nlohmann::json& j) {
  const auto vals = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

}  // namespace

// ---------------------------------------------------------------------------
// free sub-steps
// ---------------------------------------------------------------------------

Criterion criterion_from_name(const std::string& name) {
  if (name == "gini") return Criterion::Gini;
  if (name == "entropy") return Criterion::Entropy;
  if (name == "log_loss") return Criterion::LogLoss;
  throw ConfigError("unknown criterion: " + name);
}

double impurity(const std::vector<double>& class_counts, Criterion criterion) {
  double total = 0.0;
  for (double c : class_counts) {
    if (c < 0.0) throw DataError("impurity: negative class count");
    total += c;
  }
  if (total == 0.0) throw DataError("impurity: all-zero class counts");
  double out = 0.0;
  switch (criterion) {
    case Criterion::Gini: {
      double sum_sq = 0.0;
      for (double c : class_counts) sum_sq += (c / total) * (c / total);
      out = 1.0 - sum_sq;
      break;
    }
    case Criterion::Entropy:
      for (double c : class_counts) {
        if (c > 0.0) out -= (c / total) * std::log2(c / total);
      }
      break;
    case Criterion::LogLoss:
      for (double c : class_counts) {
        if (c > 0.0) out -= (c / total) * std::log(c / total);
      }
      break;
  }
  return out;
}

KnnMetric knn_metric_from_name(const std::string& name) {
  if (name == "manhattan") return KnnMetric::Manhattan;
  if (name == "euclidean") return KnnMetric::Euclidean;
  if (name == "cosine") return KnnMetric::Cosine;
  if (name == "minkowski") return KnnMetric::Minkowski;
  throw ConfigError("unknown knn metric: " + name);
}

double knn_distance(const VectorRef& a, const VectorRef& b, KnnMetric metric, double p,
                    bool* zero_vector) {
  if (a.size() != b.size()) throw DataError("knn_distance: dimension mismatch");
  switch (metric) {
    case KnnMetric::Manhattan:
      return (a - b).cwiseAbs().sum();
    case KnnMetric::Euclidean:
      return (a - b).norm();
    case KnnMetric::Minkowski:
      return std::pow((a - b).cwiseAbs().array().pow(p).sum(), 1.0 / p);
    case KnnMetric::Cosine: {
      const double na = a.norm();
      const double nb = b.norm();
      if (na == 0.0 || nb == 0.0) {
        if (zero_vector) *zero_vector = true;
        return 1.0;  // orthogonality convention
      }
      return 1.0 - a.dot(b) / (na * nb);
    }
  }
  return 0.0;
}

double samme_update(double weighted_error, int class_count) {
  // At the boundary eps = 1 - 1/K the stage weight is exactly 0 (a
  // coin-flip learner contributes nothing), so the boundary is legal.
  const double limit = 1.0 - 1.0 / static_cast<double>(class_count);
  if (weighted_error <= 0.0 || weighted_error > limit) {
    throw NumericError("samme_update: weighted error outside the weak-learner range");
  }
  return std::log((1.0 - weighted_error) / weighted_error) +
         std::log(static_cast<double>(class_count) - 1.0);
}

Matrix gb_negative_gradient(const Matrix& labels_onehot, const Matrix& probabilities) {
  if (labels_onehot.rows() != probabilities.rows() ||
      labels_onehot.cols() != probabilities.cols()) {
    throw DataError("gb_negative_gradient: shape mismatch");
  }
  return labels_onehot - probabilities;
}

// ---------------------------------------------------------------------------
// Model base
// ---------------------------------------------------------------------------

void Model::check_features(const Matrix& features) const {
  if (features.cols() != feature_count_) {
    throw DataError("model " + spec_.id + ": expected " + std::to_string(feature_count_) +
                    " features, got " + std::to_string(features.cols()));
  }
}

std::vector<int> Model::predict(const Matrix& features) const {
  const Matrix proba = predict_proba(features);
  std::vector<int> out(static_cast<std::size_t>(proba.rows()));
  for (Eigen::Index i = 0; i < proba.rows(); ++i) {
    out[static_cast<std::size_t>(i)] = argmax(proba.row(i));
  }
  return out;
}

namespace {

nlohmann::json params_to_json(const std::map<std::string, ParamValue>& params) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [key, value] : params) {
    if (const auto* b = std::get_if<bool>(&value)) {
      out[key] = *b;
    } else if (const auto* d = std::get_if<double>(&value)) {
      out[key] = *d;
    } else if (const auto* s = std::get_if<std::string>(&value)) {
      out[key] = *s;
    } else if (const auto* v = std::get_if<std::vector<double>>(&value)) {
      out[key] = *v;
    }
  }
  return out;
}

std::map<std::string, ParamValue> params_from_json(const nlohmann::json& j) {
  std::map<std::string, ParamValue> out;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto& v = it.value();
    if (v.is_boolean()) {
      out[it.key()] = v.get<bool>();
    } else if (v.is_number()) {
      out[it.key()] = v.get<double>();
    } else if (v.is_string()) {
      out[it.key()] = v.get<std::string>();
    } else if (v.is_array()) {
      out[it.key()] = v.get<std::vector<double>>();
    } else {
      throw ConfigError("unsupported param value for '" + it.key() + "'");
    }
  }
  return out;
}

}  // namespace

nlohmann::json Model::to_json() const {
  nlohmann::json j;
  j["format"] = "tabens-model";
  j["format_version"] = 1;
  j["artifact_version"] = kArtifactVersion;
  j["id"] = spec_.id;
  j["family"] = family_name(spec_.family);
  j["params"] = params_to_json(spec_.params);
  j["class_count"] = class_count_;
  j["feature_count"] = feature_count_;
  nlohmann::json state = nlohmann::json::object();
  save_state(state);
  j["state"] = std::move(state);
  return j;
}

// ---------------------------------------------------------------------------
// logistic regression
// ---------------------------------------------------------------------------

namespace {

class LogisticRegressionModel final : public Model {
 public:
  LogisticRegressionModel(LearnerSpec spec, int classes, int feats, bool multinomial,
                          Matrix weights, Vector bias)
      : Model(std::move(spec), classes, feats),
        multinomial_(multinomial),
        weights_(std::move(weights)),
        bias_(std::move(bias)) {}

  static std::unique_ptr<LogisticRegressionModel> fit(const LearnerSpec& spec, const Matrix& x,
                                                      const std::vector<int>& y, int classes,
                                                      Rng rng) {
    require_legal_params(spec, {"penalty", "C", "multi_class", "max_iter", "random_state"});
    const std::string penalty = spec.text("penalty", "l2");
    if (penalty != "l2" && penalty != "none") {
      throw ConfigError("spec " + spec.id + ": penalty must be l2 or none");
    }
    const std::string mode = spec.text("multi_class", "default");
    if (mode != "default" && mode != "multinomial" && mode != "ovr") {
      throw ConfigError("spec " + spec.id + ": multi_class must be default, multinomial or ovr");
    }
    const double c = penalty == "none" ? 0.0 : spec.number("C", 1.0);
    if (penalty == "l2" && c <= 0.0) throw ConfigError("spec " + spec.id + ": C must be > 0");
    const int max_iter = spec.integer("max_iter", 1000);
    const bool multinomial = mode != "ovr";

    const LinearFitResult res =
        multinomial ? fit_softmax_regression(x, y, classes, c, max_iter, rng)
                    : fit_ovr_logistic(x, y, classes, c, max_iter, rng);
    return std::make_unique<LogisticRegressionModel>(spec, classes, static_cast<int>(x.cols()),
                                                     multinomial, res.weights, res.bias);
  }

  Matrix predict_proba(const Matrix& features) const override {
    check_features(features);
    const Matrix scores = linear_margins(features, weights_, bias_);
    if (multinomial_) return softmax_rows(scores);
    // One-vs-rest: per-class sigmoids normalized per row.
    Matrix proba = (1.0 + (-scores.array()).exp()).inverse().matrix();
    for (Eigen::Index i = 0; i < proba.rows(); ++i) {
      const double sum = proba.row(i).sum();
      proba.row(i) /= sum;
    }
    return proba;
  }

  void save_state(nlohmann::json& out) const override {
    out["multinomial"] = multinomial_;
    out["weights"] = matrix_to_json(weights_);
    out["bias"] = vector_to_json(bias_);
  }

  static std::unique_ptr<Model> load(LearnerSpec spec, int classes, int feats,
                                     const nlohmann::json& state) {
    return std::make_unique<LogisticRegressionModel>(
        std::move(spec), classes, feats, state.at("multinomial").get<bool>(),
        matrix_from_json(state.at("weights")), vector_from_json(state.at("bias")));
  }

 private:
  bool multinomial_;
  Matrix weights_;
  Vector bias_;
};

// ---------------------------------------------------------------------------
// k-nearest neighbours
// ---------------------------------------------------------------------------

class KnnModel final : public Model {
 public:
  KnnModel(LearnerSpec spec, int classes, int feats, Matrix train_x, std::vector<int> train_y,
           int k, KnnMetric metric, double p)
      : Model(std::move(spec), classes, feats),
        train_x_(std::move(train_x)),
        train_y_(std::move(train_y)),
        k_(k),
        metric_(metric),
        p_(p) {}

  static std::unique_ptr<KnnModel> fit(const LearnerSpec& spec, const Matrix& x,
                                       const std::vector<int>& y, int classes) {
    require_legal_params(spec, {"n_neighbors", "algorithm", "metric", "p", "random_state"});
    const int k = spec.integer("n_neighbors", 5);
    if (k < 1 || k > static_cast<int>(x.rows())) {
      throw ConfigError("spec " + spec.id + ": n_neighbors out of range");
    }
    const std::string algorithm = spec.text("algorithm", "brute");
    if (algorithm != "brute" && algorithm != "kd_tree" && algorithm != "ball_tree") {
      throw ConfigError("spec " + spec.id + ": unknown algorithm " + algorithm);
    }
    // All three search strategies return identical neighbours; brute force
    // is exact and fast enough at this data scale.
    const KnnMetric metric = knn_metric_from_name(spec.text("metric", "euclidean"));
    const double p = spec.number("p", 2.0);
    return std::make_unique<KnnModel>(spec, classes, static_cast<int>(x.cols()), x, y, k, metric,
                                      p);
  }

  Matrix predict_proba(const Matrix& features) const override {
    check_features(features);
    Matrix out(features.rows(), class_count_);
    std::vector<std::pair<double, int>> dist;
    for (Eigen::Index i = 0; i < features.rows(); ++i) {
      neighbours(features.row(i), dist);
      Eigen::RowVectorXd votes = Eigen::RowVectorXd::Zero(class_count_);
      for (int t = 0; t < k_; ++t) votes(train_y_[static_cast<std::size_t>(dist[t].second)]) += 1.0;
      out.row(i) = votes / static_cast<double>(k_);
    }
    return out;
  }

  std::vector<int> predict(const Matrix& features) const override {
    check_features(features);
    std::vector<int> out(static_cast<std::size_t>(features.rows()));
    std::vector<std::pair<double, int>> dist;
    std::vector<int> votes(static_cast<std::size_t>(class_count_));
    std::vector<double> dist_sum(static_cast<std::size_t>(class_count_));
    for (Eigen::Index i = 0; i < features.rows(); ++i) {
      neighbours(features.row(i), dist);
      std::fill(votes.begin(), votes.end(), 0);
      std::fill(dist_sum.begin(), dist_sum.end(), 0.0);
      for (int t = 0; t < k_; ++t) {
        const int c = train_y_[static_cast<std::size_t>(dist[t].second)];
        ++votes[static_cast<std::size_t>(c)];
        dist_sum[static_cast<std::size_t>(c)] += dist[t].first;
      }
      // Most votes; ties by smaller summed neighbour distance, then lower id.
      int best = -1;
      for (int c = 0; c < class_count_; ++c) {
        if (votes[static_cast<std::size_t>(c)] == 0) continue;
        if (best < 0 || votes[static_cast<std::size_t>(c)] > votes[static_cast<std::size_t>(best)] ||
            (votes[static_cast<std::size_t>(c)] == votes[static_cast<std::size_t>(best)] &&
             dist_sum[static_cast<std::size_t>(c)] < dist_sum[static_cast<std::size_t>(best)])) {
          best = c;
        }
      }
      out[static_cast<std::size_t>(i)] = best;
    }
    return out;
  }

  long warning_count() const override { return zero_vector_hits_.load(); }

  void save_state(nlohmann::json& out) const override {
    out["train_x"] = matrix_to_json(train_x_);
    out["train_y"] = train_y_;
  }

  static std::unique_ptr<Model> load(LearnerSpec spec, int classes, int feats,
                                     const nlohmann::json& state) {
    const int k = spec.integer("n_neighbors", 5);
    const KnnMetric metric = knn_metric_from_name(spec.text("metric", "euclidean"));
    const double p = spec.number("p", 2.0);
    return std::make_unique<KnnModel>(std::move(spec), classes, feats,
                                      matrix_from_json(state.at("train_x")),
                                      state.at("train_y").get<std::vector<int>>(), k, metric, p);
  }

 private:
  void neighbours(const Eigen::Ref<const Eigen::RowVectorXd>& query,
                  std::vector<std::pair<double, int>>& dist) const {
    dist.clear();
    dist.reserve(static_cast<std::size_t>(train_x_.rows()));
    for (Eigen::Index r = 0; r < train_x_.rows(); ++r) {
      bool zero = false;
      const double d = knn_distance(query.transpose(), train_x_.row(r).transpose(), metric_, p_,
                                    &zero);
      if (zero) zero_vector_hits_.fetch_add(1, std::memory_order_relaxed);
      dist.emplace_back(d, static_cast<int>(r));
    }
    std::partial_sort(dist.begin(), dist.begin() + k_, dist.end());
  }

  Matrix train_x_;
  std::vector<int> train_y_;
  int k_;
  KnnMetric metric_;
  double p_;
  mutable std::atomic<long> zero_vector_hits_{0};
};

// ---------------------------------------------------------------------------
// naive Bayes
// ---------------------------------------------------------------------------

class GaussianNbModel final : public Model {
 public:
  GaussianNbModel(LearnerSpec spec, int classes, int feats, Vector log_prior, Matrix means,
                  Matrix vars)
      : Model(std::move(spec), classes, feats),
        log_prior_(std::move(log_prior)),
        means_(std::move(means)),
        vars_(std::move(vars)) {}

  static std::unique_ptr<GaussianNbModel> fit(const LearnerSpec& spec, const Matrix& x,
                                              const std::vector<int>& y, int classes) {
    require_legal_params(spec, {"random_state"});
    const int n = static_cast<int>(x.rows());
    const int d = static_cast<int>(x.cols());
    Vector counts = Vector::Zero(classes);
    Matrix means = Matrix::Zero(classes, d);
    for (int i = 0; i < n; ++i) {
      counts(y[static_cast<std::size_t>(i)]) += 1.0;
      means.row(y[static_cast<std::size_t>(i)]) += x.row(i);
    }
    for (int c = 0; c < classes; ++c) means.row(c) /= counts(c);

    Matrix vars = Matrix::Zero(classes, d);
    for (int i = 0; i < n; ++i) {
      const auto diff = x.row(i) - means.row(y[static_cast<std::size_t>(i)]);
      vars.row(y[static_cast<std::size_t>(i)]) += diff.cwiseProduct(diff);
    }
    for (int c = 0; c < classes; ++c) vars.row(c) /= counts(c);

    // Variance floor keeps constant-within-class features finite.
    double max_var = 0.0;
    for (int j = 0; j < d; ++j) {
      const double mean_j = x.col(j).mean();
      max_var = std::max(max_var, (x.col(j).array() - mean_j).square().mean());
    }
    const double floor = std::max(1e-9 * max_var, 1e-300);
    vars = vars.cwiseMax(floor);

    Vector log_prior(classes);
    for (int c = 0; c < classes; ++c) log_prior(c) = std::log(counts(c) / n);
    return std::make_unique<GaussianNbModel>(spec, classes, d, std::move(log_prior),
                                             std::move(means), std::move(vars));
  }

  Matrix predict_proba(const Matrix& features) const override {
    check_features(features);
    Matrix joint(features.rows(), class_count_);
    const double log_2pi = std::log(2.0 * 3.14159265358979323846);
    for (int c = 0; c < class_count_; ++c) {
      const auto mu = means_.row(c);
      const auto var = vars_.row(c);
      const double const_term = -0.5 * (var.array().log() + log_2pi).sum() + log_prior_(c);
      for (Eigen::Index i = 0; i < features.rows(); ++i) {
        const double quad =
            ((features.row(i) - mu).array().square() / var.array()).sum();
        joint(i, c) = const_term - 0.5 * quad;
      }
    }
    return softmax_rows(joint);
  }

  void save_state(nlohmann::json& out) const override {
    out["log_prior"] = vector_to_json(log_prior_);
    out["means"] = matrix_to_json(means_);
    out["vars"] = matrix_to_json(vars_);
  }

  static std::unique_ptr<Model> load(LearnerSpec spec, int classes, int feats,
                                     const nlohmann::json& state) {
    return std::make_unique<GaussianNbModel>(
        std::move(spec), classes, feats, vector_from_json(state.at("log_prior")),
        matrix_from_json(state.at("means")), matrix_from_json(state.at("vars")));
  }

 private:
  Vector log_prior_;
  Matrix means_;
  Matrix vars_;
};

class BernoulliNbModel final : public Model {
 public:
  BernoulliNbModel(LearnerSpec spec, int classes, int feats, Vector log_prior, Matrix theta)
      : Model(std::move(spec), classes, feats),
        log_prior_(std::move(log_prior)),
        theta_(std::move(theta)) {}

  static std::unique_ptr<BernoulliNbModel> fit(const LearnerSpec& spec, const Matrix& x,
                                               const std::vector<int>& y, int classes) {
    require_legal_params(spec, {"random_state"});
    const int n = static_cast<int>(x.rows());
    const int d = static_cast<int>(x.cols());
    Vector counts = Vector::Zero(classes);
    Matrix ones = Matrix::Zero(classes, d);
    for (int i = 0; i < n; ++i) {
      const int c = y[static_cast<std::size_t>(i)];
      counts(c) += 1.0;
      for (int j = 0; j < d; ++j) {
        if (x(i, j) > 0.5) ones(c, j) += 1.0;  // binarize at 0.5
      }
    }
    Matrix theta(classes, d);
    for (int c = 0; c < classes; ++c) {
      theta.row(c) = (ones.row(c).array() + 1.0) / (counts(c) + 2.0);  // Laplace alpha=1
    }
    Vector log_prior(classes);
    for (int c = 0; c < classes; ++c) log_prior(c) = std::log(counts(c) / n);
    return std::make_unique<BernoulliNbModel>(spec, classes, d, std::move(log_prior),
                                              std::move(theta));
  }

  Matrix predict_proba(const Matrix& features) const override {
    check_features(features);
    const Matrix log_theta = theta_.array().log().matrix();
    const Matrix log_anti = (1.0 - theta_.array()).log().matrix();
    Matrix joint(features.rows(), class_count_);
    for (Eigen::Index i = 0; i < features.rows(); ++i) {
      for (int c = 0; c < class_count_; ++c) {
        double ll = log_prior_(c);
        for (int j = 0; j < feature_count_; ++j) {
          ll += features(i, j) > 0.5 ? log_theta(c, j) : log_anti(c, j);
        }
        joint(i, c) = ll;
      }
    }
    return softmax_rows(joint);
  }

  void save_state(nlohmann::json& out) const override {
    out["log_prior"] = vector_to_json(log_prior_);
    out["theta"] = matrix_to_json(theta_);
  }

  static std::unique_ptr<Model> load(LearnerSpec spec, int classes, int feats,
                                     const nlohmann::json& state) {
    return std::make_unique<BernoulliNbModel>(std::move(spec), classes, feats,
                                              vector_from_json(state.at("log_prior")),
                                              matrix_from_json(state.at("theta")));
  }

 private:
  Vector log_prior_;
  Matrix theta_;
};

// ---------------------------------------------------------------------------
// decision tree / random forest
// ---------------------------------------------------------------------------

TreeParams tree_params_from_spec(const LearnerSpec& spec) {
  TreeParams p;
  p.criterion = criterion_from_name(spec.text("criterion", "gini"));
  const std::string splitter = spec.text("splitter", "best");
  if (splitter == "random") {
    p.splitter = Splitter::Random;
  } else if (splitter == "best") {
    p.splitter = Splitter::Best;
  } else {
    throw ConfigError("spec " + spec.id + ": unknown splitter " + splitter);
  }
  p.max_depth = spec.integer("max_depth", -1);
  p.min_samples_leaf = spec.integer("min_samples_leaf", 1);
  p.min_samples_split = spec.integer("min_samples_split", 2);
  p.min_impurity_decrease = spec.number("min_impurity_decrease", 0.0);
  p.max_features = feature_subset_from_name(spec.text("max_features", "none"));
  return p;
}

class DecisionTreeModel final : public Model {
 public:
  DecisionTreeModel(LearnerSpec spec, int classes, int feats, DecisionTree tree)
      : Model(std::move(spec), classes, feats), tree_(std::move(tree)) {}

  static std::unique_ptr<DecisionTreeModel> fit(const LearnerSpec& spec, const Matrix& x,
                                                const std::vector<int>& y, int classes, Rng rng) {
    require_legal_params(spec, {"criterion", "splitter", "max_depth", "min_samples_leaf",
                                "min_samples_split", "max_features", "min_impurity_decrease",
                                "random_state"});
    const TreeParams params = tree_params_from_spec(spec);
    const FeatureBins bins = FeatureBins::build(x);
    DecisionTree tree;
    tree.fit(x, bins, y, classes, params, rng);
    return std::make_unique<DecisionTreeModel>(spec, classes, static_cast<int>(x.cols()),
                                               std::move(tree));
  }

  Matrix predict_proba(const Matrix& features) const override {
    check_features(features);
    return tree_.predict_proba(features);
  }

  const DecisionTree& tree() const { return tree_; }

  void save_state(nlohmann::json& out) const override { out["tree"] = tree_.to_json(); }

  static std::unique_ptr<Model> load(LearnerSpec spec, int classes, int feats,
                                     const nlohmann::json& state) {
    return std::make_unique<DecisionTreeModel>(std::move(spec), classes, feats,
                                               DecisionTree::from_json(state.at("tree"), classes));
  }

 private:
  DecisionTree tree_;
};

class RandomForestModel final : public Model {
 public:
  RandomForestModel(LearnerSpec spec, int classes, int feats, std::vector<DecisionTree> trees)
      : Model(std::move(spec), classes, feats), trees_(std::move(trees)) {}

  static std::unique_ptr<RandomForestModel> fit(const LearnerSpec& spec, const Matrix& x,
                                                const std::vector<int>& y, int classes, Rng rng) {
    require_legal_params(spec, {"n_estimators", "criterion", "max_features", "bootstrap",
                                "max_depth", "min_samples_leaf", "random_state"});
    if (spec.flag("bootstrap", false)) {
      throw ConfigError("spec " + spec.id + ": only bootstrap=false is supported");
    }
    const int n_estimators = spec.integer("n_estimators", 100);
    if (n_estimators < 1) throw ConfigError("spec " + spec.id + ": n_estimators must be >= 1");
    TreeParams params = tree_params_from_spec(spec);
    params.splitter = Splitter::Best;

    const FeatureBins bins = FeatureBins::build(x);
    std::vector<DecisionTree> trees(static_cast<std::size_t>(n_estimators));
    for (int t = 0; t < n_estimators; ++t) {
      Rng tree_rng = rng.spawn(static_cast<std::uint64_t>(t));
      trees[static_cast<std::size_t>(t)].fit(x, bins, y, classes, params, tree_rng);
    }
    return std::make_unique<RandomForestModel>(spec, classes, static_cast<int>(x.cols()),
                                               std::move(trees));
  }

  Matrix predict_proba(const Matrix& features) const override {
    check_features(features);
    Matrix sum = Matrix::Zero(features.rows(), class_count_);
    for (const auto& tree : trees_) sum += tree.predict_proba(features);
    return sum / static_cast<double>(trees_.size());
  }

  void save_state(nlohmann::json& out) const override {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& tree : trees_) arr.push_back(tree.to_json());
    out["trees"] = std::move(arr);
  }

  static std::unique_ptr<Model> load(LearnerSpec spec, int classes, int feats,
                                     const nlohmann::json& state) {
    std::vector<DecisionTree> trees;
    for (const auto& jt : state.at("trees")) trees.push_back(DecisionTree::from_json(jt, classes));
    return std::make_unique<RandomForestModel>(std::move(spec), classes, feats, std::move(trees));
  }

 private:
  std::vector<DecisionTree> trees_;
};

// ---------------------------------------------------------------------------
// gradient boosting
// ---------------------------------------------------------------------------

class GradientBoostingModel final : public Model {
 public:
  GradientBoostingModel(LearnerSpec spec, int classes, int feats, Vector init_score,
                        std::vector<std::vector<RegressionTree>> stages, double learning_rate,
                        std::vector<double> loss_curve)
      : Model(std::move(spec), classes, feats),
        init_score_(std::move(init_score)),
        stages_(std::move(stages)),
        learning_rate_(learning_rate),
        loss_curve_(std::move(loss_curve)) {}

  static constexpr double kLearningRate = 0.1;
  static constexpr int kTreeDepth = 3;

  static std::unique_ptr<GradientBoostingModel> fit(const LearnerSpec& spec, const Matrix& x,
                                                    const std::vector<int>& y, int classes,
                                                    Rng rng) {
    require_legal_params(spec, {"n_estimators", "loss", "criterion", "min_samples_split",
                                "min_impurity_decrease", "random_state"});
    if (spec.text("loss", "log_loss") != "log_loss") {
      throw ConfigError("spec " + spec.id + ": only loss=log_loss is supported");
    }
    const std::string criterion = spec.text("criterion", "friedman_mse");
    if (criterion != "friedman_mse" && criterion != "squared_error") {
      throw ConfigError("spec " + spec.id + ": unknown criterion " + criterion);
    }
    const int n_estimators = spec.integer("n_estimators", 100);
    TreeParams params;
    params.friedman_score = criterion == "friedman_mse";
    params.max_depth = kTreeDepth;
    params.min_samples_split = spec.integer("min_samples_split", 2);
    params.min_impurity_decrease = spec.number("min_impurity_decrease", 0.0);

    const int n = static_cast<int>(x.rows());
    Matrix onehot = Matrix::Zero(n, classes);
    for (int i = 0; i < n; ++i) onehot(i, y[static_cast<std::size_t>(i)]) = 1.0;

    Vector init_score(classes);
    for (int c = 0; c < classes; ++c) {
      init_score(c) = std::log(onehot.col(c).sum() / static_cast<double>(n));
    }

    Matrix raw = init_score.transpose().replicate(n, 1);
    const FeatureBins bins = FeatureBins::build(x);

    std::vector<std::vector<RegressionTree>> stages;
    std::vector<double> loss_curve;
    std::vector<std::vector<int>> leaf_rows;

    Matrix proba = softmax_rows(raw);
    loss_curve.push_back(log_loss(proba, y));

    for (int m = 0; m < n_estimators; ++m) {
      const Matrix residual = gb_negative_gradient(onehot, proba);
      std::vector<RegressionTree> stage(static_cast<std::size_t>(classes));
      for (int c = 0; c < classes; ++c) {
        RegressionTree& tree = stage[static_cast<std::size_t>(c)];
        const Vector target = residual.col(c);
        tree.fit(x, bins, target, params, rng);

        // Newton leaf update for multiclass log-loss.
        leaf_rows.assign(tree.nodes().size(), {});
        for (int i = 0; i < n; ++i) {
          leaf_rows[static_cast<std::size_t>(tree.apply(x.row(i)))].push_back(i);
        }
        const double k_factor =
            (static_cast<double>(classes) - 1.0) / static_cast<double>(classes);
        for (std::size_t leaf = 0; leaf < leaf_rows.size(); ++leaf) {
          if (tree.nodes()[leaf].feature >= 0 || leaf_rows[leaf].empty()) continue;
          double numerator = 0.0, denominator = 0.0;
          for (int i : leaf_rows[leaf]) {
            numerator += residual(i, c);
            denominator += proba(i, c) * (1.0 - proba(i, c));
          }
          const double value =
              denominator < 1e-150 ? 0.0 : k_factor * numerator / denominator;
          tree.set_leaf_value(static_cast<int>(leaf), value);
        }
        for (int i = 0; i < n; ++i) {
          raw(i, c) += kLearningRate * tree.predict_one(x.row(i));
        }
      }
      stages.push_back(std::move(stage));
      proba = softmax_rows(raw);
      loss_curve.push_back(log_loss(proba, y));
      if (loss_curve.back() < 1e-10) break;  // training loss converged
    }
    return std::make_unique<GradientBoostingModel>(spec, classes, static_cast<int>(x.cols()),
                                                   std::move(init_score), std::move(stages),
                                                   kLearningRate, std::move(loss_curve));
  }

  Matrix predict_proba(const Matrix& features) const override {
    check_features(features);
    Matrix raw = init_score_.transpose().replicate(features.rows(), 1);
    for (const auto& stage : stages_) {
      for (int c = 0; c < class_count_; ++c) {
        for (Eigen::Index i = 0; i < features.rows(); ++i) {
          raw(i, c) += learning_rate_ * stage[static_cast<std::size_t>(c)].predict_one(features.row(i));
        }
      }
    }
    return softmax_rows(raw);
  }

  std::vector<double> training_curve() const override { return loss_curve_; }

  void save_state(nlohmann::json& out) const override {
    out["init_score"] = vector_to_json(init_score_);
    out["learning_rate"] = learning_rate_;
    nlohmann::json stages = nlohmann::json::array();
    for (const auto& stage : stages_) {
      nlohmann::json per_class = nlohmann::json::array();
      for (const auto& tree : stage) per_class.push_back(tree.to_json());
      stages.push_back(std::move(per_class));
    }
    out["stages"] = std::move(stages);
  }

  static std::unique_ptr<Model> load(LearnerSpec spec, int classes, int feats,
                                     const nlohmann::json& state) {
    std::vector<std::vector<RegressionTree>> stages;
    for (const auto& js : state.at("stages")) {
      std::vector<RegressionTree> stage;
      for (const auto& jt : js) stage.push_back(RegressionTree::from_json(jt));
      stages.push_back(std::move(stage));
    }
    return std::make_unique<GradientBoostingModel>(
        std::move(spec), classes, feats, vector_from_json(state.at("init_score")),
        std::move(stages), state.at("learning_rate").get<double>(), std::vector<double>{});
  }

 private:
  static double log_loss(const Matrix& proba, const std::vector<int>& y) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < proba.rows(); ++i) {
      sum -= std::log(std::max(proba(i, y[static_cast<std::size_t>(i)]), 1e-15));
    }
    return sum / static_cast<double>(proba.rows());
  }

  Vector init_score_;
  std::vector<std::vector<RegressionTree>> stages_;
  double learning_rate_;
  std::vector<double> loss_curve_;
};

// ---------------------------------------------------------------------------
// AdaBoost (SAMME / SAMME.R over depth-1 trees)
// ---------------------------------------------------------------------------

class AdaBoostModel final : public Model {
 public:
  AdaBoostModel(LearnerSpec spec, int classes, int feats, bool real_variant,
                std::vector<DecisionTree> stumps, std::vector<double> alphas, double learning_rate,
                std::vector<double> weight_sums, Vector prior)
      : Model(std::move(spec), classes, feats),
        real_variant_(real_variant),
        stumps_(std::move(stumps)),
        alphas_(std::move(alphas)),
        learning_rate_(learning_rate),
        weight_sums_(std::move(weight_sums)),
        prior_(std::move(prior)) {}

  static std::unique_ptr<AdaBoostModel> fit(const LearnerSpec& spec, const Matrix& x,
                                            const std::vector<int>& y, int classes, Rng rng) {
    require_legal_params(spec, {"n_estimators", "algorithm", "learning_rate", "random_state"});
    const std::string algorithm = spec.text("algorithm", "SAMME.R");
    if (algorithm != "SAMME" && algorithm != "SAMME.R") {
      throw ConfigError("spec " + spec.id + ": algorithm must be SAMME or SAMME.R");
    }
    const bool real_variant = algorithm == "SAMME.R";
    const int n_estimators = spec.integer("n_estimators", 50);
    const double lr = spec.number("learning_rate", 1.0);
    if (lr <= 0.0) throw ConfigError("spec " + spec.id + ": learning_rate must be > 0");

    const int n = static_cast<int>(x.rows());
    const FeatureBins bins = FeatureBins::build(x);
    TreeParams params;
    params.max_depth = 1;

    Vector w = Vector::Constant(n, 1.0 / n);
    std::vector<DecisionTree> stumps;
    std::vector<double> alphas;
    std::vector<double> weight_sums;
    Vector prior = Vector::Zero(classes);
    for (int i = 0; i < n; ++i) prior(y[static_cast<std::size_t>(i)]) += 1.0 / n;

    for (int m = 0; m < n_estimators; ++m) {
      DecisionTree stump;
      stump.fit(x, bins, y, classes, params, rng, &w);

      if (real_variant) {
        // SAMME.R: stage scoring from clipped class-probability estimates.
        const Matrix p = stump.predict_proba(x).cwiseMax(1e-10);
        const double k_factor = (classes - 1.0) / static_cast<double>(classes);
        for (int i = 0; i < n; ++i) {
          double coded_log = 0.0;
          for (int c = 0; c < classes; ++c) {
            const double code = c == y[static_cast<std::size_t>(i)]
                                    ? 1.0
                                    : -1.0 / (classes - 1.0);
            coded_log += code * std::log(p(i, c));
          }
          w(i) *= std::exp(-lr * k_factor * coded_log);
        }
        stumps.push_back(std::move(stump));
        alphas.push_back(1.0);
      } else {
        double eps = 0.0;
        for (int i = 0; i < n; ++i) {
          if (argmax(stump.predict_proba(x.row(i)).row(0)) != y[static_cast<std::size_t>(i)]) {
            eps += w(i);
          }
        }
        const double limit = 1.0 - 1.0 / classes;
        if (eps >= limit) break;  // weak-learner condition failed, keep prior stages
        double alpha;
        if (eps <= 0.0) {
          // Perfect stump: cap the stage weight and stop boosting.
          alpha = lr * (std::log(1e12) + std::log(classes - 1.0));
          stumps.push_back(std::move(stump));
          alphas.push_back(alpha);
          w /= w.sum();
          weight_sums.push_back(w.sum());
          break;
        }
        alpha = lr * samme_update(eps, classes);
        for (int i = 0; i < n; ++i) {
          if (argmax(stump.predict_proba(x.row(i)).row(0)) != y[static_cast<std::size_t>(i)]) {
            w(i) *= std::exp(alpha);
          }
        }
        stumps.push_back(std::move(stump));
        alphas.push_back(alpha);
      }
      w /= w.sum();
      weight_sums.push_back(w.sum());
    }
    return std::make_unique<AdaBoostModel>(spec, classes, static_cast<int>(x.cols()), real_variant,
                                           std::move(stumps), std::move(alphas), lr,
                                           std::move(weight_sums), std::move(prior));
  }

  Matrix predict_proba(const Matrix& features) const override {
    check_features(features);
    if (stumps_.empty()) return prior_.transpose().replicate(features.rows(), 1);
    Matrix score = Matrix::Zero(features.rows(), class_count_);
    if (real_variant_) {
      for (const auto& stump : stumps_) {
        const Matrix p = stump.predict_proba(features).cwiseMax(1e-10);
        const Matrix logp = p.array().log().matrix();
        const Vector row_mean = logp.rowwise().mean();
        score += learning_rate_ * (class_count_ - 1.0) *
                 (logp - row_mean.replicate(1, class_count_));
      }
    } else {
      for (std::size_t m = 0; m < stumps_.size(); ++m) {
        const Matrix p = stumps_[m].predict_proba(features);
        for (Eigen::Index i = 0; i < features.rows(); ++i) {
          score(i, argmax(p.row(i))) += alphas_[m];
        }
      }
    }
    return softmax_rows(score / (class_count_ - 1.0));
  }

  std::vector<double> training_curve() const override { return weight_sums_; }

  void save_state(nlohmann::json& out) const override {
    out["real_variant"] = real_variant_;
    out["alphas"] = alphas_;
    out["prior"] = vector_to_json(prior_);
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& stump : stumps_) arr.push_back(stump.to_json());
    out["stumps"] = std::move(arr);
  }

  static std::unique_ptr<Model> load(LearnerSpec spec, int classes, int feats,
                                     const nlohmann::json& state) {
    std::vector<DecisionTree> stumps;
    for (const auto& jt : state.at("stumps")) {
      stumps.push_back(DecisionTree::from_json(jt, classes));
    }
    const double lr = spec.number("learning_rate", 1.0);
    return std::make_unique<AdaBoostModel>(
        std::move(spec), classes, feats, state.at("real_variant").get<bool>(), std::move(stumps),
        state.at("alphas").get<std::vector<double>>(), lr, std::vector<double>{},
        vector_from_json(state.at("prior")));
  }

 private:
  bool real_variant_;
  std::vector<DecisionTree> stumps_;
  std::vector<double> alphas_;
  double learning_rate_;
  std::vector<double> weight_sums_;
  Vector prior_;
};

// ---------------------------------------------------------------------------
// linear SVC
// ---------------------------------------------------------------------------

class LinearSvcModel final : public Model {
 public:
  LinearSvcModel(LearnerSpec spec, int classes, int feats, OvoSvmResult svm)
      : Model(std::move(spec), classes, feats), svm_(std::move(svm)) {}

  static std::unique_ptr<LinearSvcModel> fit(const LearnerSpec& spec, const Matrix& x,
                                             const std::vector<int>& y, int classes, Rng rng) {
    require_legal_params(spec, {"probability", "C", "kernel", "max_iter", "random_state"});
    if (spec.text("kernel", "linear") != "linear") {
      throw ConfigError("spec " + spec.id + ": only kernel=linear is supported");
    }
    const double c = spec.number("C", 1.0);
    if (c <= 0.0) throw ConfigError("spec " + spec.id + ": C must be > 0");
    const int max_iter = spec.integer("max_iter", 1000);
    // One-vs-one pairwise machines: one-vs-rest hyperplanes cannot represent
    // classes that occupy a middle band of a feature's range, pairwise ones
    // can.
    OvoSvmResult svm = fit_ovo_linear_svc(x, y, classes, c, max_iter, rng);
    return std::make_unique<LinearSvcModel>(spec, classes, static_cast<int>(x.cols()),
                                            std::move(svm));
  }

  Matrix predict_proba(const Matrix& features) const override {
    check_features(features);
    return ovo_class_probabilities(features, svm_, class_count_);
  }

  void save_state(nlohmann::json& out) const override {
    out["weights"] = matrix_to_json(svm_.weights);
    out["bias"] = vector_to_json(svm_.bias);
  }

  static std::unique_ptr<Model> load(LearnerSpec spec, int classes, int feats,
                                     const nlohmann::json& state) {
    OvoSvmResult svm;
    svm.weights = matrix_from_json(state.at("weights"));
    svm.bias = vector_from_json(state.at("bias"));
    for (int a = 0; a < classes; ++a) {
      for (int b = a + 1; b < classes; ++b) svm.pairs.emplace_back(a, b);
    }
    if (svm.weights.cols() != static_cast<Eigen::Index>(svm.pairs.size())) {
      throw DataError("linear_svc model: pair count mismatch");
    }
    return std::make_unique<LinearSvcModel>(std::move(spec), classes, feats, std::move(svm));
  }

 private:
  OvoSvmResult svm_;
};

// ---------------------------------------------------------------------------
// MLP
// ---------------------------------------------------------------------------

class MlpModel final : public Model {
 public:
  MlpModel(LearnerSpec spec, int classes, int feats, MlpState net, std::vector<double> losses)
      : Model(std::move(spec), classes, feats),
        net_(std::move(net)),
        epoch_losses_(std::move(losses)) {}

  static std::unique_ptr<MlpModel> fit(const LearnerSpec& spec, const Matrix& x,
                                       const std::vector<int>& y, int classes, Rng rng) {
    require_legal_params(spec, {"max_iter", "hidden_layer_sizes", "learning_rate",
                                "learning_rate_init", "batch_size", "random_state"});
    MlpTrainConfig cfg;
    cfg.hidden = spec.int_list("hidden_layer_sizes", {100, 100});
    cfg.max_iter = spec.integer("max_iter", 200);
    cfg.learning_rate_init = spec.number("learning_rate_init", 0.05);
    cfg.batch_size = spec.integer("batch_size", 200);
    const std::string schedule = spec.text("learning_rate", "adaptive");
    if (schedule == "adaptive") {
      cfg.schedule = MlpSchedule::Adaptive;
    } else if (schedule == "invscaling") {
      cfg.schedule = MlpSchedule::InvScaling;
    } else {
      throw ConfigError("spec " + spec.id + ": learning_rate must be adaptive or invscaling");
    }
    MlpFitResult res = fit_mlp(x, y, classes, cfg, rng);
    return std::make_unique<MlpModel>(spec, classes, static_cast<int>(x.cols()),
                                      std::move(res.net), std::move(res.epoch_losses));
  }

  Matrix predict_proba(const Matrix& features) const override {
    check_features(features);
    return mlp_forward(net_, features);
  }

  std::vector<double> training_curve() const override { return epoch_losses_; }

  void save_state(nlohmann::json& out) const override {
    nlohmann::json ws = nlohmann::json::array();
    nlohmann::json bs = nlohmann::json::array();
    for (const auto& w : net_.weights) ws.push_back(matrix_to_json(w));
    for (const auto& b : net_.biases) bs.push_back(vector_to_json(b));
    out["weights"] = std::move(ws);
    out["biases"] = std::move(bs);
  }

  static std::unique_ptr<Model> load(LearnerSpec spec, int classes, int feats,
                                     const nlohmann::json& state) {
    MlpState net;
    for (const auto& jw : state.at("weights")) net.weights.push_back(matrix_from_json(jw));
    for (const auto& jb : state.at("biases")) net.biases.push_back(vector_from_json(jb));
    return std::make_unique<MlpModel>(std::move(spec), classes, feats, std::move(net),
                                      std::vector<double>{});
  }

 private:
  MlpState net_;
  std::vector<double> epoch_losses_;
};

}  // namespace

// ---------------------------------------------------------------------------
// factory + persistence
// ---------------------------------------------------------------------------

std::unique_ptr<Model> fit(const LearnerSpec& spec, const Matrix& features,
                           const std::vector<int>& labels, int class_count, std::uint64_t seed) {
  if (features.rows() == 0 || features.cols() == 0) {
    throw DataError("fit: empty feature matrix");
  }
  if (static_cast<std::size_t>(features.rows()) != labels.size()) {
    throw DataError("fit: feature/label row count mismatch");
  }
  if (!features.allFinite()) throw DataError("fit: non-finite feature value");
  if (class_count < 2) throw DataError("fit: need at least 2 classes");
  std::vector<bool> seen(static_cast<std::size_t>(class_count), false);
  for (int y : labels) {
    if (y < 0 || y >= class_count) throw DataError("fit: label out of range");
    seen[static_cast<std::size_t>(y)] = true;
  }
  int distinct = 0;
  for (bool s : seen) distinct += s ? 1 : 0;
  if (distinct < 2) throw DataError("fit: single-class training data");

  // random_state from the spec folds into the effective stream.
  const std::uint64_t effective =
      seed + static_cast<std::uint64_t>(spec.integer("random_state", 0));
  Rng rng(effective);

  switch (spec.family) {
    case Family::LogisticRegression:
      return LogisticRegressionModel::fit(spec, features, labels, class_count, rng);
    case Family::Knn:
      return KnnModel::fit(spec, features, labels, class_count);
    case Family::GaussianNb:
      return GaussianNbModel::fit(spec, features, labels, class_count);
    case Family::BernoulliNb:
      return BernoulliNbModel::fit(spec, features, labels, class_count);
    case Family::DecisionTree:
      return DecisionTreeModel::fit(spec, features, labels, class_count, rng);
    case Family::RandomForest:
      return RandomForestModel::fit(spec, features, labels, class_count, rng);
    case Family::GradientBoosting:
      return GradientBoostingModel::fit(spec, features, labels, class_count, rng);
    case Family::AdaBoost:
      return AdaBoostModel::fit(spec, features, labels, class_count, rng);
    case Family::LinearSvc:
      return LinearSvcModel::fit(spec, features, labels, class_count, rng);
    case Family::Mlp:
      return MlpModel::fit(spec, features, labels, class_count, rng);
  }
  throw ConfigError("fit: unknown family");
}

std::unique_ptr<Model> model_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "tabens-model") {
    throw DataError("model file: unrecognised format tag");
  }
  if (j.value("format_version", 0) != 1) {
    throw DataError("model file: unsupported format version");
  }
  LearnerSpec spec;
  spec.id = j.at("id").get<std::string>();
  spec.family = family_from_name(j.at("family").get<std::string>());
  spec.params = params_from_json(j.at("params"));
  const int classes = j.at("class_count").get<int>();
  const int feats = j.at("feature_count").get<int>();
  const nlohmann::json& state = j.at("state");

  switch (spec.family) {
    case Family::LogisticRegression:
      return LogisticRegressionModel::load(std::move(spec), classes, feats, state);
    case Family::Knn:
      return KnnModel::load(std::move(spec), classes, feats, state);
    case Family::GaussianNb:
      return GaussianNbModel::load(std::move(spec), classes, feats, state);
    case Family::BernoulliNb:
      return BernoulliNbModel::load(std::move(spec), classes, feats, state);
    case Family::DecisionTree:
      return DecisionTreeModel::load(std::move(spec), classes, feats, state);
    case Family::RandomForest:
      return RandomForestModel::load(std::move(spec), classes, feats, state);
    case Family::GradientBoosting:
      return GradientBoostingModel::load(std::move(spec), classes, feats, state);
    case Family::AdaBoost:
      return AdaBoostModel::load(std::move(spec), classes, feats, state);
    case Family::LinearSvc:
      return LinearSvcModel::load(std::move(spec), classes, feats, state);
    case Family::Mlp:
      return MlpModel::load(std::move(spec), classes, feats, state);
  }
  throw DataError("model file: unknown family");
}

void save_model(const Model& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write model file: " + path);
  out << model.to_json().dump();
  if (!out) throw DataError("write failed: " + path);
}

std::unique_ptr<Model> load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw DataError("model file " + path + ": " + e.what());
  }
  return model_from_json(j);
}

}  // namespace tabens
