#include "doctest.h"

#include <cmath>
#include <filesystem>

#include "tabens/learners.hpp"

using namespace tabens;

namespace {

LearnerSpec spec_of(Family family, const std::string& id,
                    std::map<std::string, ParamValue> params = {}) {
  LearnerSpec s;
  s.id = id;
  s.family = family;
  s.params = std::move(params);
  return s;
}

// 4-row, 2-class, linearly separable toy set.
void separable_toy(Matrix& x, std::vector<int>& y) {
  x.resize(4, 2);
  x << 0.0, 0.1, 0.1, 0.0, 1.0, 0.9, 0.9, 1.0;
  y = {0, 0, 1, 1};
}

// Bigger separable blob set for the iterative families.
void separable_blobs(Matrix& x, std::vector<int>& y, int per_class = 30) {
  Rng rng(202);
  x.resize(2 * per_class, 2);
  y.clear();
  for (int i = 0; i < per_class; ++i) {
    x(i, 0) = 0.2 + rng.normal() * 0.05;
    x(i, 1) = 0.2 + rng.normal() * 0.05;
    y.push_back(0);
  }
  for (int i = 0; i < per_class; ++i) {
    x(per_class + i, 0) = 0.8 + rng.normal() * 0.05;
    x(per_class + i, 1) = 0.8 + rng.normal() * 0.05;
    y.push_back(1);
  }
}

double training_accuracy(const Model& model, const Matrix& x, const std::vector<int>& y) {
  const auto pred = model.predict(x);
  int correct = 0;
  for (std::size_t i = 0; i < y.size(); ++i) correct += pred[i] == y[i] ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(y.size());
}

const std::vector<LearnerSpec>& all_family_specs() {
  static const std::vector<LearnerSpec> specs = {
      spec_of(Family::LogisticRegression, "lr", {{"penalty", std::string("l2")}, {"C", 1.0}}),
      spec_of(Family::Knn, "knn", {{"n_neighbors", 3.0}}),
      spec_of(Family::GaussianNb, "gnb"),
      spec_of(Family::BernoulliNb, "bnb"),
      spec_of(Family::DecisionTree, "dt", {{"criterion", std::string("gini")}}),
      spec_of(Family::RandomForest, "rf",
              {{"n_estimators", 20.0}, {"max_features", std::string("sqrt")}}),
      spec_of(Family::GradientBoosting, "gb", {{"n_estimators", 30.0}}),
      spec_of(Family::AdaBoost, "ada",
              {{"n_estimators", 20.0}, {"algorithm", std::string("SAMME")}}),
      spec_of(Family::LinearSvc, "svc", {{"C", 1.0}}),
      spec_of(Family::Mlp, "mlp",
              {{"hidden_layer_sizes", std::vector<double>{16.0}}, {"max_iter", 200.0}}),
  };
  return specs;
}

}  // namespace

TEST_CASE("every family fits the separable toy set perfectly") {
  Matrix x;
  std::vector<int> y;
  separable_blobs(x, y);
  for (const auto& spec : all_family_specs()) {
    CAPTURE(spec.id);
    const auto model = fit(spec, x, y, 2, 0);
    CHECK(training_accuracy(*model, x, y) == doctest::Approx(1.0));
  }
}

TEST_CASE("probability rows are stochastic for every family") {
  Rng rng(31);
  Matrix x(60, 3);
  std::vector<int> y;
  for (int i = 0; i < 60; ++i) {
    for (int j = 0; j < 3; ++j) x(i, j) = rng.uniform();
    y.push_back(rng.below(3));
  }
  Matrix queries(20, 3);
  for (int i = 0; i < 20; ++i) {
    for (int j = 0; j < 3; ++j) queries(i, j) = rng.uniform(-0.2, 1.2);
  }
  for (const auto& spec : all_family_specs()) {
    CAPTURE(spec.id);
    const auto model = fit(spec, x, y, 3, 1);
    const Matrix proba = model->predict_proba(queries);
    for (Eigen::Index i = 0; i < proba.rows(); ++i) {
      CHECK(proba.row(i).minCoeff() >= 0.0);
      CHECK(std::abs(proba.row(i).sum() - 1.0) <= 1e-9);
    }
  }
}

TEST_CASE("fit twice gives identical predictions") {
  Rng rng(37);
  Matrix x(80, 4);
  std::vector<int> y;
  for (int i = 0; i < 80; ++i) {
    for (int j = 0; j < 4; ++j) x(i, j) = rng.uniform();
    y.push_back(rng.below(3));
  }
  for (const auto& spec : all_family_specs()) {
    CAPTURE(spec.id);
    const auto a = fit(spec, x, y, 3, 5);
    const auto b = fit(spec, x, y, 3, 5);
    CHECK(a->predict_proba(x) == b->predict_proba(x));
    CHECK(a->predict(x) == b->predict(x));
  }
}

TEST_CASE("fit rejects bad inputs") {
  Matrix x(4, 2);
  x << 0, 0, 1, 1, 2, 2, 3, 3;
  const auto spec = spec_of(Family::GaussianNb, "gnb");
  CHECK_THROWS_AS(fit(spec, x, {0, 0, 0, 0}, 2, 0), DataError);  // single class
  Matrix bad = x;
  bad(1, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(fit(spec, bad, {0, 0, 1, 1}, 2, 0), DataError);
  const auto unknown = spec_of(Family::GaussianNb, "gnb", {{"bogus", 1.0}});
  CHECK_THROWS_AS(fit(unknown, x, {0, 0, 1, 1}, 2, 0), ConfigError);
}

TEST_CASE("1-NN retrieves stored points and their labels") {
  Matrix x(3, 1);
  x << 0, 5, 10;
  const auto model = fit(spec_of(Family::Knn, "k1", {{"n_neighbors", 1.0}}), x, {0, 1, 0}, 2, 0);
  CHECK(model->predict(x) == std::vector<int>{0, 1, 0});

  Matrix q(1, 1);
  q << 1.0;  // nearest stored point is 0 -> class 0
  CHECK(model->predict(q) == std::vector<int>{0});
}

TEST_CASE("knn vote fractions become probabilities") {
  Matrix x(4, 1);
  x << 0, 1, 2, 50;
  const auto model =
      fit(spec_of(Family::Knn, "k4", {{"n_neighbors", 4.0}}), x, {0, 0, 0, 1}, 2, 0);
  Matrix q(1, 1);
  q << 1.0;
  const Matrix proba = model->predict_proba(q);
  CHECK(proba(0, 0) == doctest::Approx(0.75));
  CHECK(proba(0, 1) == doctest::Approx(0.25));
}

TEST_CASE("knn distance metrics") {
  Vector a(2), b(2);
  a << 0, 0;
  b << 3, 4;
  CHECK(knn_distance(a, b, KnnMetric::Euclidean, 2.0) == doctest::Approx(5.0));
  CHECK(knn_distance(a, b, KnnMetric::Manhattan, 2.0) == doctest::Approx(7.0));

  Vector u(2), v(2);
  u << 1, 0;
  v << 0, 1;
  CHECK(knn_distance(u, v, KnnMetric::Cosine, 2.0) == doctest::Approx(1.0));

  Vector z(2), w(2);
  z << 0, 0;
  w << 1, 1;
  CHECK(knn_distance(z, w, KnnMetric::Minkowski, 7.0) ==
        doctest::Approx(std::pow(2.0, 1.0 / 7.0)));

  bool zero_hit = false;
  CHECK(knn_distance(z, w, KnnMetric::Cosine, 2.0, &zero_hit) == doctest::Approx(1.0));
  CHECK(zero_hit);
}

TEST_CASE("gaussian nb closed-form moments") {
  Matrix x(4, 1);
  x << 0, 2, 10, 12;
  const auto model = fit(spec_of(Family::GaussianNb, "gnb"), x, {0, 0, 1, 1}, 2, 0);
  // mu_A=1, mu_B=11, sigma^2=1 for both: the midpoint splits evenly.
  Matrix mid(1, 1);
  mid << 6.0;
  const Matrix proba = model->predict_proba(mid);
  CHECK(proba(0, 0) == doctest::Approx(0.5).epsilon(1e-6));
  Matrix near_a(1, 1);
  near_a << 1.0;
  CHECK(model->predict(near_a) == std::vector<int>{0});
}

TEST_CASE("bernoulli nb thresholds at 0.5 with laplace smoothing") {
  Matrix x(4, 2);
  x << 1, 0, 0.9, 0.1, 0, 1, 0.2, 0.8;
  const auto model = fit(spec_of(Family::BernoulliNb, "bnb"), x, {0, 0, 1, 1}, 2, 0);
  Matrix q(2, 2);
  q << 1, 0, 0, 1;
  CHECK(model->predict(q) == std::vector<int>{0, 1});
}

TEST_CASE("samme update closed forms") {
  CHECK(samme_update(0.5, 2) == doctest::Approx(0.0));
  CHECK(samme_update(0.1, 2) == doctest::Approx(std::log(9.0)));
  CHECK(samme_update(0.5, 3) == doctest::Approx(std::log(2.0)));
  CHECK_THROWS_AS(samme_update(0.6, 2), NumericError);
  CHECK_THROWS_AS(samme_update(0.0, 2), NumericError);
}

TEST_CASE("gb negative gradient is onehot minus probability") {
  Matrix y(2, 3), p(2, 3);
  y << 1, 0, 0, 0, 1, 0;
  p << 1, 0, 0, 0.5, 0.25, 0.25;
  const Matrix r = gb_negative_gradient(y, p);
  CHECK(r(0, 0) == 0.0);
  CHECK(r(0, 1) == 0.0);
  CHECK(r(1, 0) == doctest::Approx(-0.5));
  CHECK(r(1, 1) == doctest::Approx(0.75));
  // Rows sum to zero because both operands sum to one.
  CHECK(r.row(0).sum() == doctest::Approx(0.0));
  CHECK(r.row(1).sum() == doctest::Approx(0.0));

  Matrix bad(1, 2);
  CHECK_THROWS_AS(gb_negative_gradient(y, bad), DataError);
}

TEST_CASE("gradient boosting training loss never increases") {
  Rng rng(41);
  Matrix x(120, 3);
  std::vector<int> y;
  for (int i = 0; i < 120; ++i) {
    for (int j = 0; j < 3; ++j) x(i, j) = rng.uniform();
    y.push_back(x(i, 0) + 0.3 * x(i, 1) > 0.6 ? (x(i, 2) > 0.5 ? 2 : 1) : 0);
  }
  const auto model = fit(spec_of(Family::GradientBoosting, "gb", {{"n_estimators", 40.0}}), x, y,
                         3, 0);
  const auto curve = model->training_curve();
  REQUIRE(curve.size() >= 2);
  for (std::size_t i = 1; i < curve.size(); ++i) {
    CHECK(curve[i] <= curve[i - 1] + 1e-12);
  }
}

TEST_CASE("adaboost sample weights stay normalized") {
  Rng rng(43);
  Matrix x(100, 2);
  std::vector<int> y;
  for (int i = 0; i < 100; ++i) {
    x(i, 0) = rng.uniform();
    x(i, 1) = rng.uniform();
    y.push_back(x(i, 0) + 0.2 * rng.normal() > 0.5 ? 1 : 0);
  }
  for (const char* algorithm : {"SAMME", "SAMME.R"}) {
    const auto model = fit(spec_of(Family::AdaBoost, "ada",
                                   {{"n_estimators", 25.0},
                                    {"algorithm", std::string(algorithm)},
                                    {"learning_rate", 2.0}}),
                           x, y, 2, 0);
    const auto sums = model->training_curve();
    REQUIRE(!sums.empty());
    for (double s : sums) CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("adaboost learning_rate scales the stage weight") {
  // One stump on clean data: alpha capped, prediction still follows it.
  Matrix x;
  std::vector<int> y;
  separable_blobs(x, y, 20);
  const auto model = fit(spec_of(Family::AdaBoost, "ada1",
                                 {{"n_estimators", 5.0},
                                  {"algorithm", std::string("SAMME")},
                                  {"learning_rate", 2.0}}),
                         x, y, 2, 0);
  CHECK(training_accuracy(*model, x, y) == doctest::Approx(1.0));
}

TEST_CASE("linear svc separates with a margin and softmax probabilities") {
  Matrix x;
  std::vector<int> y;
  separable_blobs(x, y);
  const auto model = fit(spec_of(Family::LinearSvc, "svc", {{"C", 1.0}}), x, y, 2, 0);
  CHECK(training_accuracy(*model, x, y) == doctest::Approx(1.0));
  const Matrix proba = model->predict_proba(x);
  for (Eigen::Index i = 0; i < proba.rows(); ++i) {
    CHECK(std::abs(proba.row(i).sum() - 1.0) <= 1e-9);
    CHECK(argmax(proba.row(i)) == y[static_cast<std::size_t>(i)]);
  }
}

TEST_CASE("logistic regression modes: multinomial, ovr, penalty none") {
  Matrix x;
  std::vector<int> y;
  separable_blobs(x, y);
  for (const auto& params : std::vector<std::map<std::string, ParamValue>>{
           {{"penalty", std::string("l2")}, {"C", 0.5}},
           {{"penalty", std::string("l2")}, {"C", 1.0}, {"multi_class", std::string("ovr")}},
           {{"penalty", std::string("none")}},
       }) {
    const auto model = fit(spec_of(Family::LogisticRegression, "lr", params), x, y, 2, 0);
    CHECK(training_accuracy(*model, x, y) == doctest::Approx(1.0));
  }
}

TEST_CASE("rf bootstrap=true is rejected, false accepted") {
  Matrix x;
  std::vector<int> y;
  separable_toy(x, y);
  CHECK_THROWS_AS(fit(spec_of(Family::RandomForest, "rf",
                              {{"n_estimators", 5.0}, {"bootstrap", true}}),
                      x, y, 2, 0),
                  ConfigError);
  const auto ok = fit(spec_of(Family::RandomForest, "rf",
                              {{"n_estimators", 5.0}, {"bootstrap", false}}),
                      x, y, 2, 0);
  CHECK(ok->predict(x) == y);
}

TEST_CASE("model persistence round-trips predictions bit-exactly") {
  Rng rng(47);
  Matrix x(50, 3);
  std::vector<int> y;
  for (int i = 0; i < 50; ++i) {
    for (int j = 0; j < 3; ++j) x(i, j) = rng.uniform();
    y.push_back(rng.below(3));
  }
  Matrix queries(25, 3);
  for (int i = 0; i < 25; ++i) {
    for (int j = 0; j < 3; ++j) queries(i, j) = rng.uniform(-0.5, 1.5);
  }
  const auto dir = std::filesystem::temp_directory_path() / "tabens_models";
  std::filesystem::create_directories(dir);
  for (const auto& spec : all_family_specs()) {
    CAPTURE(spec.id);
    const auto model = fit(spec, x, y, 3, 9);
    const auto path = (dir / (spec.id + ".json")).string();
    save_model(*model, path);
    const auto loaded = load_model(path);
    CHECK(loaded->predict_proba(queries) == model->predict_proba(queries));
    CHECK(loaded->predict(queries) == model->predict(queries));
    CHECK(loaded->spec().id == spec.id);
  }
}

TEST_CASE("prediction rejects wrong feature counts") {
  Matrix x;
  std::vector<int> y;
  separable_toy(x, y);
  const auto model = fit(spec_of(Family::GaussianNb, "gnb"), x, y, 2, 0);
  Matrix bad(1, 3);
  bad << 1, 2, 3;
  CHECK_THROWS_AS(model->predict(bad), DataError);
}
