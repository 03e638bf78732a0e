#include "doctest.h"

#include <cmath>

#include "tabens/mlp.hpp"

using namespace tabens;

TEST_CASE("zero-weight net on a balanced 2-class batch starts at ln 2") {
  MlpState net = mlp_zero_init(3, {4}, 2);
  Matrix x(4, 3);
  x << 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 0.1, 0.2;
  Matrix y(4, 2);
  y << 1, 0, 0, 1, 1, 0, 0, 1;
  CHECK(mlp_loss(net, x, y) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("learning rate zero leaves the state unchanged") {
  Rng rng(1);
  MlpState net = mlp_init(3, {5}, 2, rng);
  const MlpState before = net;
  Matrix x(2, 3);
  x << 0.3, 0.1, 0.7, 0.9, 0.2, 0.4;
  Matrix y(2, 2);
  y << 1, 0, 0, 1;
  const double loss = mlp_backprop_step(net, x, y, 0.0);
  CHECK(loss > 0.0);
  for (int l = 0; l < net.layer_count(); ++l) {
    CHECK(net.weights[static_cast<std::size_t>(l)] == before.weights[static_cast<std::size_t>(l)]);
    CHECK(net.biases[static_cast<std::size_t>(l)] == before.biases[static_cast<std::size_t>(l)]);
  }
}

TEST_CASE("analytic gradients match central finite differences") {
  Rng rng(12);
  MlpState net = mlp_init(4, {6, 5}, 3, rng);
  Matrix x(8, 4);
  Matrix y = Matrix::Zero(8, 3);
  // Redraw until every ReLU pre-activation clears a margin wide enough that
  // the finite-difference window cannot flip an activation.
  for (int attempt = 0; attempt < 100; ++attempt) {
    for (int i = 0; i < 8; ++i) {
      for (int j = 0; j < 4; ++j) x(i, j) = rng.uniform(-1.0, 1.0);
      y.row(i).setZero();
      y(i, rng.below(3)) = 1.0;
    }
    Matrix z = x * net.weights[0];
    z.rowwise() += net.biases[0].transpose();
    Matrix h = z.cwiseMax(0.0);
    Matrix z2 = h * net.weights[1];
    z2.rowwise() += net.biases[1].transpose();
    if (z.cwiseAbs().minCoeff() > 1e-3 && z2.cwiseAbs().minCoeff() > 1e-3) break;
  }
  const auto [loss, grads] = mlp_loss_and_gradients(net, x, y);
  CHECK(std::isfinite(loss));

  const double eps = 1e-5;
  double max_rel = 0.0;
  for (int l = 0; l < net.layer_count(); ++l) {
    auto& w = net.weights[static_cast<std::size_t>(l)];
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) {
        const double keep = w(r, c);
        w(r, c) = keep + eps;
        const double up = mlp_loss(net, x, y);
        w(r, c) = keep - eps;
        const double down = mlp_loss(net, x, y);
        w(r, c) = keep;
        const double fd = (up - down) / (2.0 * eps);
        const double an = grads.weights[static_cast<std::size_t>(l)](r, c);
        const double rel = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-8});
        max_rel = std::max(max_rel, rel);
      }
    }
  }
  CHECK(max_rel < 1e-4);
}

TEST_CASE("training drives the loss down on separable data") {
  Rng rng(77);
  Matrix x(60, 2);
  std::vector<int> y;
  for (int i = 0; i < 60; ++i) {
    const int c = i % 2;
    x(i, 0) = (c == 0 ? 0.25 : 0.75) + rng.normal() * 0.05;
    x(i, 1) = (c == 0 ? 0.75 : 0.25) + rng.normal() * 0.05;
    y.push_back(c);
  }
  MlpTrainConfig cfg;
  cfg.hidden = {8};
  cfg.max_iter = 200;
  cfg.learning_rate_init = 0.5;
  Rng fit_rng(3);
  const MlpFitResult res = fit_mlp(x, y, 2, cfg, fit_rng);
  REQUIRE(!res.epoch_losses.empty());
  CHECK(res.epoch_losses.back() < 0.1);

  const Matrix proba = mlp_forward(res.net, x);
  int correct = 0;
  for (int i = 0; i < 60; ++i) {
    correct += argmax(proba.row(i)) == y[static_cast<std::size_t>(i)] ? 1 : 0;
  }
  CHECK(correct == 60);
}

TEST_CASE("invscaling uses rate / sqrt(epoch) and still converges") {
  Rng rng(78);
  Matrix x(40, 2);
  std::vector<int> y;
  for (int i = 0; i < 40; ++i) {
    const int c = i % 2;
    x(i, 0) = (c == 0 ? 0.2 : 0.8) + rng.normal() * 0.04;
    x(i, 1) = rng.uniform();
    y.push_back(c);
  }
  MlpTrainConfig cfg;
  cfg.hidden = {8};
  cfg.max_iter = 300;
  cfg.schedule = MlpSchedule::InvScaling;
  cfg.learning_rate_init = 1.0;
  Rng fit_rng(4);
  const MlpFitResult res = fit_mlp(x, y, 2, cfg, fit_rng);
  CHECK(res.epoch_losses.back() < 0.3);
  CHECK(res.final_learning_rate < cfg.learning_rate_init);
}
