#pragma once

#include "tabens/core.hpp"

namespace tabens {

/// Fully connected net: ReLU hidden layers, softmax output, cross-entropy
/// loss. Plain struct so tests can poke at parameters directly.
struct MlpState {
  std::vector<Matrix> weights;  // layer l: fan_in x fan_out
  std::vector<Vector> biases;

  int layer_count() const { return static_cast<int>(weights.size()); }
  int input_size() const { return static_cast<int>(weights.front().rows()); }
  int output_size() const { return static_cast<int>(weights.back().cols()); }
};

struct MlpGradients {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
};

MlpState mlp_init(int inputs, const std::vector<int>& hidden, int outputs, Rng& rng);
MlpState mlp_zero_init(int inputs, const std::vector<int>& hidden, int outputs);

Matrix mlp_forward(const MlpState& net, const Matrix& features);  // softmax rows

/// Mean cross-entropy of the batch.
double mlp_loss(const MlpState& net, const Matrix& features, const Matrix& labels_onehot);

/// Reverse-accumulation gradients of the mean cross-entropy.
std::pair<double, MlpGradients> mlp_loss_and_gradients(const MlpState& net, const Matrix& features,
                                                       const Matrix& labels_onehot);

/// One gradient-descent update in place; returns the pre-update batch loss.
/// Non-finite loss raises NumericError.
double mlp_backprop_step(MlpState& net, const Matrix& features, const Matrix& labels_onehot,
                         double learning_rate);

enum class MlpSchedule { Adaptive, InvScaling };

struct MlpTrainConfig {
  std::vector<int> hidden{100, 100};
  int max_iter = 200;
  MlpSchedule schedule = MlpSchedule::Adaptive;
  double learning_rate_init = 0.05;
  int batch_size = 200;  // capped at n
  double tol = 1e-4;
  int patience = 10;  // non-improving epochs before stopping
};

struct MlpFitResult {
  MlpState net;
  std::vector<double> epoch_losses;
  int epochs_run = 0;
  double final_learning_rate = 0.0;
};

/// Seeded mini-batch SGD. `adaptive` divides the rate by 5 after 2
/// consecutive epochs improving by < tol and stops once the rate drops
/// below 1e-6; `invscaling` uses rate/sqrt(epoch). Both stop after
/// `patience` consecutive non-improving epochs or max_iter.
MlpFitResult fit_mlp(const Matrix& features, const std::vector<int>& labels, int class_count,
                     const MlpTrainConfig& config, Rng& rng);

}  // namespace tabens
