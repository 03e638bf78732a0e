#include "tabens/mlp.hpp"

#include <cmath>
#include <numeric>

#include "tabens/linear.hpp"

namespace tabens {

MlpState mlp_init(int inputs, const std::vector<int>& hidden, int outputs, Rng& rng) {
  MlpState net;
  int fan_in = inputs;
  for (int width : hidden) {
    net.weights.push_back(glorot_uniform(fan_in, width, fan_in, width, rng));
    net.biases.push_back(Vector::Zero(width));
    fan_in = width;
  }
  net.weights.push_back(glorot_uniform(fan_in, outputs, fan_in, outputs, rng));
  net.biases.push_back(Vector::Zero(outputs));
  return net;
}

MlpState mlp_zero_init(int inputs, const std::vector<int>& hidden, int outputs) {
  MlpState net;
  int fan_in = inputs;
  for (int width : hidden) {
    net.weights.push_back(Matrix::Zero(fan_in, width));
    net.biases.push_back(Vector::Zero(width));
    fan_in = width;
  }
  net.weights.push_back(Matrix::Zero(fan_in, outputs));
  net.biases.push_back(Vector::Zero(outputs));
  return net;
}

namespace {

// Forward pass keeping post-activation values per layer for backprop.
Matrix forward_cached(const MlpState& net, const Matrix& features,
                      std::vector<Matrix>* activations) {
  Matrix h = features;
  if (activations) activations->push_back(h);
  const int layers = net.layer_count();
  for (int l = 0; l < layers; ++l) {
    Matrix z = h * net.weights[static_cast<std::size_t>(l)];
    z.rowwise() += net.biases[static_cast<std::size_t>(l)].transpose();
    if (l + 1 < layers) {
      h = z.cwiseMax(0.0);  // ReLU
      if (activations) activations->push_back(h);
    } else {
      h = softmax_rows(z);
    }
  }
  return h;
}

double cross_entropy(const Matrix& proba, const Matrix& labels_onehot) {
  // Clip keeps the loss finite when a probability underflows to 0.
  const double eps = 1e-12;
  const double total =
      -(labels_onehot.array() * (proba.array() + eps).log()).sum();
  return total / static_cast<double>(proba.rows());
}

}  // namespace

Matrix mlp_forward(const MlpState& net, const Matrix& features) {
  return forward_cached(net, features, nullptr);
}

double mlp_loss(const MlpState& net, const Matrix& features, const Matrix& labels_onehot) {
  return cross_entropy(mlp_forward(net, features), labels_onehot);
}

std::pair<double, MlpGradients> mlp_loss_and_gradients(const MlpState& net, const Matrix& features,
                                                       const Matrix& labels_onehot) {
  const int layers = net.layer_count();
  const double n = static_cast<double>(features.rows());

  std::vector<Matrix> activations;  // inputs to each layer
  activations.reserve(static_cast<std::size_t>(layers));
  const Matrix proba = forward_cached(net, features, &activations);
  const double loss = cross_entropy(proba, labels_onehot);

  MlpGradients grads;
  grads.weights.resize(static_cast<std::size_t>(layers));
  grads.biases.resize(static_cast<std::size_t>(layers));

  // Softmax + cross-entropy collapses to (p - y)/n at the output.
  Matrix delta = (proba - labels_onehot) / n;
  for (int l = layers - 1; l >= 0; --l) {
    const Matrix& input = activations[static_cast<std::size_t>(l)];
    grads.weights[static_cast<std::size_t>(l)] = input.transpose() * delta;
    grads.biases[static_cast<std::size_t>(l)] = delta.colwise().sum().transpose();
    if (l > 0) {
      delta = delta * net.weights[static_cast<std::size_t>(l)].transpose();
      // ReLU gate: activation > 0 <=> pre-activation > 0.
      delta = (input.array() > 0.0).cast<double>().array() * delta.array();
    }
  }
  return {loss, std::move(grads)};
}

double mlp_backprop_step(MlpState& net, const Matrix& features, const Matrix& labels_onehot,
                         double learning_rate) {
  auto [loss, grads] = mlp_loss_and_gradients(net, features, labels_onehot);
  if (!std::isfinite(loss)) {
    throw NumericError("mlp: non-finite batch loss, aborting fit");
  }
  for (int l = 0; l < net.layer_count(); ++l) {
    net.weights[static_cast<std::size_t>(l)] -=
        learning_rate * grads.weights[static_cast<std::size_t>(l)];
    net.biases[static_cast<std::size_t>(l)] -=
        learning_rate * grads.biases[static_cast<std::size_t>(l)];
  }
  return loss;
}

MlpFitResult fit_mlp(const Matrix& features, const std::vector<int>& labels, int class_count,
                     const MlpTrainConfig& config, Rng& rng) {
  const int n = static_cast<int>(features.rows());
  const int batch = std::min(config.batch_size, n);

  Matrix onehot = Matrix::Zero(n, class_count);
  for (int i = 0; i < n; ++i) onehot(i, labels[i]) = 1.0;

  MlpFitResult res;
  res.net = mlp_init(static_cast<int>(features.cols()), config.hidden, class_count, rng);

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);

  double lr = config.learning_rate_init;
  double best_loss = std::numeric_limits<double>::infinity();
  int no_improve = 0;       // consecutive epochs below tol improvement
  int adaptive_strikes = 0; // consecutive epochs counted for the rate division

  Matrix bx(batch, features.cols());
  Matrix by(batch, class_count);

  for (int epoch = 1; epoch <= config.max_iter; ++epoch) {
    rng.shuffle(order);
    const double epoch_lr =
        config.schedule == MlpSchedule::InvScaling ? lr / std::sqrt(static_cast<double>(epoch))
                                                   : lr;

    double loss_sum = 0.0;
    long seen = 0;
    for (int start = 0; start < n; start += batch) {
      const int len = std::min(batch, n - start);
      for (int i = 0; i < len; ++i) {
        bx.row(i) = features.row(order[static_cast<std::size_t>(start + i)]);
        by.row(i) = onehot.row(order[static_cast<std::size_t>(start + i)]);
      }
      const double batch_loss =
          mlp_backprop_step(res.net, bx.topRows(len), by.topRows(len), epoch_lr);
      loss_sum += batch_loss * len;
      seen += len;
    }
    const double epoch_loss = loss_sum / static_cast<double>(seen);
    if (!std::isfinite(epoch_loss)) throw NumericError("mlp: non-finite epoch loss");
    res.epoch_losses.push_back(epoch_loss);
    res.epochs_run = epoch;
    res.final_learning_rate = epoch_lr;

    if (epoch_loss < best_loss - config.tol) {
      best_loss = epoch_loss;
      no_improve = 0;
      adaptive_strikes = 0;
    } else {
      ++no_improve;
      ++adaptive_strikes;
      if (config.schedule == MlpSchedule::Adaptive && adaptive_strikes >= 2) {
        lr /= 5.0;
        adaptive_strikes = 0;
        if (lr < 1e-6) break;
      }
      if (no_improve >= config.patience) break;
    }
  }
  return res;
}

}  // namespace tabens
