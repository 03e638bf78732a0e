#include "tabens/linear.hpp"

#include <cmath>

namespace tabens {

Matrix glorot_uniform(int rows, int cols, int fan_in, int fan_out, Rng& rng) {
  const double r = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Matrix out(rows, cols);
  for (int j = 0; j < cols; ++j) {
    for (int i = 0; i < rows; ++i) out(i, j) = rng.uniform(-r, r);
  }
  return out;
}

Matrix softmax_rows(const Matrix& scores) {
  Matrix out(scores.rows(), scores.cols());
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    const double m = scores.row(i).maxCoeff();
    out.row(i) = (scores.row(i).array() - m).exp();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

Matrix linear_margins(const Matrix& features, const Matrix& weights, const Vector& bias) {
  Matrix scores = features * weights;
  scores.rowwise() += bias.transpose();
  return scores;
}

namespace {

Matrix one_hot(const std::vector<int>& labels, int class_count) {
  Matrix y = Matrix::Zero(static_cast<Eigen::Index>(labels.size()), class_count);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    y(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
  }
  return y;
}

// Power-iteration estimate of the largest eigenvalue of X^T X / n, which
// bounds the softmax-loss Lipschitz constant (factor 1/2) and sets the step.
double top_eigenvalue_xtx(const Matrix& x) {
  const Eigen::Index d = x.cols();
  Vector v = Vector::Ones(d) / std::sqrt(static_cast<double>(d));
  double lambda = 1.0;
  for (int it = 0; it < 30; ++it) {
    Vector w = x.transpose() * (x * v) / static_cast<double>(x.rows());
    const double norm = w.norm();
    if (norm == 0.0) return 1.0;
    lambda = norm;
    v = w / norm;
  }
  return lambda;
}

struct GdProblem {
  const Matrix& x;
  const Matrix& y;           // one-hot (softmax) or +-1 coded columns (ovr logistic)
  double l2 = 0.0;           // per-sample penalty factor
  bool multinomial = true;
};

// Full-batch gradient descent with a Lipschitz step, shared by the logistic
// fits. Converges monotonically; the iteration cap binds long before the
// gradient tolerance on poorly conditioned problems.
LinearFitResult run_gd(const GdProblem& p, int max_iter, Rng& rng) {
  const int n = static_cast<int>(p.x.rows());
  const int d = static_cast<int>(p.x.cols());
  const int k = static_cast<int>(p.y.cols());

  LinearFitResult res;
  res.weights = glorot_uniform(d, k, d, k, rng);
  res.bias = Vector::Zero(k);

  const double lipschitz = 0.5 * top_eigenvalue_xtx(p.x) + p.l2 + 0.5;  // +0.5 covers the bias row
  const double step = 1.0 / lipschitz;

  for (int it = 0; it < max_iter; ++it) {
    Matrix scores = linear_margins(p.x, res.weights, res.bias);
    Matrix residual;  // dLoss/dScores, per sample
    if (p.multinomial) {
      residual = softmax_rows(scores) - p.y;
    } else {
      // d/ds log(1+exp(-y s)) = -y * sigmoid(-y s)
      residual = ((scores.array() * p.y.array()).exp() + 1.0).inverse().matrix();
      residual = -(residual.array() * p.y.array()).matrix();
    }
    Matrix grad_w = p.x.transpose() * residual / static_cast<double>(n);
    if (p.l2 > 0.0) grad_w += p.l2 * res.weights;
    const Vector grad_b = residual.colwise().sum().transpose() / static_cast<double>(n);

    const double g_inf = std::max(grad_w.cwiseAbs().maxCoeff(), grad_b.cwiseAbs().maxCoeff());
    res.final_gradient_norm = g_inf;
    res.iterations = it + 1;
    if (g_inf < 1e-6) break;

    res.weights -= step * grad_w;
    res.bias -= step * grad_b;
  }
  return res;
}

}  // namespace

LinearFitResult fit_softmax_regression(const Matrix& features, const std::vector<int>& labels,
                                       int class_count, double c_inverse_reg, int max_iter,
                                       Rng& rng) {
  const Matrix y = one_hot(labels, class_count);
  GdProblem p{features, y, 0.0, true};
  if (c_inverse_reg > 0.0) p.l2 = 1.0 / (c_inverse_reg * static_cast<double>(features.rows()));
  return run_gd(p, max_iter, rng);
}

LinearFitResult fit_ovr_logistic(const Matrix& features, const std::vector<int>& labels,
                                 int class_count, double c_inverse_reg, int max_iter, Rng& rng) {
  Matrix y(static_cast<Eigen::Index>(labels.size()), class_count);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (int c = 0; c < class_count; ++c) {
      y(static_cast<Eigen::Index>(i), c) = labels[i] == c ? 1.0 : -1.0;
    }
  }
  GdProblem p{features, y, 0.0, false};
  if (c_inverse_reg > 0.0) p.l2 = 1.0 / (c_inverse_reg * static_cast<double>(features.rows()));
  return run_gd(p, max_iter, rng);
}

namespace {

// Dual coordinate descent on the L1-loss SVM dual (liblinear Algorithm 1).
// Plain subgradient descent needs far more than max_iter passes to converge
// at lambda = 1/(C n); the dual solver reaches the optimum in tens of sweeps
// and stays deterministic under the seeded permutation. The intercept rides
// along as a regularized constant feature. Returns (d+1) weights.
Vector binary_svm_dual_cd(const Matrix& x_aug, const Vector& sq_norm,
                          const std::vector<int>& rows, const std::vector<double>& y, double c_reg,
                          int max_iter, Rng& rng, int* sweeps_out) {
  Vector w = Vector::Zero(x_aug.cols());
  Vector alpha = Vector::Zero(static_cast<Eigen::Index>(rows.size()));
  std::vector<int> order(rows.size());
  std::iota(order.begin(), order.end(), 0);

  for (int sweep = 0; sweep < max_iter; ++sweep) {
    rng.shuffle(order);
    double max_violation = 0.0;
    for (int t : order) {
      const int idx = rows[static_cast<std::size_t>(t)];
      const double yt = y[static_cast<std::size_t>(t)];
      const double gradient = yt * w.dot(x_aug.row(idx)) - 1.0;
      double violation;
      if (alpha(t) <= 0.0) {
        violation = std::min(gradient, 0.0);
      } else if (alpha(t) >= c_reg) {
        violation = std::max(gradient, 0.0);
      } else {
        violation = gradient;
      }
      max_violation = std::max(max_violation, std::abs(violation));
      if (std::abs(violation) < 1e-12) continue;
      const double next = std::min(std::max(alpha(t) - gradient / sq_norm(idx), 0.0), c_reg);
      const double delta = next - alpha(t);
      if (delta != 0.0) {
        w += delta * yt * x_aug.row(idx).transpose();
        alpha(t) = next;
      }
    }
    if (sweeps_out) *sweeps_out = sweep + 1;
    if (max_violation < 1e-4) break;
  }
  return w;
}

void augment_with_ones(const Matrix& features, Matrix& x_aug, Vector& sq_norm) {
  const int n = static_cast<int>(features.rows());
  const int d = static_cast<int>(features.cols());
  x_aug.resize(n, d + 1);
  x_aug.leftCols(d) = features;
  x_aug.col(d).setOnes();
  sq_norm.resize(n);
  for (int i = 0; i < n; ++i) sq_norm(i) = x_aug.row(i).squaredNorm();
}

}  // namespace

LinearFitResult fit_ovr_linear_svc(const Matrix& features, const std::vector<int>& labels,
                                   int class_count, double c_regularization, int max_iter,
                                   Rng& rng) {
  const int n = static_cast<int>(features.rows());
  const int d = static_cast<int>(features.cols());
  Matrix x_aug;
  Vector sq_norm;
  augment_with_ones(features, x_aug, sq_norm);

  std::vector<int> rows(static_cast<std::size_t>(n));
  std::iota(rows.begin(), rows.end(), 0);

  Matrix w(d + 1, class_count);
  int sweeps = 0;
  for (int c = 0; c < class_count; ++c) {
    std::vector<double> y(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      y[static_cast<std::size_t>(i)] = labels[static_cast<std::size_t>(i)] == c ? 1.0 : -1.0;
    }
    w.col(c) = binary_svm_dual_cd(x_aug, sq_norm, rows, y, c_regularization, max_iter, rng,
                                  &sweeps);
  }
  LinearFitResult res;
  res.weights = w.topRows(d);
  res.bias = w.row(d).transpose();
  res.iterations = sweeps;
  return res;
}

OvoSvmResult fit_ovo_linear_svc(const Matrix& features, const std::vector<int>& labels,
                                int class_count, double c_regularization, int max_iter,
                                Rng& rng) {
  const int d = static_cast<int>(features.cols());
  Matrix x_aug;
  Vector sq_norm;
  augment_with_ones(features, x_aug, sq_norm);

  OvoSvmResult res;
  for (int a = 0; a < class_count; ++a) {
    for (int b = a + 1; b < class_count; ++b) res.pairs.emplace_back(a, b);
  }
  res.weights.resize(d, static_cast<Eigen::Index>(res.pairs.size()));
  res.bias.resize(static_cast<Eigen::Index>(res.pairs.size()));

  for (std::size_t p = 0; p < res.pairs.size(); ++p) {
    const auto [a, b] = res.pairs[p];
    std::vector<int> rows;
    std::vector<double> y;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == a || labels[i] == b) {
        rows.push_back(static_cast<int>(i));
        y.push_back(labels[i] == a ? 1.0 : -1.0);
      }
    }
    const Vector w =
        binary_svm_dual_cd(x_aug, sq_norm, rows, y, c_regularization, max_iter, rng, nullptr);
    res.weights.col(static_cast<Eigen::Index>(p)) = w.head(d);
    res.bias(static_cast<Eigen::Index>(p)) = w(d);
  }
  return res;
}

Matrix ovo_class_probabilities(const Matrix& features, const OvoSvmResult& svm, int class_count) {
  Matrix margins = features * svm.weights;
  margins.rowwise() += svm.bias.transpose();

  // Pairwise voting. Hard wins dominate (the sigmoid refinement is scaled
  // so it can never flip a full vote); the smooth part breaks vote ties and
  // gives the per-class scores enough granularity to rank with.
  const double refine = 1.0 / (static_cast<double>(svm.pairs.size()) + 1.0);
  Matrix score = Matrix::Zero(features.rows(), class_count);
  for (std::size_t p = 0; p < svm.pairs.size(); ++p) {
    const auto [a, b] = svm.pairs[p];
    for (Eigen::Index i = 0; i < features.rows(); ++i) {
      const double m = margins(i, static_cast<Eigen::Index>(p));
      const double toward_a = 1.0 / (1.0 + std::exp(-m));
      if (m > 0) {
        score(i, a) += 1.0;
      } else {
        score(i, b) += 1.0;
      }
      score(i, a) += refine * toward_a;
      score(i, b) += refine * (1.0 - toward_a);
    }
  }
  for (Eigen::Index i = 0; i < score.rows(); ++i) score.row(i) /= score.row(i).sum();
  return score;
}

}  // namespace tabens
