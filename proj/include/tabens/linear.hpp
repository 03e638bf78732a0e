#pragma once

#include "tabens/core.hpp"

namespace tabens {

/// Scaled uniform init in [-r, r], r = sqrt(6 / (fan_in + fan_out)), drawn
/// column-major from the given stream (shared by LR, SVC and MLP layers).
Matrix glorot_uniform(int rows, int cols, int fan_in, int fan_out, Rng& rng);

struct LinearFitResult {
  Matrix weights;  // n_features x n_outputs
  Vector bias;     // n_outputs
  int iterations = 0;
  double final_gradient_norm = 0.0;
};

/// Multinomial logistic regression: full-batch gradient descent on softmax
/// cross-entropy with L2 strength 1/C (C <= 0 means no penalty), Nesterov
/// momentum, stop at gradient inf-norm < 1e-6 or max_iter.
LinearFitResult fit_softmax_regression(const Matrix& features, const std::vector<int>& labels,
                                       int class_count, double c_inverse_reg, int max_iter,
                                       Rng& rng);

/// One-vs-rest binary logistic regressions, same optimizer per column.
LinearFitResult fit_ovr_logistic(const Matrix& features, const std::vector<int>& labels,
                                 int class_count, double c_inverse_reg, int max_iter, Rng& rng);

/// One-vs-rest linear hinge-loss SVMs, one column per class, solved by dual
/// coordinate descent. Note: OVR margins cannot represent "middle band"
/// classes; the SVC learner itself uses the one-vs-one fit below.
LinearFitResult fit_ovr_linear_svc(const Matrix& features, const std::vector<int>& labels,
                                   int class_count, double c_regularization, int max_iter,
                                   Rng& rng);

/// One-vs-one linear hinge-loss SVMs over all class pairs (a < b), positive
/// margin favouring the lower class id. weights/bias hold one column per
/// pair in lexicographic pair order.
struct OvoSvmResult {
  Matrix weights;                         // n_features x n_pairs
  Vector bias;                            // n_pairs
  std::vector<std::pair<int, int>> pairs; // lexicographic (a, b), a < b
};

OvoSvmResult fit_ovo_linear_svc(const Matrix& features, const std::vector<int>& labels,
                                int class_count, double c_regularization, int max_iter, Rng& rng);

/// Smooth one-vs-one class scores: sum over opponents of sigmoid(margin).
/// Rows normalized to probabilities.
Matrix ovo_class_probabilities(const Matrix& features, const OvoSvmResult& svm, int class_count);

Matrix linear_margins(const Matrix& features, const Matrix& weights, const Vector& bias);

/// Row-wise softmax with max-shift for stability.
Matrix softmax_rows(const Matrix& scores);

}  // namespace tabens
