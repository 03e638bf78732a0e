#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tabens/core.hpp"

namespace tabens {

/// K x K count matrix, rows = true class, columns = predicted class.
struct ConfusionMatrix {
  Eigen::MatrixXi counts;
  std::vector<std::string> class_names;

  int class_count() const { return static_cast<int>(counts.rows()); }
  long total() const { return counts.sum(); }
};

struct ClassPRF {
  Vector precision;
  Vector recall;
  Vector f1;
  double precision_macro = 0.0;
  double recall_macro = 0.0;
  double f1_macro = 0.0;
  int zero_denominator_hits = 0;  // classes where P or R fell back to 0
};

/// Metric bundle for one model on one partition. Probability metrics are
/// absent for models that expose no probabilities (hard-voting ensembles).
struct MetricBundle {
  double accuracy = 0.0;
  double precision_macro = 0.0;
  double recall_macro = 0.0;
  double f1_macro = 0.0;
  std::optional<double> roc_auc_ovr_macro;
  std::optional<double> average_precision_macro;
};

ConfusionMatrix confusion_matrix(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                                 int class_count, std::vector<std::string> class_names = {});

ClassPRF precision_recall_f1(const ConfusionMatrix& m, Warnings* warnings = nullptr);

double accuracy(const ConfusionMatrix& m);

/// Binary AUC of (labels, scores) by the Mann-Whitney rank statistic; tied
/// positive/negative pairs count half.
double binary_roc_auc(const std::vector<int>& is_positive, const std::vector<double>& scores);

/// One-vs-rest macro ROC-AUC. Classes absent from y_true are skipped with a
/// warning; fewer than two present classes is an error.
double roc_auc_ovr_macro(const std::vector<int>& y_true, const Matrix& probabilities,
                         Warnings* warnings = nullptr);

/// Average precision of one binary problem over the score-descending
/// threshold sweep: AP = sum_k (R_k - R_{k-1}) * P_k.
double binary_average_precision(const std::vector<int>& is_positive,
                                const std::vector<double>& scores);

double average_precision_macro(const std::vector<int>& y_true, const Matrix& probabilities,
                               Warnings* warnings = nullptr);

/// Full bundle from hard predictions plus (optionally) probability columns.
MetricBundle evaluate_predictions(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                                  int class_count, const Matrix* probabilities = nullptr,
                                  Warnings* warnings = nullptr);

/// Confusion matrix as CSV with a header row/column of class names.
std::string confusion_to_csv(const ConfusionMatrix& m);

}  // namespace tabens
