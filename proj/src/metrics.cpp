#include "tabens/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace tabens {

ConfusionMatrix confusion_matrix(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                                 int class_count, std::vector<std::string> class_names) {
  if (y_true.size() != y_pred.size()) {
    throw DataError("confusion_matrix: y_true and y_pred length mismatch");
  }
  ConfusionMatrix m;
  m.counts = Eigen::MatrixXi::Zero(class_count, class_count);
  for (std::size_t t = 0; t < y_true.size(); ++t) {
    const int i = y_true[t];
    const int j = y_pred[t];
    if (i < 0 || i >= class_count || j < 0 || j >= class_count) {
      throw DataError("confusion_matrix: class id out of range at row " + std::to_string(t));
    }
    m.counts(i, j) += 1;
  }
  if (class_names.empty()) {
    for (int c = 0; c < class_count; ++c) class_names.push_back("class_" + std::to_string(c));
  }
  m.class_names = std::move(class_names);
  return m;
}

ClassPRF precision_recall_f1(const ConfusionMatrix& m, Warnings* warnings) {
  const int k = m.class_count();
  ClassPRF out;
  out.precision = Vector::Zero(k);
  out.recall = Vector::Zero(k);
  out.f1 = Vector::Zero(k);
  for (int c = 0; c < k; ++c) {
    const double tp = m.counts(c, c);
    const double fp = m.counts.col(c).sum() - tp;
    const double fn = m.counts.row(c).sum() - tp;
    double p = 0.0, r = 0.0;
    if (tp + fp > 0) {
      p = tp / (tp + fp);
    } else {
      ++out.zero_denominator_hits;
      if (warnings) warnings->add("precision undefined for class " + m.class_names[c] + ", using 0");
    }
    if (tp + fn > 0) {
      r = tp / (tp + fn);
    } else {
      ++out.zero_denominator_hits;
      if (warnings) warnings->add("recall undefined for class " + m.class_names[c] + ", using 0");
    }
    out.precision(c) = p;
    out.recall(c) = r;
    out.f1(c) = (p + r > 0) ? 2.0 * p * r / (p + r) : 0.0;
  }
  // Sequential sums, not Eigen reductions: macro averages must match a
  // plain class-order loop bit for bit.
  double p_sum = 0.0, r_sum = 0.0, f_sum = 0.0;
  for (int c = 0; c < k; ++c) {
    p_sum += out.precision(c);
    r_sum += out.recall(c);
    f_sum += out.f1(c);
  }
  out.precision_macro = p_sum / k;
  out.recall_macro = r_sum / k;
  out.f1_macro = f_sum / k;
  return out;
}

double accuracy(const ConfusionMatrix& m) {
  const long total = m.total();
  if (total == 0) throw DataError("accuracy: empty confusion matrix");
  return static_cast<double>(m.counts.trace()) / static_cast<double>(total);
}

double binary_roc_auc(const std::vector<int>& is_positive, const std::vector<double>& scores) {
  const std::size_t n = scores.size();
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return scores[a] < scores[b]; });

  // Average ranks over tied scores, then the Mann-Whitney U statistic.
  double rank_sum_pos = 0.0;
  long n_pos = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double mean_rank = 0.5 * static_cast<double>(i + j) + 1.0;  // ranks are 1-based
    for (std::size_t t = i; t <= j; ++t) {
      if (is_positive[order[t]]) {
        rank_sum_pos += mean_rank;
        ++n_pos;
      }
    }
    i = j + 1;
  }
  const long n_neg = static_cast<long>(n) - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw NumericError("binary_roc_auc: need both positive and negative samples");
  }
  const double u = rank_sum_pos - 0.5 * static_cast<double>(n_pos) * (n_pos + 1.0);
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

namespace {

// Shared per-class OVR loop for the probability metrics.
template <typename BinaryMetric>
double ovr_macro(const std::vector<int>& y_true, const Matrix& probabilities, Warnings* warnings,
                 const char* name, BinaryMetric metric) {
  const int k = static_cast<int>(probabilities.cols());
  if (static_cast<std::size_t>(probabilities.rows()) != y_true.size()) {
    throw DataError(std::string(name) + ": row count mismatch");
  }
  std::vector<long> present(k, 0);
  for (int y : y_true) {
    if (y < 0 || y >= k) throw DataError(std::string(name) + ": label out of range");
    ++present[y];
  }
  int distinct = 0;
  for (int c = 0; c < k; ++c) {
    if (present[c] > 0) ++distinct;
  }
  if (distinct < 2) throw NumericError(std::string(name) + ": single-class input is degenerate");

  double sum = 0.0;
  int used = 0;
  std::vector<int> pos(y_true.size());
  std::vector<double> col(y_true.size());
  for (int c = 0; c < k; ++c) {
    if (present[c] == 0) {
      if (warnings) warnings->add(std::string(name) + ": class " + std::to_string(c) + " absent, skipped");
      continue;
    }
    for (std::size_t t = 0; t < y_true.size(); ++t) {
      pos[t] = y_true[t] == c ? 1 : 0;
      col[t] = probabilities(static_cast<Eigen::Index>(t), c);
    }
    sum += metric(pos, col);
    ++used;
  }
  return sum / used;
}

}  // namespace

double roc_auc_ovr_macro(const std::vector<int>& y_true, const Matrix& probabilities,
                         Warnings* warnings) {
  return ovr_macro(y_true, probabilities, warnings, "roc_auc_ovr_macro", binary_roc_auc);
}

double binary_average_precision(const std::vector<int>& is_positive,
                                const std::vector<double>& scores) {
  const std::size_t n = scores.size();
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return scores[a] > scores[b]; });

  long n_pos = 0;
  for (int p : is_positive) n_pos += p;
  if (n_pos == 0) throw NumericError("binary_average_precision: no positive samples");

  double ap = 0.0;
  double recall_prev = 0.0;
  long tp = 0, predicted = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    for (std::size_t t = i; t <= j; ++t) {  // whole tie group enters at one threshold
      ++predicted;
      tp += is_positive[order[t]];
    }
    const double precision = static_cast<double>(tp) / static_cast<double>(predicted);
    const double recall = static_cast<double>(tp) / static_cast<double>(n_pos);
    ap += (recall - recall_prev) * precision;
    recall_prev = recall;
    i = j + 1;
  }
  return ap;
}

double average_precision_macro(const std::vector<int>& y_true, const Matrix& probabilities,
                               Warnings* warnings) {
  return ovr_macro(y_true, probabilities, warnings, "average_precision_macro",
                   binary_average_precision);
}

MetricBundle evaluate_predictions(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                                  int class_count, const Matrix* probabilities,
                                  Warnings* warnings) {
  const ConfusionMatrix m = confusion_matrix(y_true, y_pred, class_count);
  const ClassPRF prf = precision_recall_f1(m, warnings);
  MetricBundle b;
  b.accuracy = accuracy(m);
  b.precision_macro = prf.precision_macro;
  b.recall_macro = prf.recall_macro;
  b.f1_macro = prf.f1_macro;
  if (probabilities != nullptr) {
    b.roc_auc_ovr_macro = roc_auc_ovr_macro(y_true, *probabilities, warnings);
    b.average_precision_macro = average_precision_macro(y_true, *probabilities, warnings);
  }
  return b;
}

std::string confusion_to_csv(const ConfusionMatrix& m) {
  std::ostringstream os;
  os << "true\\pred";
  for (const auto& name : m.class_names) os << ',' << name;
  os << '\n';
  for (int i = 0; i < m.class_count(); ++i) {
    os << m.class_names[i];
    for (int j = 0; j < m.class_count(); ++j) os << ',' << m.counts(i, j);
    os << '\n';
  }
  return os.str();
}

}  // namespace tabens
