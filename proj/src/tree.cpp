#include "tabens/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace tabens {

namespace {

inline double impurity_from_weights(const double* w, int k, double total, Criterion criterion) {
  if (total <= 0.0) return 0.0;
  double out = 0.0;
  switch (criterion) {
    case Criterion::Gini: {
      double sum_sq = 0.0;
      for (int c = 0; c < k; ++c) {
        const double p = w[c] / total;
        sum_sq += p * p;
      }
      out = 1.0 - sum_sq;
      break;
    }
    case Criterion::Entropy: {
      for (int c = 0; c < k; ++c) {
        if (w[c] > 0.0) {
          const double p = w[c] / total;
          out -= p * std::log2(p);
        }
      }
      break;
    }
    case Criterion::LogLoss: {
      for (int c = 0; c < k; ++c) {
        if (w[c] > 0.0) {
          const double p = w[c] / total;
          out -= p * std::log(p);
        }
      }
      break;
    }
  }
  return out;
}

// Candidate features for one split, ascending order for deterministic
// tie-breaks. Draws a partial Fisher-Yates sample when subsetting.
void draw_candidates(FeatureSubset subset, int n_features, Rng& rng, std::vector<int>& scratch,
                     std::vector<int>& out) {
  int m = n_features;
  if (subset == FeatureSubset::Sqrt) {
    m = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(n_features))));
  } else if (subset == FeatureSubset::Log2) {
    m = std::max(1, static_cast<int>(std::log2(static_cast<double>(n_features))));
  }
  out.clear();
  if (m >= n_features) {
    for (int j = 0; j < n_features; ++j) out.push_back(j);
    return;
  }
  scratch.resize(n_features);
  std::iota(scratch.begin(), scratch.end(), 0);
  for (int t = 0; t < m; ++t) {
    const int pick = t + rng.below(n_features - t);
    std::swap(scratch[t], scratch[pick]);
    out.push_back(scratch[t]);
  }
  std::sort(out.begin(), out.end());
}

struct BuildTask {
  int node = 0;
  int begin = 0;
  int end = 0;
  int depth = 0;
};

}  // namespace

FeatureSubset feature_subset_from_name(const std::string& name) {
  if (name == "sqrt") return FeatureSubset::Sqrt;
  if (name == "log2") return FeatureSubset::Log2;
  if (name == "none" || name == "all") return FeatureSubset::All;
  throw ConfigError("unknown max_features value: " + name);
}

FeatureBins FeatureBins::build(const Matrix& features, int max_bins) {
  const Eigen::Index n = features.rows();
  const Eigen::Index d = features.cols();
  FeatureBins bins;
  bins.cuts.resize(static_cast<std::size_t>(d));
  bins.codes.resize(n, d);

  std::vector<double> sorted(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) sorted[static_cast<std::size_t>(i)] = features(i, j);
    std::sort(sorted.begin(), sorted.end());

    auto& cuts = bins.cuts[static_cast<std::size_t>(j)];
    std::vector<double> distinct;
    for (double v : sorted) {
      if (distinct.empty() || v != distinct.back()) distinct.push_back(v);
    }
    if (static_cast<int>(distinct.size()) <= max_bins) {
      for (std::size_t t = 0; t + 1 < distinct.size(); ++t) {
        cuts.push_back(0.5 * (distinct[t] + distinct[t + 1]));
      }
    } else {
      // Quantile cuts between neighbouring order statistics.
      for (int b = 1; b < max_bins; ++b) {
        const std::size_t pos = static_cast<std::size_t>(
            static_cast<double>(b) * static_cast<double>(n) / static_cast<double>(max_bins));
        if (pos == 0 || sorted[pos - 1] == sorted[pos]) continue;
        const double cut = 0.5 * (sorted[pos - 1] + sorted[pos]);
        if (cuts.empty() || cut > cuts.back()) cuts.push_back(cut);
      }
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto it = std::lower_bound(cuts.begin(), cuts.end(), features(i, j));
      bins.codes(i, j) = static_cast<std::uint16_t>(it - cuts.begin());
    }
  }
  return bins;
}

// ---------------------------------------------------------------------------
// DecisionTree
// ---------------------------------------------------------------------------

void DecisionTree::fit(const Matrix& features, const FeatureBins& bins,
                       const std::vector<int>& labels, int class_count, const TreeParams& params,
                       Rng& rng, const Vector* sample_weights) {
  const int n = static_cast<int>(features.rows());
  const int d = static_cast<int>(features.cols());
  class_count_ = class_count;
  nodes_.clear();

  Vector weights;
  if (sample_weights != nullptr) {
    weights = *sample_weights;
  } else {
    weights = Vector::Ones(n);
  }
  const double total_weight = weights.sum();

  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);

  nodes_.emplace_back();
  std::vector<BuildTask> stack;
  stack.push_back({0, 0, n, 0});

  // Scratch buffers reused across nodes.
  std::vector<double> node_class_w(static_cast<std::size_t>(class_count));
  std::vector<double> hist;
  std::vector<long> bin_n;
  std::vector<double> left_w(static_cast<std::size_t>(class_count));
  std::vector<double> right_w(static_cast<std::size_t>(class_count));
  std::vector<int> cand, cand_scratch;
  std::vector<int> part_buf;

  while (!stack.empty()) {
    const BuildTask task = stack.back();
    stack.pop_back();
    TreeNode& node = nodes_[static_cast<std::size_t>(task.node)];
    const int n_node = task.end - task.begin;

    std::fill(node_class_w.begin(), node_class_w.end(), 0.0);
    double w_node = 0.0;
    for (int t = task.begin; t < task.end; ++t) {
      const int r = idx[static_cast<std::size_t>(t)];
      node_class_w[static_cast<std::size_t>(labels[r])] += weights(r);
      w_node += weights(r);
    }
    node.n_samples = n_node;
    node.n_weighted = w_node;
    node.depth = task.depth;
    node.impurity = impurity_from_weights(node_class_w.data(), class_count, w_node,
                                          params.criterion);

    const bool depth_capped = params.max_depth >= 0 && task.depth >= params.max_depth;
    if (depth_capped || n_node < params.min_samples_split ||
        n_node < 2 * params.min_samples_leaf || node.impurity <= 1e-12) {
      node.feature = -1;
      node.class_dist = Eigen::Map<const Vector>(node_class_w.data(), class_count) / w_node;
      continue;
    }

    draw_candidates(params.max_features, d, rng, cand_scratch, cand);

    int best_feature = -1;
    double best_threshold = 0.0;
    int best_bin = -1;
    double best_improvement = -1.0;

    for (int j : cand) {
      if (params.splitter == Splitter::Best) {
        const int n_bins = bins.bin_count(j);
        hist.assign(static_cast<std::size_t>(n_bins) * class_count, 0.0);
        bin_n.assign(static_cast<std::size_t>(n_bins), 0);
        const auto codes_j = bins.codes.col(j);
        for (int t = task.begin; t < task.end; ++t) {
          const int r = idx[static_cast<std::size_t>(t)];
          const int b = codes_j(r);
          hist[static_cast<std::size_t>(b) * class_count + labels[r]] += weights(r);
          ++bin_n[static_cast<std::size_t>(b)];
        }
        std::fill(left_w.begin(), left_w.end(), 0.0);
        double wl = 0.0;
        long nl = 0;
        for (int b = 0; b + 1 < n_bins; ++b) {
          for (int c = 0; c < class_count; ++c) {
            left_w[static_cast<std::size_t>(c)] += hist[static_cast<std::size_t>(b) * class_count + c];
          }
          nl += bin_n[static_cast<std::size_t>(b)];
          if (nl == 0) continue;
          const long nr = n_node - nl;
          if (nr == 0) break;
          if (nl < params.min_samples_leaf || nr < params.min_samples_leaf) continue;
          wl = 0.0;
          for (int c = 0; c < class_count; ++c) wl += left_w[static_cast<std::size_t>(c)];
          const double wr = w_node - wl;
          for (int c = 0; c < class_count; ++c) {
            right_w[static_cast<std::size_t>(c)] =
                node_class_w[static_cast<std::size_t>(c)] - left_w[static_cast<std::size_t>(c)];
          }
          const double imp_l = impurity_from_weights(left_w.data(), class_count, wl,
                                                     params.criterion);
          const double imp_r = impurity_from_weights(right_w.data(), class_count, wr,
                                                     params.criterion);
          const double improvement =
              (w_node / total_weight) *
              (node.impurity - (wl / w_node) * imp_l - (wr / w_node) * imp_r);
          if (improvement > best_improvement) {
            best_improvement = improvement;
            best_feature = j;
            best_bin = b;
            best_threshold = bins.cuts[static_cast<std::size_t>(j)][static_cast<std::size_t>(b)];
          }
        }
      } else {
        // splitter=random: one uniform threshold draw per candidate feature.
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (int t = task.begin; t < task.end; ++t) {
          const double v = features(idx[static_cast<std::size_t>(t)], j);
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
        if (lo == hi) continue;
        const double threshold = rng.uniform(lo, hi);
        std::fill(left_w.begin(), left_w.end(), 0.0);
        long nl = 0;
        double wl = 0.0;
        for (int t = task.begin; t < task.end; ++t) {
          const int r = idx[static_cast<std::size_t>(t)];
          if (features(r, j) <= threshold) {
            left_w[static_cast<std::size_t>(labels[r])] += weights(r);
            wl += weights(r);
            ++nl;
          }
        }
        const long nr = n_node - nl;
        if (nl < params.min_samples_leaf || nr < params.min_samples_leaf) continue;
        const double wr = w_node - wl;
        for (int c = 0; c < class_count; ++c) {
          right_w[static_cast<std::size_t>(c)] =
              node_class_w[static_cast<std::size_t>(c)] - left_w[static_cast<std::size_t>(c)];
        }
        const double imp_l = impurity_from_weights(left_w.data(), class_count, wl,
                                                   params.criterion);
        const double imp_r = impurity_from_weights(right_w.data(), class_count, wr,
                                                   params.criterion);
        const double improvement =
            (w_node / total_weight) *
            (node.impurity - (wl / w_node) * imp_l - (wr / w_node) * imp_r);
        if (improvement > best_improvement) {
          best_improvement = improvement;
          best_feature = j;
          best_bin = -1;
          best_threshold = threshold;
        }
      }
    }

    if (best_feature < 0 || best_improvement < params.min_impurity_decrease) {
      node.feature = -1;
      node.class_dist = Eigen::Map<const Vector>(node_class_w.data(), class_count) / w_node;
      continue;
    }

    // Stable partition keeps within-side row order deterministic.
    part_buf.clear();
    int write = task.begin;
    if (best_bin >= 0) {
      const auto codes_j = bins.codes.col(best_feature);
      for (int t = task.begin; t < task.end; ++t) {
        const int r = idx[static_cast<std::size_t>(t)];
        if (codes_j(r) <= best_bin) {
          idx[static_cast<std::size_t>(write++)] = r;
        } else {
          part_buf.push_back(r);
        }
      }
    } else {
      for (int t = task.begin; t < task.end; ++t) {
        const int r = idx[static_cast<std::size_t>(t)];
        if (features(r, best_feature) <= best_threshold) {
          idx[static_cast<std::size_t>(write++)] = r;
        } else {
          part_buf.push_back(r);
        }
      }
    }
    const int mid = write;
    for (int r : part_buf) idx[static_cast<std::size_t>(write++)] = r;

    node.feature = best_feature;
    node.threshold = best_threshold;
    const int left_id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    nodes_.emplace_back();
    nodes_[static_cast<std::size_t>(task.node)].feature = best_feature;
    nodes_[static_cast<std::size_t>(task.node)].threshold = best_threshold;
    nodes_[static_cast<std::size_t>(task.node)].left = left_id;
    nodes_[static_cast<std::size_t>(task.node)].right = left_id + 1;
    stack.push_back({left_id + 1, mid, task.end, task.depth + 1});
    stack.push_back({left_id, task.begin, mid, task.depth + 1});
  }
}

int DecisionTree::apply(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
  int node = 0;
  while (nodes_[static_cast<std::size_t>(node)].feature >= 0) {
    const TreeNode& n = nodes_[static_cast<std::size_t>(node)];
    node = row(n.feature) <= n.threshold ? n.left : n.right;
  }
  return node;
}

Matrix DecisionTree::predict_proba(const Matrix& features) const {
  Matrix out(features.rows(), class_count_);
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    out.row(i) = nodes_[static_cast<std::size_t>(apply(features.row(i)))].class_dist.transpose();
  }
  return out;
}

int DecisionTree::max_depth_reached() const {
  int depth = 0;
  for (const auto& n : nodes_) depth = std::max(depth, n.depth);
  return depth;
}

// ---------------------------------------------------------------------------
// RegressionTree
// ---------------------------------------------------------------------------

void RegressionTree::fit(const Matrix& features, const FeatureBins& bins, const Vector& targets,
                         const TreeParams& params, Rng& rng) {
  const int n = static_cast<int>(features.rows());
  const int d = static_cast<int>(features.cols());
  nodes_.clear();

  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);

  nodes_.emplace_back();
  std::vector<BuildTask> stack;
  stack.push_back({0, 0, n, 0});

  std::vector<double> bin_sum;
  std::vector<long> bin_n;
  std::vector<int> cand, cand_scratch;
  std::vector<int> part_buf;
  const double n_total = static_cast<double>(n);

  while (!stack.empty()) {
    const BuildTask task = stack.back();
    stack.pop_back();
    const int n_node = task.end - task.begin;

    double sum = 0.0, sum_sq = 0.0;
    for (int t = task.begin; t < task.end; ++t) {
      const double y = targets(idx[static_cast<std::size_t>(t)]);
      sum += y;
      sum_sq += y * y;
    }
    const double mean = sum / n_node;
    const double variance = std::max(0.0, sum_sq / n_node - mean * mean);

    TreeNode& node = nodes_[static_cast<std::size_t>(task.node)];
    node.n_samples = n_node;
    node.n_weighted = static_cast<double>(n_node);
    node.depth = task.depth;
    node.impurity = variance;

    const bool depth_capped = params.max_depth >= 0 && task.depth >= params.max_depth;
    if (depth_capped || n_node < params.min_samples_split ||
        n_node < 2 * params.min_samples_leaf || variance <= 1e-14) {
      node.feature = -1;
      node.value = mean;
      continue;
    }

    draw_candidates(params.max_features, d, rng, cand_scratch, cand);

    int best_feature = -1;
    int best_bin = -1;
    double best_threshold = 0.0;
    double best_score = -1.0;
    double best_decrease = -1.0;

    for (int j : cand) {
      const int n_bins = bins.bin_count(j);
      bin_sum.assign(static_cast<std::size_t>(n_bins), 0.0);
      bin_n.assign(static_cast<std::size_t>(n_bins), 0);
      const auto codes_j = bins.codes.col(j);
      for (int t = task.begin; t < task.end; ++t) {
        const int r = idx[static_cast<std::size_t>(t)];
        const int b = codes_j(r);
        bin_sum[static_cast<std::size_t>(b)] += targets(r);
        ++bin_n[static_cast<std::size_t>(b)];
      }
      double sum_l = 0.0;
      long nl = 0;
      for (int b = 0; b + 1 < n_bins; ++b) {
        sum_l += bin_sum[static_cast<std::size_t>(b)];
        nl += bin_n[static_cast<std::size_t>(b)];
        if (nl == 0) continue;
        const long nr = n_node - nl;
        if (nr == 0) break;
        if (nl < params.min_samples_leaf || nr < params.min_samples_leaf) continue;
        const double mean_l = sum_l / static_cast<double>(nl);
        const double mean_r = (sum - sum_l) / static_cast<double>(nr);
        const double diff = mean_l - mean_r;
        const double balance = static_cast<double>(nl) * static_cast<double>(nr) /
                               static_cast<double>(n_node);
        const double decrease = balance * diff * diff / n_total;  // weighted variance decrease
        const double score = params.friedman_score ? balance * diff * diff : decrease;
        if (score > best_score) {
          best_score = score;
          best_decrease = decrease;
          best_feature = j;
          best_bin = b;
          best_threshold = bins.cuts[static_cast<std::size_t>(j)][static_cast<std::size_t>(b)];
        }
      }
    }

    if (best_feature < 0 || best_decrease < params.min_impurity_decrease) {
      node.feature = -1;
      node.value = mean;
      continue;
    }

    part_buf.clear();
    int write = task.begin;
    const auto codes_best = bins.codes.col(best_feature);
    for (int t = task.begin; t < task.end; ++t) {
      const int r = idx[static_cast<std::size_t>(t)];
      if (codes_best(r) <= best_bin) {
        idx[static_cast<std::size_t>(write++)] = r;
      } else {
        part_buf.push_back(r);
      }
    }
    const int mid = write;
    for (int r : part_buf) idx[static_cast<std::size_t>(write++)] = r;

    const int left_id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    nodes_.emplace_back();
    nodes_[static_cast<std::size_t>(task.node)].feature = best_feature;
    nodes_[static_cast<std::size_t>(task.node)].threshold = best_threshold;
    nodes_[static_cast<std::size_t>(task.node)].left = left_id;
    nodes_[static_cast<std::size_t>(task.node)].right = left_id + 1;
    stack.push_back({left_id + 1, mid, task.end, task.depth + 1});
    stack.push_back({left_id, task.begin, mid, task.depth + 1});
  }
}

int RegressionTree::apply(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
  int node = 0;
  while (nodes_[static_cast<std::size_t>(node)].feature >= 0) {
    const TreeNode& n = nodes_[static_cast<std::size_t>(node)];
    node = row(n.feature) <= n.threshold ? n.left : n.right;
  }
  return node;
}

double RegressionTree::predict_one(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
  return nodes_[static_cast<std::size_t>(apply(row))].value;
}

std::vector<int> RegressionTree::leaf_ids() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].feature < 0) out.push_back(static_cast<int>(i));
  }
  return out;
}

// ---------------------------------------------------------------------------
// serialization
// ---------------------------------------------------------------------------

namespace {

nlohmann::json nodes_to_json(const std::vector<TreeNode>& nodes, bool classification) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& n : nodes) {
    nlohmann::json jn;
    jn["feature"] = n.feature;
    jn["threshold"] = n.threshold;
    jn["left"] = n.left;
    jn["right"] = n.right;
    if (n.feature < 0) {
      if (classification) {
        jn["dist"] = std::vector<double>(n.class_dist.data(),
                                         n.class_dist.data() + n.class_dist.size());
      } else {
        jn["value"] = n.value;
      }
    }
    arr.push_back(std::move(jn));
  }
  return arr;
}

void nodes_from_json(const nlohmann::json& arr, std::vector<TreeNode>& nodes, int class_count) {
  nodes.clear();
  for (const auto& jn : arr) {
    TreeNode n;
    n.feature = jn.at("feature").get<int>();
    n.threshold = jn.at("threshold").get<double>();
    n.left = jn.at("left").get<int>();
    n.right = jn.at("right").get<int>();
    if (n.feature < 0) {
      if (jn.contains("dist")) {
        const auto dist = jn.at("dist").get<std::vector<double>>();
        n.class_dist = Eigen::Map<const Vector>(dist.data(), static_cast<Eigen::Index>(dist.size()));
        if (class_count > 0 && n.class_dist.size() != class_count) {
          throw DataError("tree node distribution size mismatch");
        }
      } else {
        n.value = jn.at("value").get<double>();
      }
    }
    nodes.push_back(std::move(n));
  }
}

}  // namespace

nlohmann::json DecisionTree::to_json() const { return nodes_to_json(nodes_, true); }

DecisionTree DecisionTree::from_json(const nlohmann::json& j, int class_count) {
  DecisionTree t;
  t.class_count_ = class_count;
  nodes_from_json(j, t.nodes_, class_count);
  return t;
}

nlohmann::json RegressionTree::to_json() const { return nodes_to_json(nodes_, false); }

RegressionTree RegressionTree::from_json(const nlohmann::json& j) {
  RegressionTree t;
  nodes_from_json(j, t.nodes_, 0);
  return t;
}

}  // namespace tabens
