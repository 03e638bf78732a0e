#pragma once

#include "tabens/core.hpp"
#include "tabens/learners.hpp"
#include "tabens/metrics.hpp"
#include "tabens/tabular.hpp"

namespace tabens {

struct SweepConfig {
  std::vector<LearnerSpec> specs;
  int folds = 10;
  std::vector<std::string> scoring{"roc_auc", "f1_macro"};  // ranking keys, in order
  std::uint64_t seed = 0;
  int threads = 1;
};

struct CVResult {
  std::string spec_id;
  Family family = Family::LogisticRegression;
  std::string params_text;
  std::vector<MetricBundle> fold_metrics;
  MetricBundle mean;  // arithmetic mean of the per-fold bundles
};

/// CVResults sorted by primary scoring metric descending, ties by the
/// secondary metric, then by spec id. Total and deterministic.
struct Leaderboard {
  std::vector<CVResult> rows;
  std::vector<std::string> scoring;

  std::string to_csv() const;
  nlohmann::json to_json() const;  // per-fold detail included
};

/// k disjoint index lists; per-fold class counts differ from count(c)/k by
/// < 1 (largest remainder), deterministic per seed.
std::vector<std::vector<int>> stratified_folds(const std::vector<int>& labels, int k,
                                               std::uint64_t seed);

double metric_value(const MetricBundle& m, const std::string& name);

CVResult cross_validate(const LearnerSpec& spec, const DataTable& table,
                        const std::vector<std::vector<int>>& folds, std::uint64_t seed);

/// Runs the whole sweep (optionally across threads) and ranks it.
Leaderboard run_sweep(const SweepConfig& config, const DataTable& table);

Leaderboard rank_results(std::vector<CVResult> results, const std::vector<std::string>& scoring);

/// First top_k specs of the leaderboard ordering.
std::vector<LearnerSpec> rank_and_select(const Leaderboard& board,
                                         const std::vector<LearnerSpec>& specs, int top_k);

}  // namespace tabens
