#pragma once

#include "tabens/config.hpp"
#include "tabens/ensemble.hpp"
#include "tabens/metrics.hpp"
#include "tabens/modelsel.hpp"

namespace tabens {

/// Confusion matrix plus metric bundle for one model on one partition.
struct EvaluationReport {
  std::string model_name;
  MetricBundle train;
  MetricBundle test;
  ConfusionMatrix test_confusion;
  bool has_probabilities = true;
};

struct RunReport {
  Leaderboard leaderboard;
  std::vector<std::string> selected_ids;            // top-k, rank order
  std::vector<EvaluationReport> models;             // 3 bases + 3 ensembles
  Vector vote_weights;                              // weighted-vote weights
  std::string most_correlated_feature;
  double most_correlated_value = 0.0;
  OutlierReport outliers;
  Warnings warnings;

  // Provenance.
  std::uint64_t config_hash = 0;
  std::string config_path;
  std::uint64_t dataset_hash = 0;
  double wall_clock_seconds = 0.0;
  std::string artifact_version;

  nlohmann::json metrics_json() const;      // everything reproducible
  nlohmann::json provenance_json() const;   // includes wall clock
};

struct PipelineOptions {
  int threads = 1;
  int log_level = 1;  // 0 silent, 1 progress, 2 verbose
  std::optional<std::uint64_t> seed_override;
};

/// Full pipeline: load -> encode -> split -> scale -> resample -> sweep ->
/// top-k select -> ensembles -> test evaluation. Stage errors propagate with
/// stage context; partial outputs land in <output>/quarantine.
RunReport run_pipeline(const RunConfig& config, const PipelineOptions& options);

/// Writes leaderboard.csv, metrics.json, confusion_<model>.csv per model and
/// provenance.json; returns the file list.
std::vector<std::string> emit_report(const RunReport& report, const std::string& directory);

/// Prepared data shared by the pipeline stages (exposed for `sweep`/`inspect`).
struct PreparedData {
  DataTable train;
  DataTable validation;
  DataTable test;
  DataTable full;  // encoded + scaled, before partitioning
  ScalerParams scaler;
  bool scaled = false;
  OutlierReport outliers;
  std::string top_feature;
  double top_feature_corr = 0.0;
  std::uint64_t dataset_hash = 0;
};

PreparedData prepare_data(const RunConfig& config, const PipelineOptions& options);

}  // namespace tabens
