#pragma once

#include <array>
#include <string>

#include "json.hpp"
#include "tabens/ensemble.hpp"
#include "tabens/modelsel.hpp"
#include "tabens/resample.hpp"
#include "tabens/tabular.hpp"

namespace tabens {

/// Minimal TOML subset: [section], [[array-of-tables]], key = value with
/// strings, numbers, booleans and flat arrays, # comments. Returns the
/// document as a JSON tree. Errors carry line numbers.
nlohmann::json parse_toml(const std::string& text);

struct DatasetConfig {
  std::string path;
  std::vector<ColumnSchema> schema;  // ordered, matches the CSV header
};

struct SplitConfig {
  std::array<double, 3> ratios{0.6, 0.2, 0.2};
  std::uint64_t seed = 0;
};

struct ResampleConfig {
  bool enabled = true;
  SmoteConfig smote;
};

struct EnsembleConfig {
  std::string weight_metric = "accuracy";  // validation metric behind vote weights
  StackingConfig stacking;
};

struct OutputConfig {
  std::string dir = "out";
  bool save_models = false;
};

struct RunConfig {
  DatasetConfig dataset;
  SplitConfig split;
  bool scale_enabled = true;
  ResampleConfig resample;
  SweepConfig sweep;
  int top_k = 3;
  EnsembleConfig ensemble;
  OutputConfig output;

  std::string raw_bytes;     // exact file contents, hashed for provenance
  std::string source_path;
};

/// Parses and validates a run-config file; relative dataset/output paths stay
/// relative (resolved against the working directory).
RunConfig load_run_config(const std::string& path);
RunConfig run_config_from_toml(const std::string& text, const std::string& source_path);

}  // namespace tabens
