#pragma once

#include <map>
#include <string>
#include <vector>

#include "tabens/core.hpp"

namespace tabens {

enum class ColumnKind { Numeric, Categorical, Target };

struct ColumnSchema {
  std::string name;
  ColumnKind kind = ColumnKind::Numeric;
  // Optional pre-declared category order for categorical/target columns.
  // Empty -> ids assigned by first appearance in file order.
  std::vector<std::string> categories;
};

/// Uniform numeric view of a dataset: encoded feature matrix plus integer
/// class labels. Immutable after construction.
struct DataTable {
  std::vector<ColumnSchema> schema;      // feature columns only, in file order
  Matrix features;                       // n_rows x n_features
  std::vector<int> labels;               // n_rows, in [0, class_names.size())
  std::vector<std::string> class_names;  // label id -> original string
  // Encoding maps for categorical feature columns, keyed by feature index.
  std::map<int, std::vector<std::string>> feature_categories;

  int n_rows() const { return static_cast<int>(features.rows()); }
  int n_features() const { return static_cast<int>(features.cols()); }
  int n_classes() const { return static_cast<int>(class_names.size()); }

  std::vector<long> class_counts() const;

  /// New table containing exactly the given rows, in the given order.
  DataTable select_rows(const std::vector<int>& rows) const;
};

struct ScalerParams {
  Vector minimum;
  Vector maximum;
};

struct SplitIndices {
  std::vector<int> train;
  std::vector<int> validation;
  std::vector<int> test;
};

struct EncodedColumn {
  std::vector<int> ids;
  std::vector<std::string> categories;  // id -> string, invertible
};

struct OutlierReport {
  struct Feature {
    std::string name;
    double q1 = 0.0, q3 = 0.0;
    double lower_fence = 0.0, upper_fence = 0.0;
    long outliers = 0;
  };
  std::vector<Feature> features;  // numeric-kind columns only
  long total() const;
};

/// First-appearance label encoding; the map is invertible.
EncodedColumn label_encode(const std::vector<std::string>& values);

/// RFC-4180 CSV with a header row that must match the schema names in order.
/// Unparseable or missing cells are reported with row/column context.
DataTable load_csv(const std::string& path, const std::vector<ColumnSchema>& schema);

/// Min/max over the given rows only (callers pass the training partition).
ScalerParams fit_scaler(const DataTable& table, const std::vector<int>& rows);

/// x' = (x - min)/(max - min); constant features map to 0; out-of-range
/// inputs are not clipped.
DataTable apply_scaler(const DataTable& table, const ScalerParams& params);

/// Per-class seeded shuffle + largest-remainder apportionment into
/// train/validation/test. Every class needs >= 3 members.
SplitIndices stratified_split(const std::vector<int>& labels, const std::array<double, 3>& ratios,
                              std::uint64_t seed);

/// Flags values outside [Q1 - 1.5 IQR, Q3 + 1.5 IQR] per numeric feature.
/// Quartiles by linear interpolation. Report only, never mutates data.
OutlierReport outlier_scan(const DataTable& table);

/// Feature with maximal |Pearson correlation| to the encoded label.
std::pair<std::string, double> most_correlated_feature(const DataTable& table);

}  // namespace tabens
