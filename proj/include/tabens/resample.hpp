#pragma once

#include "tabens/core.hpp"
#include "tabens/tabular.hpp"

namespace tabens {

enum class ResampleScope { TrainOnly, TrainAndEval };

struct SmoteConfig {
  int k_neighbors = 5;
  std::uint64_t seed = 0;
  ResampleScope scope = ResampleScope::TrainOnly;
};

/// The k same-class rows nearest to row `i` (Euclidean), excluding `i`;
/// ties broken by ascending row index.
std::vector<int> knn_same_class(const Matrix& features, const std::vector<int>& class_rows, int i,
                                int k);

/// How one synthetic row was built: indexes into the ORIGINAL table rows.
struct SmoteProvenance {
  int source_row = -1;
  int neighbor_row = -1;
  double lambda = 0.0;
};

/// SMOTE: raise every class to the majority count. Synthetic rows are
/// x_i + lambda * (x_nn - x_i) with lambda ~ U[0,1) from the seeded stream.
/// Original rows are preserved unchanged and come first in row order.
/// `provenance`, when given, records one entry per synthetic row in order.
DataTable smote_resample(const DataTable& table, const SmoteConfig& config,
                         std::vector<SmoteProvenance>* provenance = nullptr);

}  // namespace tabens
