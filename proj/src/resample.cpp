#include "tabens/resample.hpp"

#include <algorithm>
#include <numeric>

namespace tabens {

std::vector<int> knn_same_class(const Matrix& features, const std::vector<int>& class_rows, int i,
                                int k) {
  if (static_cast<int>(class_rows.size()) <= k) {
    throw DataError("knn_same_class: k=" + std::to_string(k) + " >= class size " +
                    std::to_string(class_rows.size()));
  }
  std::vector<std::pair<double, int>> dist;
  dist.reserve(class_rows.size() - 1);
  for (int r : class_rows) {
    if (r == i) continue;
    const double d2 = (features.row(r) - features.row(i)).squaredNorm();
    dist.emplace_back(d2, r);
  }
  // (distance, row index) sort gives the ascending-index tie-break for free.
  std::sort(dist.begin(), dist.end());
  std::vector<int> out;
  out.reserve(k);
  for (int t = 0; t < k; ++t) out.push_back(dist[t].second);
  return out;
}

DataTable smote_resample(const DataTable& table, const SmoteConfig& config,
                         std::vector<SmoteProvenance>* provenance) {
  if (provenance) provenance->clear();
  if (table.n_rows() == 0) throw DataError("smote_resample: empty table");
  if (config.k_neighbors < 1) throw ConfigError("smote_resample: k_neighbors must be >= 1");

  const auto counts = table.class_counts();
  const long majority = *std::max_element(counts.begin(), counts.end());

  std::vector<std::vector<int>> members(table.n_classes());
  for (int i = 0; i < table.n_rows(); ++i) members[table.labels[i]].push_back(i);

  long total_deficit = 0;
  for (int c = 0; c < table.n_classes(); ++c) {
    const long deficit = majority - counts[c];
    if (deficit > 0 && counts[c] <= config.k_neighbors) {
      throw DataError("smote_resample: class " + std::to_string(c) + " has " +
                      std::to_string(counts[c]) + " members, need > k_neighbors=" +
                      std::to_string(config.k_neighbors));
    }
    total_deficit += deficit;
  }
  if (total_deficit == 0) return table;

  DataTable out;
  out.schema = table.schema;
  out.class_names = table.class_names;
  out.feature_categories = table.feature_categories;
  out.features.resize(table.n_rows() + total_deficit, table.n_features());
  out.features.topRows(table.n_rows()) = table.features;
  out.labels = table.labels;
  out.labels.reserve(table.labels.size() + static_cast<std::size_t>(total_deficit));

  Rng rng(config.seed);
  Eigen::Index next = table.n_rows();
  for (int c = 0; c < table.n_classes(); ++c) {
    const long deficit = majority - counts[c];
    if (deficit <= 0) continue;
    const auto& rows = members[c];

    // Neighbor lists are static for the class; compute once per source row.
    std::vector<std::vector<int>> neighbors(rows.size());
    for (std::size_t s = 0; s < rows.size(); ++s) {
      neighbors[s] = knn_same_class(table.features, rows, rows[s], config.k_neighbors);
    }

    for (long t = 0; t < deficit; ++t) {
      const int s = static_cast<int>(t % static_cast<long>(rows.size()));
      const auto& nn = neighbors[s];
      const int pick = nn[rng.below(static_cast<int>(nn.size()))];
      const double lambda = rng.uniform();
      out.features.row(next) =
          table.features.row(rows[s]) +
          lambda * (table.features.row(pick) - table.features.row(rows[s]));
      out.labels.push_back(c);
      if (provenance) provenance->push_back({rows[s], pick, lambda});
      ++next;
    }
  }
  return out;
}

}  // namespace tabens
