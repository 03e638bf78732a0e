#include "tabens/tabular.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_map>

namespace tabens {

std::vector<long> DataTable::class_counts() const {
  std::vector<long> counts(class_names.size(), 0);
  for (int y : labels) ++counts[y];
  return counts;
}

DataTable DataTable::select_rows(const std::vector<int>& rows) const {
  DataTable out;
  out.schema = schema;
  out.class_names = class_names;
  out.feature_categories = feature_categories;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
  out.labels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.features.row(static_cast<Eigen::Index>(i)) = features.row(rows[i]);
    out.labels.push_back(labels[rows[i]]);
  }
  return out;
}

long OutlierReport::total() const {
  long t = 0;
  for (const auto& f : features) t += f.outliers;
  return t;
}

EncodedColumn label_encode(const std::vector<std::string>& values) {
  if (values.empty()) throw DataError("label_encode: empty column");
  EncodedColumn out;
  out.ids.reserve(values.size());
  std::unordered_map<std::string, int> seen;
  for (const auto& v : values) {
    auto it = seen.find(v);
    if (it == seen.end()) {
      const int id = static_cast<int>(out.categories.size());
      seen.emplace(v, id);
      out.categories.push_back(v);
      out.ids.push_back(id);
    } else {
      out.ids.push_back(it->second);
    }
  }
  return out;
}

namespace {

// RFC-4180 record reader: handles quoted fields, embedded commas/newlines,
// doubled quotes, and CRLF line ends. Returns false at end of input.
bool read_record(std::istream& in, std::vector<std::string>& fields) {
  fields.clear();
  std::string field;
  bool in_quotes = false;
  bool any = false;
  int ch;
  while ((ch = in.get()) != EOF) {
    any = true;
    char c = static_cast<char>(ch);
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          field.push_back('"');
          in.get();
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\r') {
      // swallow; the following '\n' terminates the record
    } else if (c == '\n') {
      fields.push_back(std::move(field));
      return true;
    } else {
      field.push_back(c);
    }
  }
  if (!any) return false;
  fields.push_back(std::move(field));
  return true;
}

double parse_cell(const std::string& cell, std::size_t row, const std::string& column) {
  if (cell.empty()) {
    throw DataError("missing value at row " + std::to_string(row) + ", column '" + column + "'");
  }
  double value = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
    throw DataError("unparseable cell '" + cell + "' at row " + std::to_string(row) +
                    ", column '" + column + "'");
  }
  return value;
}

}  // namespace

DataTable load_csv(const std::string& path, const std::vector<ColumnSchema>& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);

  int target_count = 0;
  for (const auto& col : schema) {
    if (col.kind == ColumnKind::Target) ++target_count;
  }
  if (target_count != 1) throw ConfigError("schema must declare exactly one target column");

  std::vector<std::string> header;
  if (!read_record(in, header)) throw DataError("empty file: " + path);
  if (header.size() != schema.size()) {
    throw DataError("header has " + std::to_string(header.size()) + " columns, schema declares " +
                    std::to_string(schema.size()));
  }
  for (std::size_t j = 0; j < schema.size(); ++j) {
    if (header[j] != schema[j].name) {
      throw DataError("header mismatch at column " + std::to_string(j) + ": expected '" +
                      schema[j].name + "', found '" + header[j] + "'");
    }
  }

  // Column readers keep first-appearance encoding state per categorical column.
  struct CatState {
    std::vector<std::string> categories;
    std::unordered_map<std::string, int> ids;
    bool pinned = false;  // categories pre-declared by the schema
  };
  std::vector<CatState> cat(schema.size());
  for (std::size_t j = 0; j < schema.size(); ++j) {
    if (!schema[j].categories.empty()) {
      cat[j].pinned = true;
      cat[j].categories = schema[j].categories;
      for (std::size_t c = 0; c < schema[j].categories.size(); ++c) {
        if (!cat[j].ids.emplace(schema[j].categories[c], static_cast<int>(c)).second) {
          throw ConfigError("duplicate category in schema for column '" + schema[j].name + "'");
        }
      }
    }
  }

  auto encode = [&](std::size_t j, const std::string& cell, std::size_t row) -> int {
    auto& st = cat[j];
    auto it = st.ids.find(cell);
    if (it != st.ids.end()) return it->second;
    if (st.pinned) {
      throw DataError("unknown category '" + cell + "' at row " + std::to_string(row) +
                      ", column '" + schema[j].name + "'");
    }
    const int id = static_cast<int>(st.categories.size());
    st.ids.emplace(cell, id);
    st.categories.push_back(cell);
    return id;
  };

  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::vector<std::string> record;
  std::size_t row_no = 0;
  while (read_record(in, record)) {
    ++row_no;
    if (record.size() == 1 && record[0].empty()) continue;  // trailing blank line
    if (record.size() != schema.size()) {
      throw DataError("row " + std::to_string(row_no) + " has " + std::to_string(record.size()) +
                      " fields, expected " + std::to_string(schema.size()));
    }
    std::vector<double> feat;
    feat.reserve(schema.size() - 1);
    for (std::size_t j = 0; j < schema.size(); ++j) {
      const auto& col = schema[j];
      if (col.kind == ColumnKind::Target) {
        if (record[j].empty()) {
          throw DataError("missing value at row " + std::to_string(row_no) + ", column '" +
                          col.name + "'");
        }
        labels.push_back(encode(j, record[j], row_no));
      } else if (col.kind == ColumnKind::Categorical) {
        if (record[j].empty()) {
          throw DataError("missing value at row " + std::to_string(row_no) + ", column '" +
                          col.name + "'");
        }
        feat.push_back(static_cast<double>(encode(j, record[j], row_no)));
      } else {
        feat.push_back(parse_cell(record[j], row_no, col.name));
      }
    }
    rows.push_back(std::move(feat));
  }
  if (rows.empty()) throw DataError("no data rows in " + path);

  DataTable table;
  table.features.resize(static_cast<Eigen::Index>(rows.size()),
                        static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      table.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  table.labels = std::move(labels);

  int feature_idx = 0;
  for (std::size_t j = 0; j < schema.size(); ++j) {
    const auto& col = schema[j];
    if (col.kind == ColumnKind::Target) {
      table.class_names = cat[j].categories;
    } else {
      table.schema.push_back(col);
      if (col.kind == ColumnKind::Categorical) {
        table.feature_categories[feature_idx] = cat[j].categories;
      }
      ++feature_idx;
    }
  }
  return table;
}

ScalerParams fit_scaler(const DataTable& table, const std::vector<int>& rows) {
  if (rows.empty()) throw DataError("fit_scaler: empty row list");
  const int d = table.n_features();
  ScalerParams p;
  p.minimum = Vector::Constant(d, std::numeric_limits<double>::infinity());
  p.maximum = Vector::Constant(d, -std::numeric_limits<double>::infinity());
  for (int r : rows) {
    p.minimum = p.minimum.cwiseMin(table.features.row(r).transpose());
    p.maximum = p.maximum.cwiseMax(table.features.row(r).transpose());
  }
  return p;
}

DataTable apply_scaler(const DataTable& table, const ScalerParams& params) {
  if (params.minimum.size() != table.n_features()) {
    throw DataError("apply_scaler: feature count mismatch");
  }
  DataTable out = table;
  for (int j = 0; j < table.n_features(); ++j) {
    const double lo = params.minimum(j);
    const double range = params.maximum(j) - lo;
    if (range == 0.0) {
      out.features.col(j).setZero();
    } else {
      out.features.col(j) = (table.features.col(j).array() - lo) / range;
    }
  }
  return out;
}

SplitIndices stratified_split(const std::vector<int>& labels, const std::array<double, 3>& ratios,
                              std::uint64_t seed) {
  const double ratio_sum = ratios[0] + ratios[1] + ratios[2];
  if (std::abs(ratio_sum - 1.0) > 1e-9) throw ConfigError("split ratios must sum to 1");

  int n_classes = 0;
  for (int y : labels) n_classes = std::max(n_classes, y + 1);
  std::vector<std::vector<int>> members(n_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(static_cast<int>(i));

  Rng rng(seed);
  SplitIndices out;
  for (int c = 0; c < n_classes; ++c) {
    auto& rows = members[c];
    if (rows.size() < 3) {
      throw DataError("stratified_split: class " + std::to_string(c) + " has " +
                      std::to_string(rows.size()) + " members, need >= 3");
    }
    rng.shuffle(rows);

    // Largest-remainder apportionment of this class across the three parts.
    const double m = static_cast<double>(rows.size());
    std::array<long, 3> take{};
    std::array<double, 3> remainder{};
    long assigned = 0;
    for (int p = 0; p < 3; ++p) {
      const double target = m * ratios[p];
      take[p] = static_cast<long>(std::floor(target));
      remainder[p] = target - static_cast<double>(take[p]);
      assigned += take[p];
    }
    std::array<int, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return remainder[a] > remainder[b]; });
    for (long leftover = static_cast<long>(rows.size()) - assigned, p = 0; leftover > 0;
         --leftover, ++p) {
      ++take[order[static_cast<std::size_t>(p % 3)]];
    }
    // Every partition must see every class.
    for (int p = 0; p < 3; ++p) {
      if (take[p] == 0) {
        int donor = (take[0] >= take[1] && take[0] >= take[2]) ? 0 : (take[1] >= take[2] ? 1 : 2);
        --take[donor];
        ++take[p];
      }
    }

    std::size_t pos = 0;
    for (long t = 0; t < take[0]; ++t) out.train.push_back(rows[pos++]);
    for (long t = 0; t < take[1]; ++t) out.validation.push_back(rows[pos++]);
    for (long t = 0; t < take[2]; ++t) out.test.push_back(rows[pos++]);
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.validation.begin(), out.validation.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

namespace {

// Linear-interpolation quantile (the "R-7" rule) on a sorted copy.
double quantile_linear(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = static_cast<std::size_t>(std::ceil(pos));
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

}  // namespace

OutlierReport outlier_scan(const DataTable& table) {
  if (table.n_rows() == 0) throw DataError("outlier_scan: empty table");
  OutlierReport report;
  for (int j = 0; j < table.n_features(); ++j) {
    if (table.schema[j].kind != ColumnKind::Numeric) continue;
    std::vector<double> col(table.features.col(j).data(),
                            table.features.col(j).data() + table.n_rows());
    OutlierReport::Feature f;
    f.name = table.schema[j].name;
    f.q1 = quantile_linear(col, 0.25);
    f.q3 = quantile_linear(col, 0.75);
    const double iqr = f.q3 - f.q1;
    f.lower_fence = f.q1 - 1.5 * iqr;
    f.upper_fence = f.q3 + 1.5 * iqr;
    for (double x : col) {
      if (x < f.lower_fence || x > f.upper_fence) ++f.outliers;
    }
    report.features.push_back(std::move(f));
  }
  return report;
}

std::pair<std::string, double> most_correlated_feature(const DataTable& table) {
  const int n = table.n_rows();
  Vector y(n);
  for (int i = 0; i < n; ++i) y(i) = static_cast<double>(table.labels[i]);
  const double y_mean = y.mean();
  const double y_sd = std::sqrt((y.array() - y_mean).square().sum());

  std::string best_name;
  double best_abs = -1.0;
  double best_corr = 0.0;
  for (int j = 0; j < table.n_features(); ++j) {
    const auto x = table.features.col(j);
    const double x_mean = x.mean();
    const double x_sd = std::sqrt((x.array() - x_mean).square().sum());
    if (x_sd == 0.0 || y_sd == 0.0) continue;
    const double corr = ((x.array() - x_mean) * (y.array() - y_mean)).sum() / (x_sd * y_sd);
    if (std::abs(corr) > best_abs) {
      best_abs = std::abs(corr);
      best_corr = corr;
      best_name = table.schema[j].name;
    }
  }
  return {best_name, best_corr};
}

}  // namespace tabens
