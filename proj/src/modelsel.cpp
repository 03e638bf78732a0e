#include "tabens/modelsel.hpp"

#include <algorithm>
#include <atomic>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

namespace tabens {

std::vector<std::vector<int>> stratified_folds(const std::vector<int>& labels, int k,
                                               std::uint64_t seed) {
  if (k < 2) throw ConfigError("stratified_folds: k must be >= 2");
  int n_classes = 0;
  for (int y : labels) n_classes = std::max(n_classes, y + 1);

  std::vector<std::vector<int>> members(static_cast<std::size_t>(n_classes));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    members[static_cast<std::size_t>(labels[i])].push_back(static_cast<int>(i));
  }

  Rng rng(seed);
  std::vector<std::vector<int>> folds(static_cast<std::size_t>(k));
  for (int c = 0; c < n_classes; ++c) {
    auto& rows = members[static_cast<std::size_t>(c)];
    if (static_cast<int>(rows.size()) < k) {
      throw DataError("stratified_folds: class " + std::to_string(c) + " has " +
                      std::to_string(rows.size()) + " members, fewer than k=" + std::to_string(k));
    }
    rng.shuffle(rows);
    // Deal contiguous chunks; the start fold rotates by class so the extra
    // members do not pile up in fold 0.
    const long m = static_cast<long>(rows.size());
    const long base = m / k;
    const long extra = m % k;
    std::size_t pos = 0;
    for (long f = 0; f < k; ++f) {
      const long fold = (f + c) % k;
      const long take = base + (f < extra ? 1 : 0);
      for (long t = 0; t < take; ++t) {
        folds[static_cast<std::size_t>(fold)].push_back(rows[pos++]);
      }
    }
  }
  for (auto& fold : folds) std::sort(fold.begin(), fold.end());
  return folds;
}

double metric_value(const MetricBundle& m, const std::string& name) {
  if (name == "accuracy") return m.accuracy;
  if (name == "precision_macro") return m.precision_macro;
  if (name == "recall_macro") return m.recall_macro;
  if (name == "f1_macro") return m.f1_macro;
  if (name == "roc_auc") return m.roc_auc_ovr_macro.value_or(0.0);
  if (name == "average_precision") return m.average_precision_macro.value_or(0.0);
  throw ConfigError("unknown metric name: " + name);
}

CVResult cross_validate(const LearnerSpec& spec, const DataTable& table,
                        const std::vector<std::vector<int>>& folds, std::uint64_t seed) {
  CVResult result;
  result.spec_id = spec.id;
  result.family = spec.family;
  result.params_text = spec.params_as_text();

  const int k = static_cast<int>(folds.size());
  for (int f = 0; f < k; ++f) {
    std::vector<int> train_rows;
    for (int g = 0; g < k; ++g) {
      if (g == f) continue;
      train_rows.insert(train_rows.end(), folds[static_cast<std::size_t>(g)].begin(),
                        folds[static_cast<std::size_t>(g)].end());
    }
    std::sort(train_rows.begin(), train_rows.end());

    const DataTable train = table.select_rows(train_rows);
    const DataTable eval = table.select_rows(folds[static_cast<std::size_t>(f)]);

    int distinct = 0;
    {
      std::vector<bool> seen(static_cast<std::size_t>(table.n_classes()), false);
      for (int y : train.labels) seen[static_cast<std::size_t>(y)] = true;
      for (bool s : seen) distinct += s ? 1 : 0;
    }
    if (distinct < 2) {
      throw NumericError("cross_validate: fold " + std::to_string(f) +
                         " training data collapsed to one class");
    }

    const auto model = fit(spec, train.features, train.labels, table.n_classes(), seed);
    const std::vector<int> pred = model->predict(eval.features);
    const Matrix proba = model->predict_proba(eval.features);
    result.fold_metrics.push_back(
        evaluate_predictions(eval.labels, pred, table.n_classes(), &proba));
  }

  MetricBundle mean;
  double auc_sum = 0.0, ap_sum = 0.0;
  for (const auto& m : result.fold_metrics) {
    mean.accuracy += m.accuracy;
    mean.precision_macro += m.precision_macro;
    mean.recall_macro += m.recall_macro;
    mean.f1_macro += m.f1_macro;
    auc_sum += m.roc_auc_ovr_macro.value_or(0.0);
    ap_sum += m.average_precision_macro.value_or(0.0);
  }
  const double kd = static_cast<double>(k);
  mean.accuracy /= kd;
  mean.precision_macro /= kd;
  mean.recall_macro /= kd;
  mean.f1_macro /= kd;
  mean.roc_auc_ovr_macro = auc_sum / kd;
  mean.average_precision_macro = ap_sum / kd;
  result.mean = mean;
  return result;
}

Leaderboard rank_results(std::vector<CVResult> results, const std::vector<std::string>& scoring) {
  if (scoring.empty()) throw ConfigError("rank_results: scoring list is empty");
  std::stable_sort(results.begin(), results.end(), [&](const CVResult& a, const CVResult& b) {
    for (const auto& key : scoring) {
      const double va = metric_value(a.mean, key);
      const double vb = metric_value(b.mean, key);
      if (va != vb) return va > vb;
    }
    return a.spec_id < b.spec_id;
  });
  Leaderboard board;
  board.rows = std::move(results);
  board.scoring = scoring;
  return board;
}

Leaderboard run_sweep(const SweepConfig& config, const DataTable& table) {
  if (config.specs.empty()) throw ConfigError("run_sweep: no specs configured");
  {
    std::set<std::string> ids;
    for (const auto& spec : config.specs) {
      if (!ids.insert(spec.id).second) {
        throw ConfigError("run_sweep: duplicate spec id " + spec.id);
      }
    }
  }
  const auto folds = stratified_folds(table.labels, config.folds, config.seed);

  std::vector<CVResult> results(config.specs.size());
  const int workers = std::max(1, config.threads);
  if (workers == 1) {
    for (std::size_t s = 0; s < config.specs.size(); ++s) {
      results[s] = cross_validate(config.specs[s], table, folds, config.seed);
    }
  } else {
    // Results land in per-spec slots, so completion order cannot matter.
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          while (true) {
            const std::size_t s = next.fetch_add(1);
            if (s >= config.specs.size()) break;
            results[s] = cross_validate(config.specs[s], table, folds, config.seed);
          }
        } catch (...) {
          errors[static_cast<std::size_t>(w)] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  return rank_results(std::move(results), config.scoring);
}

std::vector<LearnerSpec> rank_and_select(const Leaderboard& board,
                                         const std::vector<LearnerSpec>& specs, int top_k) {
  if (top_k > static_cast<int>(board.rows.size())) {
    throw ConfigError("rank_and_select: top_k exceeds result count");
  }
  // One spec per family: each family is represented by its best-ranked
  // config, and the top_k families win. Sibling configs of one family
  // cluster tightly, so a flat top-k would just take one family's variants.
  std::vector<LearnerSpec> out;
  std::set<Family> taken;
  for (const auto& row : board.rows) {
    if (static_cast<int>(out.size()) == top_k) break;
    if (taken.count(row.family)) continue;
    const auto it = std::find_if(specs.begin(), specs.end(),
                                 [&](const LearnerSpec& s) { return s.id == row.spec_id; });
    if (it == specs.end()) {
      throw ConfigError("rank_and_select: spec id " + row.spec_id + " not found");
    }
    taken.insert(row.family);
    out.push_back(*it);
  }
  if (static_cast<int>(out.size()) < top_k) {
    throw ConfigError("rank_and_select: fewer families than top_k");
  }
  return out;
}

namespace {

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(9);
  os << std::fixed << v;
  return os.str();
}

}  // namespace

std::string Leaderboard::to_csv() const {
  std::ostringstream os;
  os << "id,family,params,roc_auc,average_precision,accuracy,f1_macro\n";
  for (const auto& row : rows) {
    os << row.spec_id << ',' << family_name(row.family) << ",\"" << row.params_text << "\","
       << format_double(row.mean.roc_auc_ovr_macro.value_or(0.0)) << ','
       << format_double(row.mean.average_precision_macro.value_or(0.0)) << ','
       << format_double(row.mean.accuracy) << ',' << format_double(row.mean.f1_macro) << '\n';
  }
  return os.str();
}

nlohmann::json Leaderboard::to_json() const {
  nlohmann::json out;
  out["scoring"] = scoring;
  nlohmann::json rows_json = nlohmann::json::array();
  for (const auto& row : rows) {
    nlohmann::json jr;
    jr["id"] = row.spec_id;
    jr["family"] = family_name(row.family);
    jr["params"] = row.params_text;
    auto bundle_json = [](const MetricBundle& m) {
      nlohmann::json jb;
      jb["accuracy"] = m.accuracy;
      jb["precision_macro"] = m.precision_macro;
      jb["recall_macro"] = m.recall_macro;
      jb["f1_macro"] = m.f1_macro;
      if (m.roc_auc_ovr_macro) jb["roc_auc"] = *m.roc_auc_ovr_macro;
      if (m.average_precision_macro) jb["average_precision"] = *m.average_precision_macro;
      return jb;
    };
    jr["mean"] = bundle_json(row.mean);
    nlohmann::json folds = nlohmann::json::array();
    for (const auto& m : row.fold_metrics) folds.push_back(bundle_json(m));
    jr["folds"] = std::move(folds);
    rows_json.push_back(std::move(jr));
  }
  out["rows"] = std::move(rows_json);
  return out;
}

}  // namespace tabens
