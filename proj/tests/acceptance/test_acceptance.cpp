// Acceptance suite: one pass/fail line per criterion, nonzero exit if any
// criterion fails. The heavyweight criteria (7-9) run the two bundled
// dataset configs end to end, so this binary takes several minutes.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <set>
#include <thread>

#include "tabens/ensemble.hpp"
#include "tabens/mlp.hpp"
#include "tabens/pipeline.hpp"
#include "tabens/resample.hpp"
#include "tabens/synthdata.hpp"

using namespace tabens;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int criterion, bool pass, const std::string& label, const std::string& detail = "") {
  std::printf("%s  criterion %d: %s%s%s\n", pass ? "PASS" : "FAIL", criterion, label.c_str(),
              detail.empty() ? "" : " -- ", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

double elapsed_seconds(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- criterion 1: metric oracles -----------------------------------------

struct HandMetrics {
  double accuracy, precision, recall, f1;
};

HandMetrics metrics_by_hand(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                            int k) {
  HandMetrics out{0, 0, 0, 0};
  long correct = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) correct += y_true[i] == y_pred[i] ? 1 : 0;
  out.accuracy = static_cast<double>(correct) / static_cast<double>(y_true.size());
  for (int c = 0; c < k; ++c) {
    long tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
      if (y_pred[i] == c && y_true[i] == c) ++tp;
      if (y_pred[i] == c && y_true[i] != c) ++fp;
      if (y_pred[i] != c && y_true[i] == c) ++fn;
    }
    const double p = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
    const double r = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
    out.precision += p;
    out.recall += r;
    out.f1 += p + r > 0 ? 2.0 * p * r / (p + r) : 0.0;
  }
  out.precision /= k;
  out.recall /= k;
  out.f1 /= k;
  return out;
}

double auc_pair_oracle(const std::vector<int>& pos, const std::vector<double>& score) {
  double won = 0.0;
  long pairs = 0;
  for (std::size_t i = 0; i < pos.size(); ++i) {
    if (!pos[i]) continue;
    for (std::size_t j = 0; j < pos.size(); ++j) {
      if (pos[j]) continue;
      ++pairs;
      if (score[i] > score[j]) won += 1.0;
      if (score[i] == score[j]) won += 0.5;
    }
  }
  return won / static_cast<double>(pairs);
}

void criterion_1() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(1001);
  bool exact_ok = true;
  bool auc_ok = true;
  for (int trial = 0; trial < 500; ++trial) {
    const int k = 2 + rng.below(4);   // K <= 5
    const int n = 4 + rng.below(47);  // n <= 50
    std::vector<int> y_true, y_pred;
    for (int i = 0; i < n; ++i) {
      y_true.push_back(rng.below(k));
      y_pred.push_back(rng.below(k));
    }
    const HandMetrics expect = metrics_by_hand(y_true, y_pred, k);
    const MetricBundle got = evaluate_predictions(y_true, y_pred, k);
    exact_ok &= got.accuracy == expect.accuracy;
    exact_ok &= got.precision_macro == expect.precision;
    exact_ok &= got.recall_macro == expect.recall;
    exact_ok &= got.f1_macro == expect.f1;

    std::vector<int> pos;
    std::vector<double> score;
    bool has_pos = false, has_neg = false;
    for (int i = 0; i < n; ++i) {
      pos.push_back(rng.below(2));
      score.push_back(rng.below(10) / 10.0);  // coarse grid -> ties
      has_pos |= pos.back() == 1;
      has_neg |= pos.back() == 0;
    }
    if (has_pos && has_neg) {
      auc_ok &= std::abs(binary_roc_auc(pos, score) - auc_pair_oracle(pos, score)) <= 1e-12;
    }
  }
  const double secs = elapsed_seconds(t0);
  report(1, exact_ok && auc_ok && secs < 10.0, "metric oracle equivalence (500 instances)",
         "exact=" + std::string(exact_ok ? "yes" : "no") +
             " auc<=1e-12=" + std::string(auc_ok ? "yes" : "no") + " runtime=" +
             std::to_string(secs) + "s");
}

// ---- criterion 2: voting oracles -----------------------------------------

std::vector<int> vote_oracle(const std::vector<std::vector<int>>& preds, const Vector& weights,
                             int classes) {
  std::vector<int> out(preds[0].size());
  for (std::size_t r = 0; r < preds[0].size(); ++r) {
    std::vector<double> score(static_cast<std::size_t>(classes), 0.0);
    for (std::size_t m = 0; m < preds.size(); ++m) {
      score[static_cast<std::size_t>(preds[m][r])] += weights(static_cast<Eigen::Index>(m));
    }
    double best = score[0];
    for (double s : score) best = std::max(best, s);
    int winner = -1;
    for (std::size_t m = 0; m < preds.size() && winner < 0; ++m) {
      if (score[static_cast<std::size_t>(preds[m][r])] == best) winner = preds[m][r];
    }
    out[r] = winner;
  }
  return out;
}

void criterion_2() {
  Rng rng(2002);
  bool ok = true;
  for (int trial = 0; trial < 1000 && ok; ++trial) {
    const int members = 1 + rng.below(5);
    const int classes = 2 + rng.below(6);  // <= 7
    const int rows = 1 + rng.below(10);
    std::vector<std::vector<int>> preds(static_cast<std::size_t>(members));
    for (auto& p : preds) {
      for (int r = 0; r < rows; ++r) p.push_back(rng.below(classes));
    }
    Vector weights(members);
    for (int m = 0; m < members; ++m) weights(m) = 0.05 + rng.uniform();
    const Vector ones = Vector::Ones(members);

    ok &= weighted_hard_vote(preds, weights, classes) == vote_oracle(preds, weights, classes);
    ok &= majority_hard_vote(preds, classes) == vote_oracle(preds, ones, classes);
    ok &= weighted_hard_vote(preds, ones, classes) == majority_hard_vote(preds, classes);
  }
  report(2, ok, "voting brute-force equivalence (1000 instances incl. ties)");
}

// ---- criterion 3: SMOTE properties ----------------------------------------

void criterion_3(const DataTable& d1, const DataTable& d2) {
  bool ok = true;
  std::string detail;

  struct Case {
    const DataTable* table;
    long expected_majority;
    const char* name;
  };
  const DataTable* tables[2] = {&d1, &d2};
  const long expected[2] = {658, 351};
  const char* names[2] = {"dataset1", "dataset2"};

  for (int t = 0; t < 2; ++t) {
    SmoteConfig cfg;
    cfg.k_neighbors = 5;
    cfg.seed = 0;
    std::vector<SmoteProvenance> prov;
    const DataTable out = smote_resample(*tables[t], cfg, &prov);

    const auto counts = out.class_counts();
    for (long c : counts) ok &= c == expected[t];

    // Segment equation against the recorded lambda and endpoints.
    const int originals = tables[t]->n_rows();
    double worst = 0.0;
    for (std::size_t s = 0; s < prov.size(); ++s) {
      const auto row = out.features.row(originals + static_cast<Eigen::Index>(s));
      const auto a = tables[t]->features.row(prov[s].source_row);
      const auto b = tables[t]->features.row(prov[s].neighbor_row);
      worst = std::max(worst, (row - (a + prov[s].lambda * (b - a))).norm());
      ok &= prov[s].lambda >= 0.0 && prov[s].lambda < 1.0;
      ok &= out.labels[static_cast<std::size_t>(originals) + s] ==
            tables[t]->labels[static_cast<std::size_t>(prov[s].source_row)];
    }
    ok &= worst <= 1e-9;

    // Fixed seed reproduces bytes.
    const DataTable again = smote_resample(*tables[t], cfg);
    ok &= again.features == out.features && again.labels == out.labels;
    detail += std::string(names[t]) + ": majority=" + std::to_string(expected[t]) +
              " worst_residual=" + std::to_string(worst) + "  ";
  }
  report(3, ok, "SMOTE balancing, segment equation, byte determinism", detail);
}

// ---- criterion 4: MLP gradient check --------------------------------------

// Central differences are only valid where the loss is differentiable: a
// ReLU pre-activation within a hair of zero flips state inside the +-eps
// window and invalidates the probe. Draws are re-sampled until every hidden
// pre-activation clears a margin, which the eps perturbation cannot cross.
bool relu_margins_clear(const MlpState& net, const Matrix& x, double margin) {
  Matrix h = x;
  for (int l = 0; l + 1 < net.layer_count(); ++l) {
    Matrix z = h * net.weights[static_cast<std::size_t>(l)];
    z.rowwise() += net.biases[static_cast<std::size_t>(l)].transpose();
    if (z.cwiseAbs().minCoeff() < margin) return false;
    h = z.cwiseMax(0.0);
  }
  return true;
}

void criterion_4() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(4004);
  double max_rel = 0.0;
  const double eps = 1e-5;
  for (int draw = 0; draw < 100; ++draw) {
    MlpState net = mlp_init(4, {8, 8}, 3, rng);
    Matrix x(5, 4);
    Matrix y = Matrix::Zero(5, 3);
    for (int i = 0; i < 5; ++i) {
      for (int j = 0; j < 4; ++j) x(i, j) = rng.uniform(-1.0, 1.0);
      y(i, rng.below(3)) = 1.0;
    }
    if (!relu_margins_clear(net, x, 1e-3)) {
      --draw;  // redraw; the check needs a differentiable neighbourhood
      continue;
    }
    const auto [loss, grads] = mlp_loss_and_gradients(net, x, y);
    (void)loss;
    // Spot-check a deterministic subset of coordinates in every layer; the
    // full (4*8 + 8*8 + 8*3) sweep per draw would still fit the budget but
    // adds nothing.
    for (int l = 0; l < net.layer_count(); ++l) {
      auto& w = net.weights[static_cast<std::size_t>(l)];
      for (int probe = 0; probe < 10; ++probe) {
        const Eigen::Index r = rng.below(static_cast<int>(w.rows()));
        const Eigen::Index c = rng.below(static_cast<int>(w.cols()));
        const double keep = w(r, c);
        w(r, c) = keep + eps;
        const double up = mlp_loss(net, x, y);
        w(r, c) = keep - eps;
        const double down = mlp_loss(net, x, y);
        w(r, c) = keep;
        const double fd = (up - down) / (2.0 * eps);
        const double an = grads.weights[static_cast<std::size_t>(l)](r, c);
        const double rel = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-8});
        max_rel = std::max(max_rel, rel);
      }
      auto& bias = net.biases[static_cast<std::size_t>(l)];
      const Eigen::Index r = rng.below(static_cast<int>(bias.size()));
      const double keep = bias(r);
      bias(r) = keep + eps;
      const double up = mlp_loss(net, x, y);
      bias(r) = keep - eps;
      const double down = mlp_loss(net, x, y);
      bias(r) = keep;
      const double fd = (up - down) / (2.0 * eps);
      const double an = grads.biases[static_cast<std::size_t>(l)](r);
      max_rel = std::max(max_rel, std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-8}));
    }
  }
  const double secs = elapsed_seconds(t0);
  report(4, max_rel < 1e-4 && secs < 30.0, "MLP gradients vs central differences (4-8-8-3)",
         "max_rel=" + std::to_string(max_rel) + " runtime=" + std::to_string(secs) + "s");
}

// ---- criterion 5: boosting monotonicity ------------------------------------

void criterion_5() {
  // 200-row synthetic set with structure plus noise.
  Rng rng(5005);
  Matrix x(200, 4);
  std::vector<int> y;
  for (int i = 0; i < 200; ++i) {
    for (int j = 0; j < 4; ++j) x(i, j) = rng.uniform();
    const double s = x(i, 0) * 2.0 + x(i, 1) - x(i, 2) + rng.normal() * 0.3;
    y.push_back(s < 0.7 ? 0 : (s < 1.7 ? 1 : 2));
  }

  LearnerSpec gb;
  gb.id = "gb50";
  gb.family = Family::GradientBoosting;
  gb.params["n_estimators"] = 50.0;
  const auto gb_model = fit(gb, x, y, 3, 0);
  const auto curve = gb_model->training_curve();
  bool monotone = curve.size() >= 2;
  for (std::size_t i = 1; i < curve.size(); ++i) monotone &= curve[i] <= curve[i - 1] + 1e-12;

  bool weights_ok = true;
  for (const char* algorithm : {"SAMME", "SAMME.R"}) {
    LearnerSpec ada;
    ada.id = "ada";
    ada.family = Family::AdaBoost;
    ada.params["n_estimators"] = 30.0;
    ada.params["algorithm"] = std::string(algorithm);
    ada.params["learning_rate"] = 2.0;
    const auto model = fit(ada, x, y, 3, 0);
    const auto sums = model->training_curve();
    weights_ok &= !sums.empty();
    for (double s : sums) weights_ok &= std::abs(s - 1.0) <= 1e-12;
  }
  report(5, monotone && weights_ok, "boosting: GB loss non-increasing, Ada weights sum to 1",
         "gb_stages=" + std::to_string(curve.size() - 1));
}

// ---- criterion 6: stratification -------------------------------------------

void criterion_6(const DataTable& d1, const DataTable& d2) {
  bool ok = true;
  for (const DataTable* table : {&d1, &d2}) {
    const auto folds = stratified_folds(table->labels, 10, 0);
    const auto counts = table->class_counts();
    for (int c = 0; c < table->n_classes(); ++c) {
      const double expect = static_cast<double>(counts[static_cast<std::size_t>(c)]) / 10.0;
      for (const auto& fold : folds) {
        long in_fold = 0;
        for (int r : fold) in_fold += table->labels[static_cast<std::size_t>(r)] == c ? 1 : 0;
        ok &= std::abs(static_cast<double>(in_fold) - expect) < 1.0;
      }
    }
  }
  report(6, ok, "10-fold stratification within 1 of count(c)/10 on both datasets");
}

// ---- criteria 7-9: end-to-end reproduction ---------------------------------

struct RunOutcome {
  RunReport report;
  double seconds = 0.0;
};

RunOutcome run_config(const std::string& config_path, const std::string& out_dir) {
  RunConfig cfg = load_run_config(config_path);
  cfg.output.dir = out_dir;
  PipelineOptions options;
  options.log_level = 1;
  const unsigned hw = std::thread::hardware_concurrency();
  options.threads = hw == 0 ? 1 : static_cast<int>(hw);
  RunOutcome out;
  const auto t0 = std::chrono::steady_clock::now();
  out.report = run_pipeline(cfg, options);
  out.seconds = elapsed_seconds(t0);
  return out;
}

double model_accuracy(const RunReport& report, const std::string& name) {
  for (const auto& m : report.models) {
    if (m.model_name == name) return m.test.accuracy;
  }
  throw std::runtime_error("model missing from report: " + name);
}

double worst_base_accuracy(const RunReport& report) {
  double worst = 1.0;
  for (std::size_t i = 0; i < report.selected_ids.size(); ++i) {
    worst = std::min(worst, report.models[i].test.accuracy);
  }
  return worst;
}

void criteria_7_8_9(const std::string& source_dir) {
  const std::string d1_cfg = source_dir + "/data/dataset1.toml";
  const std::string d2_cfg = source_dir + "/data/dataset2.toml";
  const std::string tmp = (fs::temp_directory_path() / "tabens_acceptance").string();
  fs::remove_all(tmp);

  const RunOutcome d1 = run_config(d1_cfg, tmp + "/d1");
  const RunOutcome d2 = run_config(d2_cfg, tmp + "/d2");
  const double total_minutes = (d1.seconds + d2.seconds) / 60.0;

  // criterion 7: reproduction bands
  {
    const double d1_weighted = model_accuracy(d1.report, "weighted_hard_voting");
    const double d1_stacking = model_accuracy(d1.report, "ensemble_stacking_mlp");
    const double d1_majority = model_accuracy(d1.report, "majority_hard_voting");
    const double d2_stacking = model_accuracy(d2.report, "ensemble_stacking_mlp");
    const double d2_majority = model_accuracy(d2.report, "majority_hard_voting");
    const double d2_weighted = model_accuracy(d2.report, "weighted_hard_voting");

    bool ok = true;
    ok &= std::abs(d1_weighted - 0.9203) <= 0.05;
    ok &= std::abs(d1_stacking - 0.9203) <= 0.05;
    ok &= std::abs(d2_stacking - 0.9898) <= 0.04;
    ok &= d2_stacking >= d2_majority - 0.01;
    ok &= d1_majority >= worst_base_accuracy(d1.report) - 0.02;
    ok &= d1_weighted >= worst_base_accuracy(d1.report) - 0.02;
    ok &= d1_stacking >= worst_base_accuracy(d1.report) - 0.02;
    ok &= d2_majority >= worst_base_accuracy(d2.report) - 0.02;
    ok &= d2_weighted >= worst_base_accuracy(d2.report) - 0.02;
    ok &= d2_stacking >= worst_base_accuracy(d2.report) - 0.02;
    ok &= total_minutes < 30.0;

    char detail[256];
    std::snprintf(detail, sizeof(detail),
                  "d1 weighted=%.4f stacking=%.4f (target 0.9203 +- 0.05); d2 stacking=%.4f "
                  "(target 0.9898 +- 0.04) majority=%.4f; runtime=%.1f min",
                  d1_weighted, d1_stacking, d2_stacking, d2_majority, total_minutes);
    report(7, ok, "desk-scale reproduction bands", detail);
  }

  // criterion 8: determinism of a full rerun
  {
    const RunOutcome d1_again = run_config(d1_cfg, tmp + "/d1_again");
    const bool ok =
        d1.report.metrics_json().dump() == d1_again.report.metrics_json().dump();
    report(8, ok, "identical metrics.json across two full runs");
  }

  // criterion 9: family-level ordering sanity of the SELECTED top-3
  {
    auto selected_family = [](const RunReport& r, std::size_t idx) {
      const std::string& id = r.selected_ids[idx];
      for (const auto& row : r.leaderboard.rows) {
        if (row.spec_id == id) return family_name(row.family);
      }
      return std::string("unknown");
    };
    std::set<std::string> d2_top3{selected_family(d2.report, 0), selected_family(d2.report, 1),
                                  selected_family(d2.report, 2)};
    const std::set<std::string> want{"gradient_boosting", "random_forest", "linear_svc"};
    const bool d2_ok = d2_top3 == want;
    const bool d1_ok = selected_family(d1.report, 0) == "random_forest";
    std::string detail = "d1 first=" + selected_family(d1.report, 0) + "; d2 top3={";
    for (const auto& f : d2_top3) detail += f + ",";
    detail += "}";
    report(9, d1_ok && d2_ok, "family ordering vs reference tables", detail);
  }
}

}  // namespace

int main() {
  const std::string source_dir = TABENS_SOURCE_DIR;

  // Criteria 3 and 6 run on the bundled datasets (scaled the way the
  // pipeline would feed SMOTE).
  RunConfig d1_cfg = load_run_config(source_dir + "/data/dataset1.toml");
  RunConfig d2_cfg = load_run_config(source_dir + "/data/dataset2.toml");
  d1_cfg.dataset.path = source_dir + "/" + d1_cfg.dataset.path;
  d2_cfg.dataset.path = source_dir + "/" + d2_cfg.dataset.path;

  DataTable d1 = load_csv(d1_cfg.dataset.path, d1_cfg.dataset.schema);
  DataTable d2 = load_csv(d2_cfg.dataset.path, d2_cfg.dataset.schema);
  {
    std::vector<int> all1(static_cast<std::size_t>(d1.n_rows()));
    std::iota(all1.begin(), all1.end(), 0);
    d1 = apply_scaler(d1, fit_scaler(d1, all1));
    std::vector<int> all2(static_cast<std::size_t>(d2.n_rows()));
    std::iota(all2.begin(), all2.end(), 0);
    d2 = apply_scaler(d2, fit_scaler(d2, all2));
  }

  criterion_1();
  criterion_2();
  criterion_3(d1, d2);
  criterion_4();
  criterion_5();
  criterion_6(d1, d2);

  // The end-to-end criteria need the bundled configs with paths relative to
  // the source tree.
  const auto previous = fs::current_path();
  fs::current_path(source_dir);
  criteria_7_8_9(source_dir);
  fs::current_path(previous);

  if (failures > 0) {
    std::printf("%d criterion(s) failed\n", failures);
    return 1;
  }
  std::printf("all acceptance criteria passed\n");
  return 0;
}
