#include "tabens/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <thread>

namespace tabens {

namespace {

namespace fs = std::filesystem;

std::uint64_t hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return fnv1a64(buf.str());
}

void log(const PipelineOptions& options, int level, const std::string& message) {
  if (options.log_level >= level) std::cerr << "[tabens] " << message << '\n';
}

nlohmann::json bundle_json(const MetricBundle& m) {
  nlohmann::json j;
  j["accuracy"] = m.accuracy;
  j["precision_macro"] = m.precision_macro;
  j["recall_macro"] = m.recall_macro;
  j["f1_macro"] = m.f1_macro;
  if (m.roc_auc_ovr_macro) j["roc_auc"] = *m.roc_auc_ovr_macro;
  if (m.average_precision_macro) j["average_precision"] = *m.average_precision_macro;
  return j;
}

// One model evaluated on the train and test partitions.
EvaluationReport evaluate_model(const std::string& name, const Model* model,
                                const VotingEnsemble* voter, const StackingEnsemble* stacker,
                                const DataTable& train, const DataTable& test,
                                Warnings* warnings) {
  EvaluationReport report;
  report.model_name = name;

  auto predict = [&](const Matrix& x) {
    if (model) return model->predict(x);
    if (voter) return voter->predict(x);
    return stacker->predict(x);
  };

  const std::vector<int> train_pred = predict(train.features);
  const std::vector<int> test_pred = predict(test.features);

  if (model != nullptr) {
    const Matrix train_proba = model->predict_proba(train.features);
    const Matrix test_proba = model->predict_proba(test.features);
    report.train = evaluate_predictions(train.labels, train_pred, train.n_classes(), &train_proba,
                                        warnings);
    report.test =
        evaluate_predictions(test.labels, test_pred, test.n_classes(), &test_proba, warnings);
  } else {
    // Hard voters and the stacker expose no calibrated probabilities;
    // probability metrics stay absent.
    report.has_probabilities = false;
    report.train =
        evaluate_predictions(train.labels, train_pred, train.n_classes(), nullptr, warnings);
    report.test = evaluate_predictions(test.labels, test_pred, test.n_classes(), nullptr, warnings);
  }
  report.test_confusion =
      confusion_matrix(test.labels, test_pred, test.n_classes(), test.class_names);
  return report;
}

std::string sanitize_name(std::string name) {
  for (char& c : name) {
    if (!std::isalnum(static_cast<unsigned char>(c))) c = '_';
  }
  std::transform(name.begin(), name.end(), name.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return name;
}

}  // namespace

PreparedData prepare_data(const RunConfig& config, const PipelineOptions& options) {
  PreparedData out;
  out.dataset_hash = hash_file(config.dataset.path);

  DataTable table = load_csv(config.dataset.path, config.dataset.schema);
  log(options, 1,
      "loaded " + config.dataset.path + ": " + std::to_string(table.n_rows()) + " rows, " +
          std::to_string(table.n_features()) + " features, " +
          std::to_string(table.n_classes()) + " classes");

  out.outliers = outlier_scan(table);
  const auto [top_name, top_corr] = most_correlated_feature(table);
  out.top_feature = top_name;
  out.top_feature_corr = top_corr;

  const std::uint64_t split_seed =
      options.seed_override.value_or(config.split.seed);
  const std::uint64_t smote_seed =
      options.seed_override.value_or(config.resample.smote.seed);

  const bool paper_protocol =
      config.resample.enabled && config.resample.smote.scope == ResampleScope::TrainAndEval;

  if (paper_protocol) {
    // Paper protocol: scale over all rows, balance the whole table with
    // SMOTE, then split. Synthetic points end up in every partition.
    if (config.scale_enabled) {
      std::vector<int> all_rows(static_cast<std::size_t>(table.n_rows()));
      std::iota(all_rows.begin(), all_rows.end(), 0);
      out.scaler = fit_scaler(table, all_rows);
      out.scaled = true;
      table = apply_scaler(table, out.scaler);
    }
    table = smote_resample(table, SmoteConfig{config.resample.smote.k_neighbors, smote_seed,
                                              ResampleScope::TrainAndEval});
    log(options, 1, "resampled (train_and_eval scope): " + std::to_string(table.n_rows()) + " rows");
    const SplitIndices split = stratified_split(table.labels, config.split.ratios, split_seed);
    out.full = table;
    out.train = table.select_rows(split.train);
    out.validation = table.select_rows(split.validation);
    out.test = table.select_rows(split.test);
  } else {
    // Leakage-safe default: split first, fit the scaler on the training
    // partition only, then SMOTE the training partition alone.
    const SplitIndices split = stratified_split(table.labels, config.split.ratios, split_seed);
    if (config.scale_enabled) {
      out.scaler = fit_scaler(table, split.train);
      out.scaled = true;
      table = apply_scaler(table, out.scaler);
    }
    out.full = table;
    out.train = table.select_rows(split.train);
    out.validation = table.select_rows(split.validation);
    out.test = table.select_rows(split.test);
    if (config.resample.enabled) {
      out.train = smote_resample(out.train, SmoteConfig{config.resample.smote.k_neighbors,
                                                        smote_seed, ResampleScope::TrainOnly});
      log(options, 1, "resampled training partition: " + std::to_string(out.train.n_rows()) + " rows");
    }
  }
  log(options, 1,
      "partitions: train " + std::to_string(out.train.n_rows()) + ", validation " +
          std::to_string(out.validation.n_rows()) + ", test " + std::to_string(out.test.n_rows()));
  return out;
}

RunReport run_pipeline(const RunConfig& config, const PipelineOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  RunReport report;
  report.config_hash = fnv1a64(config.raw_bytes);
  report.config_path = config.source_path;
  report.artifact_version = kArtifactVersion;

  std::string stage = "prepare";
  try {
    const PreparedData data = prepare_data(config, options);
    report.dataset_hash = data.dataset_hash;
    report.outliers = data.outliers;
    report.most_correlated_feature = data.top_feature;
    report.most_correlated_value = data.top_feature_corr;

    stage = "sweep";
    SweepConfig sweep = config.sweep;
    sweep.threads = options.threads;
    if (options.seed_override) sweep.seed = *options.seed_override;
    log(options, 1, "sweeping " + std::to_string(sweep.specs.size()) + " specs, " +
                        std::to_string(sweep.folds) + "-fold CV, " +
                        std::to_string(sweep.threads) + " thread(s)");
    report.leaderboard = run_sweep(sweep, data.train);

    stage = "select";
    const std::vector<LearnerSpec> selected =
        rank_and_select(report.leaderboard, sweep.specs, config.top_k);
    for (const auto& spec : selected) report.selected_ids.push_back(spec.id);
    {
      std::string names;
      for (const auto& id : report.selected_ids) names += id + " ";
      log(options, 1, "selected: " + names);
    }

    stage = "fit_bases";
    std::vector<std::unique_ptr<Model>> bases(selected.size());
    {
      std::atomic<std::size_t> next{0};
      const int workers =
          std::min<int>(std::max(1, options.threads), static_cast<int>(selected.size()));
      std::vector<std::thread> pool;
      std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
      for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
          try {
            while (true) {
              const std::size_t s = next.fetch_add(1);
              if (s >= selected.size()) break;
              bases[s] = fit(selected[s], data.train.features, data.train.labels,
                             data.train.n_classes(), sweep.seed);
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

    stage = "ensembles";
    // Vote weights from validation-partition accuracy, members in rank order.
    std::vector<double> validation_accuracy;
    for (const auto& base : bases) {
      const auto pred = base->predict(data.validation.features);
      const auto bundle =
          evaluate_predictions(data.validation.labels, pred, data.validation.n_classes());
      validation_accuracy.push_back(metric_value(bundle, config.ensemble.weight_metric));
    }
    report.vote_weights = compute_weights(validation_accuracy);

    VotingEnsemble majority;
    VotingEnsemble weighted;
    for (const auto& base : bases) {
      majority.members.push_back(base.get());
      weighted.members.push_back(base.get());
    }
    majority.weights = Vector::Ones(static_cast<Eigen::Index>(bases.size()));
    weighted.weights = report.vote_weights;

    StackingConfig stacking = config.ensemble.stacking;
    stacking.threads = options.threads;
    if (options.seed_override) {
      stacking.seed = *options.seed_override;
      stacking.meta_seed = *options.seed_override;
    }
    log(options, 1, "fitting stacking ensemble (" + std::to_string(stacking.folds) + " folds)");
    const StackingEnsemble stacker = StackingEnsemble::fit(selected, data.train, stacking);

    stage = "evaluate";
    for (std::size_t b = 0; b < bases.size(); ++b) {
      report.models.push_back(evaluate_model(selected[b].id, bases[b].get(), nullptr, nullptr,
                                             data.train, data.test, &report.warnings));
    }
    report.models.push_back(evaluate_model("majority_hard_voting", nullptr, &majority, nullptr,
                                           data.train, data.test, &report.warnings));
    report.models.push_back(evaluate_model("weighted_hard_voting", nullptr, &weighted, nullptr,
                                           data.train, data.test, &report.warnings));
    report.models.push_back(evaluate_model("ensemble_stacking_mlp", nullptr, nullptr, &stacker,
                                           data.train, data.test, &report.warnings));

    if (config.output.save_models) {
      stage = "persist";
      fs::create_directories(fs::path(config.output.dir) / "models");
      for (const auto& base : bases) {
        save_model(*base, (fs::path(config.output.dir) / "models" /
                           (sanitize_name(base->spec().id) + ".json")).string());
      }
      save_model(stacker.meta_model(), (fs::path(config.output.dir) / "models" / "meta_mlp.json").string());
      nlohmann::json manifest = stacker.manifest();
      manifest["vote_weights"] =
          std::vector<double>(report.vote_weights.data(),
                              report.vote_weights.data() + report.vote_weights.size());
      manifest["rank_order"] = report.selected_ids;
      std::ofstream mf(fs::path(config.output.dir) / "models" / "ensemble_manifest.json");
      mf << manifest.dump(2) << '\n';

      // Encoding + scaler state, so `evaluate` can preprocess new data the
      // same way the models saw it.
      nlohmann::json prep;
      prep["class_names"] = data.train.class_names;
      nlohmann::json cats = nlohmann::json::object();
      for (const auto& [idx, categories] : data.train.feature_categories) {
        cats[data.train.schema[static_cast<std::size_t>(idx)].name] = categories;
      }
      prep["feature_categories"] = std::move(cats);
      prep["scaled"] = data.scaled;
      if (data.scaled) {
        prep["scaler_min"] = std::vector<double>(
            data.scaler.minimum.data(), data.scaler.minimum.data() + data.scaler.minimum.size());
        prep["scaler_max"] = std::vector<double>(
            data.scaler.maximum.data(), data.scaler.maximum.data() + data.scaler.maximum.size());
      }
      std::ofstream pf(fs::path(config.output.dir) / "models" / "preprocess.json");
      pf << prep.dump(2) << '\n';
    }
  } catch (const std::exception& e) {
    // Quarantine whatever exists so a failed run leaves evidence behind.
    try {
      const fs::path qdir = fs::path(config.output.dir) / "quarantine";
      fs::create_directories(qdir);
      std::ofstream out(qdir / "failure.json");
      nlohmann::json j;
      j["stage"] = stage;
      j["error"] = e.what();
      j["config_hash"] = report.config_hash;
      if (!report.leaderboard.rows.empty()) j["leaderboard"] = report.leaderboard.to_json();
      out << j.dump(2) << '\n';
    } catch (...) {
    }
    throw;
  }

  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

nlohmann::json RunReport::metrics_json() const {
  nlohmann::json j;
  j["leaderboard"] = leaderboard.to_json();
  j["selected"] = selected_ids;
  j["vote_weights"] =
      std::vector<double>(vote_weights.data(), vote_weights.data() + vote_weights.size());

  nlohmann::json models_json = nlohmann::json::array();
  for (const auto& m : models) {
    nlohmann::json jm;
    jm["name"] = m.model_name;
    jm["train"] = bundle_json(m.train);
    jm["test"] = bundle_json(m.test);
    jm["has_probabilities"] = m.has_probabilities;
    models_json.push_back(std::move(jm));
  }
  j["models"] = std::move(models_json);

  j["most_important_feature"] = {{"name", most_correlated_feature},
                                 {"pearson_r", most_correlated_value}};
  nlohmann::json outliers_json = nlohmann::json::array();
  for (const auto& f : outliers.features) {
    outliers_json.push_back({{"feature", f.name}, {"outliers", f.outliers}});
  }
  j["outlier_scan"] = {{"total", outliers.total()}, {"features", std::move(outliers_json)}};
  j["warnings"] = warnings.entries;
  return j;
}

nlohmann::json RunReport::provenance_json() const {
  nlohmann::json j;
  j["artifact_version"] = artifact_version;
  j["config_path"] = config_path;
  j["config_hash"] = config_hash;
  j["dataset_hash"] = dataset_hash;
  j["wall_clock_seconds"] = wall_clock_seconds;
  return j;
}

std::vector<std::string> emit_report(const RunReport& report, const std::string& directory) {
  std::vector<std::string> written;
  fs::create_directories(directory);
  auto write_file = [&](const std::string& name, const std::string& content) {
    const fs::path path = fs::path(directory) / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << content;
    if (!out) throw DataError("write failed for " + path.string());
    written.push_back(path.string());
  };

  write_file("leaderboard.csv", report.leaderboard.to_csv());
  write_file("metrics.json", report.metrics_json().dump(2) + "\n");
  for (const auto& m : report.models) {
    write_file("confusion_" + sanitize_name(m.model_name) + ".csv",
               confusion_to_csv(m.test_confusion));
  }
  write_file("provenance.json", report.provenance_json().dump(2) + "\n");
  return written;
}

}  // namespace tabens
