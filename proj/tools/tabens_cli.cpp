#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "tabens/pipeline.hpp"
#include "tabens/synthdata.hpp"

namespace fs = std::filesystem;
using namespace tabens;

namespace {

int default_threads() {
  if (const char* env = std::getenv("TABENS_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  int threads = default_threads();
  int log_level = 1;
  std::int64_t seed_override = -1;

  PipelineOptions options() const {
    PipelineOptions opt;
    opt.threads = threads;
    opt.log_level = log_level;
    if (seed_override >= 0) opt.seed_override = static_cast<std::uint64_t>(seed_override);
    return opt;
  }
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "Run-config file (TOML)")->required();
  cmd->add_option("--out", args.out_dir, "Output directory (overrides [output].dir)");
  cmd->add_option("--threads", args.threads, "Worker threads for the sweep");
  cmd->add_option("--seed-override", args.seed_override, "Override every seed in the config");
  cmd->add_option("--log-level", args.log_level, "0 = silent, 1 = progress, 2 = verbose");
}

RunConfig load_config(const CommonArgs& args) {
  RunConfig cfg = load_run_config(args.config_path);
  if (!args.out_dir.empty()) cfg.output.dir = args.out_dir;
  return cfg;
}

int run_command(const CommonArgs& args) {
  const RunConfig cfg = load_config(args);
  const RunReport report = run_pipeline(cfg, args.options());
  const auto files = emit_report(report, cfg.output.dir);
  std::cout << "selected:";
  for (const auto& id : report.selected_ids) std::cout << ' ' << id;
  std::cout << '\n';
  for (const auto& m : report.models) {
    std::cout << m.model_name << "  accuracy=" << m.test.accuracy
              << "  f1_macro=" << m.test.f1_macro << '\n';
  }
  for (const auto& f : files) std::cout << "wrote " << f << '\n';
  return 0;
}

int sweep_command(const CommonArgs& args) {
  const RunConfig cfg = load_config(args);
  const PipelineOptions options = args.options();
  const PreparedData data = prepare_data(cfg, options);
  SweepConfig sweep = cfg.sweep;
  sweep.threads = options.threads;
  if (options.seed_override) sweep.seed = *options.seed_override;
  const Leaderboard board = run_sweep(sweep, data.train);

  fs::create_directories(cfg.output.dir);
  {
    std::ofstream out(fs::path(cfg.output.dir) / "leaderboard.csv", std::ios::binary);
    out << board.to_csv();
  }
  {
    std::ofstream out(fs::path(cfg.output.dir) / "leaderboard.json", std::ios::binary);
    out << board.to_json().dump(2) << '\n';
  }
  std::cout << board.to_csv();
  return 0;
}

int inspect_command(const CommonArgs& args) {
  const RunConfig cfg = load_config(args);
  const DataTable table = load_csv(cfg.dataset.path, cfg.dataset.schema);
  std::cout << "dataset: " << cfg.dataset.path << '\n'
            << "rows: " << table.n_rows() << "  features: " << table.n_features()
            << "  classes: " << table.n_classes() << '\n';
  const auto counts = table.class_counts();
  for (int c = 0; c < table.n_classes(); ++c) {
    std::cout << "  " << table.class_names[static_cast<std::size_t>(c)] << ": " << counts[c]
              << '\n';
  }
  const auto [name, corr] = most_correlated_feature(table);
  std::cout << "most correlated feature: " << name << " (pearson r = " << corr << ")\n";
  const OutlierReport report = outlier_scan(table);
  std::cout << "outlier scan (1.5*IQR fences): " << report.total() << " flagged\n";
  for (const auto& f : report.features) {
    if (f.outliers > 0) {
      std::cout << "  " << f.name << ": " << f.outliers << " outside [" << f.lower_fence << ", "
                << f.upper_fence << "]\n";
    }
  }
  return 0;
}

int evaluate_command(const CommonArgs& args, const std::string& models_dir,
                     const std::string& data_csv) {
  const RunConfig cfg = load_config(args);

  // Preprocess state saved by `run` pins encodings and scaling.
  nlohmann::json prep;
  {
    std::ifstream in(fs::path(models_dir) / "preprocess.json");
    if (!in) throw DataError("missing preprocess.json in " + models_dir + " (run with save_models = true)");
    in >> prep;
  }
  std::vector<ColumnSchema> schema = cfg.dataset.schema;
  for (auto& col : schema) {
    if (col.kind == ColumnKind::Target) {
      col.categories = prep.at("class_names").get<std::vector<std::string>>();
    } else if (col.kind == ColumnKind::Categorical) {
      col.categories =
          prep.at("feature_categories").at(col.name).get<std::vector<std::string>>();
    }
  }
  DataTable table = load_csv(data_csv, schema);
  if (prep.at("scaled").get<bool>()) {
    ScalerParams scaler;
    const auto mins = prep.at("scaler_min").get<std::vector<double>>();
    const auto maxs = prep.at("scaler_max").get<std::vector<double>>();
    scaler.minimum = Eigen::Map<const Vector>(mins.data(), static_cast<Eigen::Index>(mins.size()));
    scaler.maximum = Eigen::Map<const Vector>(maxs.data(), static_cast<Eigen::Index>(maxs.size()));
    table = apply_scaler(table, scaler);
  }

  nlohmann::json manifest;
  {
    std::ifstream in(fs::path(models_dir) / "ensemble_manifest.json");
    if (!in) throw DataError("missing ensemble_manifest.json in " + models_dir);
    in >> manifest;
  }

  nlohmann::json out = nlohmann::json::object();
  for (const auto& id : manifest.at("members")) {
    std::string file = id.get<std::string>();
    std::transform(file.begin(), file.end(), file.begin(),
                   [](unsigned char c) { return std::isalnum(c) ? std::tolower(c) : '_'; });
    const auto model = load_model((fs::path(models_dir) / (file + ".json")).string());
    const auto pred = model->predict(table.features);
    const Matrix proba = model->predict_proba(table.features);
    const MetricBundle m =
        evaluate_predictions(table.labels, pred, table.n_classes(), &proba);
    out[id.get<std::string>()] = {{"accuracy", m.accuracy},
                                  {"f1_macro", m.f1_macro},
                                  {"roc_auc", m.roc_auc_ovr_macro.value_or(0.0)}};
    std::cout << id.get<std::string>() << "  accuracy=" << m.accuracy
              << "  f1_macro=" << m.f1_macro << '\n';
  }
  if (!args.out_dir.empty()) {
    fs::create_directories(args.out_dir);
    std::ofstream f(fs::path(args.out_dir) / "evaluation.json", std::ios::binary);
    f << out.dump(2) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tabens: tabular ensemble pipeline (voting + stacking over a model sweep)"};
  app.require_subcommand(1);

  CommonArgs run_args, sweep_args, inspect_args, eval_args;
  std::string models_dir, data_csv;

  CLI::App* run = app.add_subcommand("run", "Full pipeline: prepare, sweep, ensembles, report");
  add_common(run, run_args);
  CLI::App* sweep = app.add_subcommand("sweep", "Cross-validated sweep and leaderboard only");
  add_common(sweep, sweep_args);
  CLI::App* inspect = app.add_subcommand("inspect", "Dataset summary and outlier scan");
  add_common(inspect, inspect_args);
  CLI::App* evaluate = app.add_subcommand("evaluate", "Score a CSV with persisted models");
  add_common(evaluate, eval_args);
  evaluate->add_option("--models", models_dir, "Directory with persisted models")->required();
  evaluate->add_option("--data", data_csv, "CSV file to score")->required();

  CLI::App* datagen = app.add_subcommand("datagen", "Regenerate the bundled synthetic datasets");
  std::string datagen_dir = "data";
  std::int64_t datagen_seed = 20240611;
  datagen->add_option("--dir", datagen_dir, "Destination directory");
  datagen->add_option("--seed", datagen_seed, "Generator seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return run_command(run_args);
    if (sweep->parsed()) return sweep_command(sweep_args);
    if (inspect->parsed()) return inspect_command(inspect_args);
    if (evaluate->parsed()) return evaluate_command(eval_args, models_dir, data_csv);
    if (datagen->parsed()) {
      fs::create_directories(datagen_dir);
      const auto seed = static_cast<std::uint64_t>(datagen_seed);
      {
        std::ofstream f(fs::path(datagen_dir) / "dataset1_synth.csv", std::ios::binary);
        f << make_dataset1_csv(seed);
      }
      {
        std::ofstream f(fs::path(datagen_dir) / "dataset2_synth.csv", std::ios::binary);
        f << make_dataset2_csv(seed + 1);
      }
      std::cout << "wrote " << datagen_dir << "/dataset1_synth.csv and dataset2_synth.csv\n";
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
