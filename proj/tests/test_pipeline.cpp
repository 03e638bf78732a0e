#include "doctest.h"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "tabens/pipeline.hpp"
#include "tabens/synthdata.hpp"

using namespace tabens;
namespace fs = std::filesystem;

namespace {

// 40-row, 2-class synthetic CSV for pipeline smoke tests.
std::string write_smoke_dataset() {
  Rng rng(71);
  std::ostringstream os;
  os << "x0,x1,group,label\n";
  for (int i = 0; i < 40; ++i) {
    const int c = i % 2;
    const double x0 = (c == 0 ? 0.3 : 0.7) + rng.normal() * 0.08;
    const double x1 = rng.uniform();
    os << x0 << ',' << x1 << ',' << (rng.below(2) ? "u" : "v") << ','
       << (c == 0 ? "neg" : "pos") << '\n';
  }
  const auto path = fs::temp_directory_path() / "tabens_smoke.csv";
  std::ofstream out(path, std::ios::binary);
  out << os.str();
  return path.string();
}

RunConfig smoke_config(const std::string& csv_path, const std::string& out_dir) {
  const std::string toml = R"(
[dataset]
path = ")" + csv_path + R"("
columns = ["x0", "x1", "group", "label"]
target = "label"
categorical = ["group"]

[split]
ratios = [0.6, 0.2, 0.2]
seed = 0

[resample]
enabled = true
k_neighbors = 2
scope = "train_only"

[sweep]
folds = 3
seed = 0
top_k = 2

[ensemble]
stacking_folds = 3
meta_hidden = [8]
meta_max_iter = 60

[output]
dir = ")" + out_dir + R"("

[[spec]]
id = "GNB"
family = "gaussian_nb"

[[spec]]
id = "KNN3"
family = "knn"
n_neighbors = 3
)";
  return run_config_from_toml(toml, "smoke-inline");
}

}  // namespace

TEST_CASE("smoke pipeline completes quickly and writes the full report") {
  const std::string csv = write_smoke_dataset();
  const std::string out_dir = (fs::temp_directory_path() / "tabens_smoke_out").string();
  fs::remove_all(out_dir);
  const RunConfig cfg = smoke_config(csv, out_dir);

  PipelineOptions options;
  options.log_level = 0;

  const auto t0 = std::chrono::steady_clock::now();
  const RunReport report = run_pipeline(cfg, options);
  const auto files = emit_report(report, cfg.output.dir);
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(elapsed < 10.0);

  // 2 bases selected (top_k=2) + 3 ensembles = 5 models -> 5 confusion CSVs
  // plus leaderboard.csv, metrics.json, provenance.json.
  CHECK(files.size() == 8);
  CHECK(fs::exists(fs::path(out_dir) / "leaderboard.csv"));
  CHECK(fs::exists(fs::path(out_dir) / "metrics.json"));
  CHECK(fs::exists(fs::path(out_dir) / "provenance.json"));
  CHECK(fs::exists(fs::path(out_dir) / "confusion_majority_hard_voting.csv"));

  // metrics.json parses back losslessly.
  std::ifstream in(fs::path(out_dir) / "metrics.json");
  nlohmann::json parsed;
  CHECK_NOTHROW(in >> parsed);
  CHECK(parsed.contains("leaderboard"));
  CHECK(parsed["models"].size() == 5);

  // Confusion CSV row sums equal the test-partition class counts.
  const auto& conf = report.models.front().test_confusion;
  long total = 0;
  for (int i = 0; i < conf.class_count(); ++i) total += conf.counts.row(i).sum();
  CHECK(total == 8);  // 20% of 40
}

TEST_CASE("pipeline reruns are byte-identical apart from wall clock") {
  const std::string csv = write_smoke_dataset();
  const std::string out_a = (fs::temp_directory_path() / "tabens_rerun_a").string();
  const std::string out_b = (fs::temp_directory_path() / "tabens_rerun_b").string();
  fs::remove_all(out_a);
  fs::remove_all(out_b);

  PipelineOptions options;
  options.log_level = 0;

  // Same config bytes, only the output destination redirected.
  RunConfig cfg_a = smoke_config(csv, "unused");
  RunConfig cfg_b = cfg_a;
  cfg_a.output.dir = out_a;
  cfg_b.output.dir = out_b;

  const RunReport a = run_pipeline(cfg_a, options);
  const RunReport b = run_pipeline(cfg_b, options);
  CHECK(a.metrics_json().dump() == b.metrics_json().dump());
  CHECK(a.config_hash == b.config_hash);
}

TEST_CASE("stage errors land in the quarantine directory") {
  const std::string csv = write_smoke_dataset();
  const std::string out_dir = (fs::temp_directory_path() / "tabens_quarantine").string();
  fs::remove_all(out_dir);
  RunConfig cfg = smoke_config(csv, out_dir);
  cfg.sweep.folds = 1000;  // no class has 1000 members: the sweep stage fails

  PipelineOptions options;
  options.log_level = 0;
  CHECK_THROWS_AS(run_pipeline(cfg, options), DataError);
  CHECK(fs::exists(fs::path(out_dir) / "quarantine" / "failure.json"));
}

TEST_CASE("paper-protocol scope balances before splitting") {
  const std::string csv = write_smoke_dataset();
  RunConfig cfg = smoke_config(csv, (fs::temp_directory_path() / "tabens_paper").string());
  cfg.resample.smote.scope = ResampleScope::TrainAndEval;

  PipelineOptions options;
  options.log_level = 0;
  const PreparedData data = prepare_data(cfg, options);
  // 40 rows, classes 20/20 -> already balanced; partitions split 24/8/8.
  CHECK(data.train.n_rows() == 24);
  CHECK(data.validation.n_rows() == 8);
  CHECK(data.test.n_rows() == 8);
}

TEST_CASE("synthetic dataset generators are deterministic with pinned shapes") {
  const std::string d1 = make_dataset1_csv(20240611);
  const std::string d1_again = make_dataset1_csv(20240611);
  CHECK(d1 == d1_again);
  CHECK(std::count(d1.begin(), d1.end(), '\n') == 1611);  // header + 1610 rows

  const std::string d2 = make_dataset2_csv(20240612);
  CHECK(std::count(d2.begin(), d2.end(), '\n') == 2112);  // header + 2111 rows
  CHECK(d2.substr(0, 6) == "Gender");
}

TEST_CASE("bundled csv files match the generator byte for byte") {
  // Catches a stale data/ directory after generator changes.
  auto slurp = [](const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
  };
  const std::string source_dir = TABENS_SOURCE_DIR;
  CHECK(slurp(source_dir + "/data/dataset1_synth.csv") == make_dataset1_csv(20240611));
  CHECK(slurp(source_dir + "/data/dataset2_synth.csv") == make_dataset2_csv(20240612));
}
