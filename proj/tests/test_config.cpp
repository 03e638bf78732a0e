#include "doctest.h"

#include "tabens/config.hpp"

using namespace tabens;

namespace {

const char* kMinimalConfig = R"(
# smoke config
[dataset]
path = "data.csv"
columns = ["a", "b", "t"]
target = "t"
categorical = ["b"]

[split]
ratios = [0.6, 0.2, 0.2]
seed = 3

[resample]
enabled = true
k_neighbors = 2
scope = "train_only"

[sweep]
folds = 4
seed = 1
scoring = ["roc_auc", "f1_macro"]
top_k = 1

[output]
dir = "out"

[[spec]]
id = "GNB"
family = "gaussian_nb"

[[spec]]
id = "KNN3"
family = "knn"
n_neighbors = 3
metric = "euclidean"
)";

}  // namespace

TEST_CASE("toml subset parses sections, arrays and table arrays") {
  const nlohmann::json doc = parse_toml(R"(
[alpha]
name = "x" # trailing comment
count = 3
flag = true
items = [1, 2, 3]
words = ["a", "b"]

[[entry]]
id = "one"
[[entry]]
id = "two"
)");
  CHECK(doc["alpha"]["name"] == "x");
  CHECK(doc["alpha"]["count"] == 3.0);
  CHECK(doc["alpha"]["flag"] == true);
  CHECK(doc["alpha"]["items"].size() == 3);
  CHECK(doc["alpha"]["words"][1] == "b");
  REQUIRE(doc["entry"].is_array());
  CHECK(doc["entry"][0]["id"] == "one");
  CHECK(doc["entry"][1]["id"] == "two");
}

TEST_CASE("toml errors carry line numbers") {
  CHECK_THROWS_WITH_AS(parse_toml("\nkey value\n"), doctest::Contains("line 2"), ConfigError);
  CHECK_THROWS_AS(parse_toml("[open\n"), ConfigError);
  CHECK_THROWS_AS(parse_toml("k = [1, 2\n"), ConfigError);
  CHECK_THROWS_AS(parse_toml("k = \"unterminated\n"), ConfigError);
}

TEST_CASE("run config round trip") {
  const RunConfig cfg = run_config_from_toml(kMinimalConfig, "inline");
  CHECK(cfg.dataset.path == "data.csv");
  REQUIRE(cfg.dataset.schema.size() == 3);
  CHECK(cfg.dataset.schema[0].kind == ColumnKind::Numeric);
  CHECK(cfg.dataset.schema[1].kind == ColumnKind::Categorical);
  CHECK(cfg.dataset.schema[2].kind == ColumnKind::Target);
  CHECK(cfg.split.seed == 3);
  CHECK(cfg.resample.smote.k_neighbors == 2);
  CHECK(cfg.resample.smote.scope == ResampleScope::TrainOnly);
  CHECK(cfg.sweep.folds == 4);
  CHECK(cfg.top_k == 1);
  REQUIRE(cfg.sweep.specs.size() == 2);
  CHECK(cfg.sweep.specs[0].id == "GNB");
  CHECK(cfg.sweep.specs[1].family == Family::Knn);
  CHECK(cfg.sweep.specs[1].integer("n_neighbors", 0) == 3);
}

TEST_CASE("config validation failures") {
  // Target missing from columns.
  CHECK_THROWS_AS(run_config_from_toml(R"(
[dataset]
path = "x.csv"
columns = ["a"]
target = "t"
[[spec]]
id = "GNB"
family = "gaussian_nb"
)",
                                       "inline"),
                  ConfigError);

  // Ratios not summing to 1.
  CHECK_THROWS_AS(run_config_from_toml(R"(
[dataset]
path = "x.csv"
columns = ["a", "t"]
target = "t"
[split]
ratios = [0.5, 0.2, 0.2]
[[spec]]
id = "GNB"
family = "gaussian_nb"
)",
                                       "inline"),
                  ConfigError);

  // No specs at all.
  CHECK_THROWS_AS(run_config_from_toml(R"(
[dataset]
path = "x.csv"
columns = ["a", "t"]
target = "t"
)",
                                       "inline"),
                  ConfigError);

  // Duplicate spec ids.
  CHECK_THROWS_AS(run_config_from_toml(R"(
[dataset]
path = "x.csv"
columns = ["a", "t"]
target = "t"
[[spec]]
id = "X"
family = "gaussian_nb"
[[spec]]
id = "X"
family = "bernoulli_nb"
)",
                                       "inline"),
                  ConfigError);

  // Unknown family.
  CHECK_THROWS_AS(run_config_from_toml(R"(
[dataset]
path = "x.csv"
columns = ["a", "t"]
target = "t"
[[spec]]
id = "X"
family = "quantum_forest"
)",
                                       "inline"),
                  ConfigError);

  // Unknown scoring metric.
  CHECK_THROWS_AS(run_config_from_toml(R"(
[dataset]
path = "x.csv"
columns = ["a", "t"]
target = "t"
[sweep]
scoring = ["vibes"]
[[spec]]
id = "X"
family = "gaussian_nb"
)",
                                       "inline"),
                  ConfigError);
}

TEST_CASE("config hash tracks every byte") {
  const std::string text = kMinimalConfig;
  std::string changed = text;
  changed[changed.find("seed = 3") + 7] = '4';
  CHECK(fnv1a64(text) != fnv1a64(changed));
  CHECK(fnv1a64(text) == fnv1a64(std::string(kMinimalConfig)));
}
