#include "tabens/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace tabens {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

[[noreturn]] void fail(int line, const std::string& message) {
  throw ConfigError("config line " + std::to_string(line) + ": " + message);
}

// Strips a trailing comment, respecting quoted strings.
std::string strip_comment(const std::string& s) {
  bool in_string = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') in_string = !in_string;
    if (s[i] == '#' && !in_string) return s.substr(0, i);
  }
  return s;
}

nlohmann::json parse_scalar(const std::string& raw, int line) {
  const std::string v = trim(raw);
  if (v.empty()) fail(line, "empty value");
  if (v.front() == '"') {
    if (v.size() < 2 || v.back() != '"') fail(line, "unterminated string");
    const std::string body = v.substr(1, v.size() - 2);
    if (body.find('"') != std::string::npos) fail(line, "embedded quotes are not supported");
    return body;
  }
  if (v == "true") return true;
  if (v == "false") return false;
  double number = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), number);
  if (ec == std::errc() && ptr == v.data() + v.size()) return number;
  fail(line, "cannot parse value '" + v + "'");
}

nlohmann::json parse_value(const std::string& raw, int line) {
  const std::string v = trim(raw);
  if (!v.empty() && v.front() == '[') {
    if (v.back() != ']') fail(line, "unterminated array");
    nlohmann::json arr = nlohmann::json::array();
    std::string body = v.substr(1, v.size() - 2);
    std::string item;
    bool in_string = false;
    for (char c : body) {
      if (c == '"') in_string = !in_string;
      if (c == ',' && !in_string) {
        if (!trim(item).empty()) arr.push_back(parse_scalar(item, line));
        item.clear();
      } else {
        item.push_back(c);
      }
    }
    if (!trim(item).empty()) arr.push_back(parse_scalar(item, line));
    return arr;
  }
  return parse_scalar(v, line);
}

}  // namespace

nlohmann::json parse_toml(const std::string& text) {
  nlohmann::json root = nlohmann::json::object();
  nlohmann::json* current = &root;

  std::istringstream in(text);
  std::string raw_line;
  int line_no = 0;
  while (std::getline(in, raw_line)) {
    ++line_no;
    const std::string line = trim(strip_comment(raw_line));
    if (line.empty()) continue;

    if (line.size() >= 4 && line.substr(0, 2) == "[[") {
      if (line.substr(line.size() - 2) != "]]") fail(line_no, "malformed table-array header");
      const std::string name = trim(line.substr(2, line.size() - 4));
      if (name.empty()) fail(line_no, "empty table-array name");
      if (!root.contains(name)) root[name] = nlohmann::json::array();
      root[name].push_back(nlohmann::json::object());
      current = &root[name].back();
      continue;
    }
    if (line.front() == '[') {
      if (line.back() != ']') fail(line_no, "malformed section header");
      const std::string name = trim(line.substr(1, line.size() - 2));
      if (name.empty()) fail(line_no, "empty section name");
      if (root.contains(name) && !root[name].is_object()) {
        fail(line_no, "section '" + name + "' conflicts with an earlier table array");
      }
      if (!root.contains(name)) root[name] = nlohmann::json::object();
      current = &root[name];
      continue;
    }

    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) fail(line_no, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) fail(line_no, "empty key");
    (*current)[key] = parse_value(line.substr(eq + 1), line_no);
  }
  return root;
}

namespace {

double require_number(const nlohmann::json& section, const std::string& key,
                      const std::string& where) {
  if (!section.contains(key) || !section[key].is_number()) {
    throw ConfigError(where + ": missing numeric key '" + key + "'");
  }
  return section[key].get<double>();
}

std::string require_string(const nlohmann::json& section, const std::string& key,
                           const std::string& where) {
  if (!section.contains(key) || !section[key].is_string()) {
    throw ConfigError(where + ": missing string key '" + key + "'");
  }
  return section[key].get<std::string>();
}

std::vector<std::string> string_list(const nlohmann::json& value, const std::string& where) {
  if (!value.is_array()) throw ConfigError(where + ": expected an array of strings");
  std::vector<std::string> out;
  for (const auto& v : value) {
    if (!v.is_string()) throw ConfigError(where + ": expected an array of strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

LearnerSpec spec_from_json(const nlohmann::json& js, int index) {
  const std::string where = "spec #" + std::to_string(index + 1);
  LearnerSpec spec;
  spec.id = require_string(js, "id", where);
  spec.family = family_from_name(require_string(js, "family", where));
  for (auto it = js.begin(); it != js.end(); ++it) {
    if (it.key() == "id" || it.key() == "family") continue;
    const auto& v = it.value();
    if (v.is_boolean()) {
      spec.params[it.key()] = v.get<bool>();
    } else if (v.is_number()) {
      spec.params[it.key()] = v.get<double>();
    } else if (v.is_string()) {
      spec.params[it.key()] = v.get<std::string>();
    } else if (v.is_array()) {
      std::vector<double> nums;
      for (const auto& e : v) {
        if (!e.is_number()) {
          throw ConfigError(where + ": array param '" + it.key() + "' must be numeric");
        }
        nums.push_back(e.get<double>());
      }
      spec.params[it.key()] = nums;
    } else {
      throw ConfigError(where + ": unsupported value for param '" + it.key() + "'");
    }
  }
  return spec;
}

}  // namespace

RunConfig run_config_from_toml(const std::string& text, const std::string& source_path) {
  const nlohmann::json doc = parse_toml(text);
  RunConfig cfg;
  cfg.raw_bytes = text;
  cfg.source_path = source_path;

  if (!doc.contains("dataset")) throw ConfigError("missing [dataset] section");
  const auto& ds = doc["dataset"];
  cfg.dataset.path = require_string(ds, "path", "[dataset]");
  const auto columns = string_list(ds.contains("columns") ? ds["columns"] : nlohmann::json(),
                                   "[dataset].columns");
  const std::string target = require_string(ds, "target", "[dataset]");
  std::vector<std::string> categorical;
  if (ds.contains("categorical")) {
    categorical = string_list(ds["categorical"], "[dataset].categorical");
  }
  for (const auto& name : columns) {
    ColumnSchema col;
    col.name = name;
    if (name == target) {
      col.kind = ColumnKind::Target;
    } else if (std::find(categorical.begin(), categorical.end(), name) != categorical.end()) {
      col.kind = ColumnKind::Categorical;
    } else {
      col.kind = ColumnKind::Numeric;
    }
    cfg.dataset.schema.push_back(std::move(col));
  }
  if (std::count_if(cfg.dataset.schema.begin(), cfg.dataset.schema.end(),
                    [](const ColumnSchema& c) { return c.kind == ColumnKind::Target; }) != 1) {
    throw ConfigError("[dataset]: target '" + target + "' must appear in columns exactly once");
  }

  if (doc.contains("split")) {
    const auto& sp = doc["split"];
    if (sp.contains("ratios")) {
      const auto& r = sp["ratios"];
      if (!r.is_array() || r.size() != 3) throw ConfigError("[split].ratios must have 3 entries");
      for (int i = 0; i < 3; ++i) cfg.split.ratios[static_cast<std::size_t>(i)] = r[i].get<double>();
    }
    if (sp.contains("seed")) cfg.split.seed = static_cast<std::uint64_t>(sp["seed"].get<double>());
  }
  const double ratio_sum = cfg.split.ratios[0] + cfg.split.ratios[1] + cfg.split.ratios[2];
  if (std::abs(ratio_sum - 1.0) > 1e-9) throw ConfigError("[split].ratios must sum to 1");

  if (doc.contains("scale") && doc["scale"].contains("enabled")) {
    cfg.scale_enabled = doc["scale"]["enabled"].get<bool>();
  }

  if (doc.contains("resample")) {
    const auto& rs = doc["resample"];
    if (rs.contains("enabled")) cfg.resample.enabled = rs["enabled"].get<bool>();
    if (rs.contains("k_neighbors")) {
      cfg.resample.smote.k_neighbors = static_cast<int>(require_number(rs, "k_neighbors", "[resample]"));
    }
    if (rs.contains("seed")) {
      cfg.resample.smote.seed = static_cast<std::uint64_t>(rs["seed"].get<double>());
    }
    if (rs.contains("scope")) {
      const std::string scope = rs["scope"].get<std::string>();
      if (scope == "train_only") {
        cfg.resample.smote.scope = ResampleScope::TrainOnly;
      } else if (scope == "train_and_eval") {
        cfg.resample.smote.scope = ResampleScope::TrainAndEval;
      } else {
        throw ConfigError("[resample].scope must be train_only or train_and_eval");
      }
    }
  }

  if (doc.contains("sweep")) {
    const auto& sw = doc["sweep"];
    if (sw.contains("folds")) cfg.sweep.folds = static_cast<int>(sw["folds"].get<double>());
    if (sw.contains("seed")) cfg.sweep.seed = static_cast<std::uint64_t>(sw["seed"].get<double>());
    if (sw.contains("scoring")) cfg.sweep.scoring = string_list(sw["scoring"], "[sweep].scoring");
    if (sw.contains("top_k")) cfg.top_k = static_cast<int>(sw["top_k"].get<double>());
  }
  if (cfg.sweep.folds < 2) throw ConfigError("[sweep].folds must be >= 2");
  for (const auto& name : cfg.sweep.scoring) {
    metric_value(MetricBundle{}, name);  // validates the metric name
  }

  if (doc.contains("ensemble")) {
    const auto& en = doc["ensemble"];
    if (en.contains("weight_metric")) {
      cfg.ensemble.weight_metric = en["weight_metric"].get<std::string>();
      metric_value(MetricBundle{}, cfg.ensemble.weight_metric);
    }
    if (en.contains("stacking_folds")) {
      cfg.ensemble.stacking.folds = static_cast<int>(en["stacking_folds"].get<double>());
    }
    if (en.contains("meta_features")) {
      const std::string kind = en["meta_features"].get<std::string>();
      if (kind == "probabilities") {
        cfg.ensemble.stacking.meta_features = MetaFeatureKind::Probabilities;
      } else if (kind == "hard_labels") {
        cfg.ensemble.stacking.meta_features = MetaFeatureKind::HardLabels;
      } else {
        throw ConfigError("[ensemble].meta_features must be probabilities or hard_labels");
      }
    }
    if (en.contains("in_sample")) cfg.ensemble.stacking.in_sample = en["in_sample"].get<bool>();
    if (en.contains("meta_hidden")) {
      cfg.ensemble.stacking.meta_hidden.clear();
      for (const auto& v : en["meta_hidden"]) {
        cfg.ensemble.stacking.meta_hidden.push_back(static_cast<int>(v.get<double>()));
      }
    }
    if (en.contains("meta_max_iter")) {
      cfg.ensemble.stacking.meta_max_iter = static_cast<int>(en["meta_max_iter"].get<double>());
    }
    if (en.contains("meta_seed")) {
      cfg.ensemble.stacking.meta_seed = static_cast<std::uint64_t>(en["meta_seed"].get<double>());
    }
  }

  if (doc.contains("output")) {
    const auto& out = doc["output"];
    if (out.contains("dir")) cfg.output.dir = out["dir"].get<std::string>();
    if (out.contains("save_models")) cfg.output.save_models = out["save_models"].get<bool>();
  }

  if (!doc.contains("spec") || !doc["spec"].is_array() || doc["spec"].empty()) {
    throw ConfigError("config declares no [[spec]] entries");
  }
  int index = 0;
  std::set<std::string> ids;
  for (const auto& js : doc["spec"]) {
    LearnerSpec spec = spec_from_json(js, index++);
    if (!ids.insert(spec.id).second) throw ConfigError("duplicate spec id: " + spec.id);
    cfg.sweep.specs.push_back(std::move(spec));
  }
  if (cfg.top_k < 1 || cfg.top_k > static_cast<int>(cfg.sweep.specs.size())) {
    throw ConfigError("[sweep].top_k out of range");
  }
  // Stacking folds reuse the sweep seed unless pinned separately.
  cfg.ensemble.stacking.seed = cfg.sweep.seed;
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return run_config_from_toml(buf.str(), path);
}

}  // namespace tabens
