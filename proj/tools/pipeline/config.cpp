#include "config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

namespace argjudge::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : obj.items())
    if (!ok.count(key)) throw ConfigError(fmt::format("{}: unknown key \"{}\"", where, key));
}

template <class T>
T get(const json& obj, const char* key, T fallback, const std::string& where) {
  if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(fmt::format("{}: \"{}\" has the wrong type", where, key));
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

TargetKind target_kind(const std::string& text, const std::string& where) {
  if (text == "rank") return TargetKind::rank;
  if (text == "score" || text == "s") return TargetKind::score;
  throw ConfigError(where + " must be \"rank\" or \"score\"");
}

std::vector<DatasetConfig> parse_datasets(const json& arr, const fs::path& base) {
  if (!arr.is_array() || arr.empty()) throw ConfigError("datasets must be a non-empty list");
  std::vector<DatasetConfig> out;
  std::set<std::string> names;
  for (const auto& d : arr) {
    check_keys(d, "datasets[]", {"name", "kind", "path", "format", "sample"});
    DatasetConfig ds;
    ds.name = get<std::string>(d, "name", "", "datasets[]");
    if (ds.name.empty()) throw ConfigError("dataset needs a name");
    if (ds.name.find_first_of("/|: ") != std::string::npos)
      throw ConfigError("dataset name " + ds.name + " may not contain '/', '|', ':' or spaces");
    if (!names.insert(ds.name).second) throw ConfigError("duplicate dataset " + ds.name);
    const auto where = "dataset " + ds.name;
    const auto kind = get<std::string>(d, "kind", "pairwise", where);
    if (kind == "pairwise") {
      ds.kind = DatasetKind::pairwise;
    } else if (kind == "pointwise") {
      ds.kind = DatasetKind::pointwise;
    } else {
      throw ConfigError(where + ": kind must be pairwise or pointwise");
    }
    const auto path = get<std::string>(d, "path", "", where);
    if (path.empty()) throw ConfigError(where + " needs a path");
    ds.path = resolve(base, path);
    const auto format_name = get<std::string>(d, "format", ds.path.extension() == ".tsv" ? "tsv" : "csv", where);
    auto format = dataset_format_from_string(format_name);
    if (!format) throw ConfigError(where + ": format must be csv or tsv");
    ds.format = *format;
    if (d.contains("sample")) {
      const auto n = get<long long>(d, "sample", 0, where);
      if (n <= 0) throw ConfigError(where + ": sample must be positive");
      ds.sample = static_cast<std::size_t>(n);
    }
    out.push_back(std::move(ds));
  }
  return out;
}

}  // namespace

bool Config::has_pointwise() const {
  for (const auto& d : datasets)
    if (d.kind == DatasetKind::pointwise) return true;
  return false;
}

const ModelSpec& Config::model(const std::string& model_id) const {
  for (const auto& m : models)
    if (m.model_id == model_id) return m;
  if (judge.model_id == model_id) return judge;
  throw ConfigError("unknown model " + model_id);
}

Config parse_config(const json& root, const fs::path& base_dir) {
  check_keys(root, "config",
             {"run_id", "runs_dir", "cache_dir", "templates", "workers", "retry", "datasets", "models", "judge", "seed",
              "seeds", "pairing", "labeling", "forest", "analysis", "buckets", "improve", "annotation"});
  Config c;
  c.raw = root;
  c.run_id = get<std::string>(root, "run_id", "default", "config");
  if (c.run_id.empty() || c.run_id.find('/') != std::string::npos) throw ConfigError("run_id must be a plain name");
  c.runs_dir = resolve(base_dir, get<std::string>(root, "runs_dir", "runs", "config"));
  if (root.contains("cache_dir")) c.cache_dir = resolve(base_dir, get<std::string>(root, "cache_dir", "", "config"));
  if (root.contains("templates")) c.template_dir = resolve(base_dir, get<std::string>(root, "templates", "", "config"));
  c.workers = get<int>(root, "workers", 4, "config");
  if (c.workers < 1) throw ConfigError("workers must be at least 1");

  if (root.contains("retry")) {
    const auto& r = root["retry"];
    check_keys(r, "retry", {"max_attempts", "base_delay_ms", "max_delay_ms", "multiplier"});
    c.retry.max_attempts = get<int>(r, "max_attempts", c.retry.max_attempts, "retry");
    c.retry.base_delay = std::chrono::milliseconds(get<long long>(r, "base_delay_ms", c.retry.base_delay.count(), "retry"));
    c.retry.max_delay = std::chrono::milliseconds(get<long long>(r, "max_delay_ms", c.retry.max_delay.count(), "retry"));
    c.retry.multiplier = get<double>(r, "multiplier", c.retry.multiplier, "retry");
    if (c.retry.max_attempts < 1) throw ConfigError("retry.max_attempts must be at least 1");
  }

  if (!root.contains("datasets")) throw ConfigError("config lacks datasets");
  c.datasets = parse_datasets(root["datasets"], base_dir);

  if (!root.contains("models")) throw ConfigError("config lacks models");
  json models = root["models"];
  for (auto& m : models) {
    if (m.is_object() && m.contains("endpoint")) {
      const auto ep = m["endpoint"].get<std::string>();
      if (ep.rfind("mock:@", 0) == 0) m["endpoint"] = "mock:@" + resolve(base_dir, ep.substr(6)).string();
    }
  }
  c.models = parse_provider_config(models.dump());
  if (c.models.empty()) throw ConfigError("models must not be empty");

  if (!root.contains("judge")) throw ConfigError("config lacks judge");
  const auto& judge = root["judge"];
  if (judge.is_string()) {
    c.judge = c.model(judge.get<std::string>());
  } else {
    json one = json::array({judge});
    if (judge.is_object() && judge.contains("endpoint")) {
      const auto ep = judge["endpoint"].get<std::string>();
      if (ep.rfind("mock:@", 0) == 0) one[0]["endpoint"] = "mock:@" + resolve(base_dir, ep.substr(6)).string();
    }
    c.judge = parse_provider_config(one.dump()).front();
  }

  const auto seed = get<std::uint64_t>(root, "seed", 0, "config");
  c.seeds = Seeds{seed, seed, seed, seed};
  if (root.contains("seeds")) {
    const auto& s = root["seeds"];
    check_keys(s, "seeds", {"pairing", "sample", "forest", "display"});
    c.seeds.pairing = get<std::uint64_t>(s, "pairing", seed, "seeds");
    c.seeds.sample = get<std::uint64_t>(s, "sample", seed, "seeds");
    c.seeds.forest = get<std::uint64_t>(s, "forest", seed, "seeds");
    c.seeds.display = get<std::uint64_t>(s, "display", seed, "seeds");
  }

  if (root.contains("pairing")) {
    const auto& p = root["pairing"];
    check_keys(p, "pairing", {"length_tolerance", "max_uses"});
    c.pairing.length_tolerance = get<double>(p, "length_tolerance", c.pairing.length_tolerance, "pairing");
    c.pairing.max_uses = get<int>(p, "max_uses", c.pairing.max_uses, "pairing");
  }
  c.pairing.seed = c.seeds.pairing;

  if (root.contains("labeling")) {
    const auto& l = root["labeling"];
    check_keys(l, "labeling",
               {"basic_form_source", "content_source", "repetition_threshold", "min_tokens", "novelty_threshold", "votes"});
    auto bf = basic_form_source_from_string(get<std::string>(l, "basic_form_source", "heuristic", "labeling"));
    if (!bf) throw ConfigError("labeling.basic_form_source must be heuristic or human");
    auto cs = content_source_from_string(get<std::string>(l, "content_source", "heuristic", "labeling"));
    if (!cs) throw ConfigError("labeling.content_source must be heuristic, human or llm_judge");
    c.labeling.basic_form_source = *bf;
    c.labeling.content_source = *cs;
    c.labeling.basic_form.repetition_threshold =
        get<double>(l, "repetition_threshold", c.labeling.basic_form.repetition_threshold, "labeling");
    c.labeling.basic_form.min_tokens = get<std::size_t>(l, "min_tokens", c.labeling.basic_form.min_tokens, "labeling");
    c.labeling.content.novelty_threshold =
        get<double>(l, "novelty_threshold", c.labeling.content.novelty_threshold, "labeling");
    if (l.contains("votes")) c.votes = resolve(base_dir, get<std::string>(l, "votes", "", "labeling"));
  }

  if (root.contains("forest")) {
    const auto& f = root["forest"];
    check_keys(f, "forest", {"n_trees", "max_depth", "min_leaf", "max_features", "bootstrap"});
    c.forest.n_trees = get<int>(f, "n_trees", c.forest.n_trees, "forest");
    c.forest.max_depth = get<int>(f, "max_depth", c.forest.max_depth, "forest");
    c.forest.min_leaf = get<int>(f, "min_leaf", c.forest.min_leaf, "forest");
    c.forest.max_features = get<int>(f, "max_features", c.forest.max_features, "forest");
    c.forest.bootstrap = get<bool>(f, "bootstrap", c.forest.bootstrap, "forest");
    if (c.forest.n_trees < 1 || c.forest.min_leaf < 1 || c.forest.max_features < 1 || c.forest.max_features > 3)
      throw ConfigError("forest: n_trees, min_leaf >= 1 and max_features in 1..3");
  }
  c.forest.seed = c.seeds.forest;

  if (root.contains("analysis")) {
    const auto& a = root["analysis"];
    check_keys(a, "analysis", {"target", "cluster_on", "length_tolerance"});
    c.target = target_kind(get<std::string>(a, "target", "rank", "analysis"), "analysis.target");
    c.cluster_on = target_kind(get<std::string>(a, "cluster_on", "score", "analysis"), "analysis.cluster_on");
    c.length_tolerance = get<double>(a, "length_tolerance", c.length_tolerance, "analysis");
  }

  c.buckets = get<std::vector<double>>(root, "buckets", {}, "config");
  for (std::size_t i = 1; i < c.buckets.size(); ++i)
    if (!(c.buckets[i - 1] < c.buckets[i])) throw ConfigError("buckets must be strictly increasing");
  if (c.buckets.size() == 1) throw ConfigError("buckets need at least two edges");

  if (root.contains("improve")) {
    const auto& im = root["improve"];
    check_keys(im, "improve", {"models"});
    c.improve_models = get<std::vector<std::string>>(im, "models", {}, "improve");
    for (const auto& m : c.improve_models) (void)c.model(m);
  }

  if (root.contains("annotation")) {
    const auto& a = root["annotation"];
    check_keys(a, "annotation",
               {"host", "port", "admin_token", "raters", "required_raters", "lease_seconds", "guideline_version",
                "gold_min", "gold_threshold", "exclude_flagged", "human_fraction"});
    auto& an = c.annotation;
    an.host = get<std::string>(a, "host", an.host, "annotation");
    an.port = get<int>(a, "port", an.port, "annotation");
    an.admin_token = get<std::string>(a, "admin_token", "", "annotation");
    an.raters = get<std::map<std::string, std::string>>(a, "raters", {}, "annotation");
    an.board.required_raters = get<int>(a, "required_raters", an.board.required_raters, "annotation");
    an.board.lease = std::chrono::seconds(get<long long>(a, "lease_seconds", an.board.lease.count(), "annotation"));
    an.board.guideline_version = get<std::string>(a, "guideline_version", an.board.guideline_version, "annotation");
    an.board.gold_min = get<std::size_t>(a, "gold_min", an.board.gold_min, "annotation");
    an.board.gold_threshold = get<double>(a, "gold_threshold", an.board.gold_threshold, "annotation");
    an.board.exclude_flagged = get<bool>(a, "exclude_flagged", an.board.exclude_flagged, "annotation");
    an.human_fraction = get<double>(a, "human_fraction", an.human_fraction, "annotation");
    if (an.board.required_raters < 3) throw ConfigError("annotation.required_raters must be at least 3");
  }
  c.annotation.board.display_seed = c.seeds.display;
  return c;
}

Config load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  auto root = json::parse(ss.str(), nullptr, false);
  if (root.is_discarded()) throw ConfigError("config " + path.string() + " is not valid JSON");
  Config c = parse_config(root, fs::absolute(path).parent_path());
  c.file = fs::absolute(path);
  return c;
}

}  // namespace argjudge::pipeline
