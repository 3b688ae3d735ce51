#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include <argjudge/analysis.hpp>
#include <argjudge/annotation.hpp>
#include <argjudge/corpus.hpp>
#include <argjudge/model_gateway.hpp>
#include <argjudge/rationale_quality.hpp>

namespace argjudge::pipeline {

enum class DatasetKind { pairwise, pointwise };

struct DatasetConfig {
  std::string name;
  DatasetKind kind = DatasetKind::pairwise;
  std::filesystem::path path;
  DatasetFormat format = DatasetFormat::csv;
  /// Keep a seeded random subset of this many pairs (after pairing for pointwise data).
  std::optional<std::size_t> sample;
};

struct AnnotationConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string admin_token;
  std::map<std::string, std::string> raters;  // rater id -> token
  BoardOptions board;
  double human_fraction = 1.0 / 3.0;
};

struct Seeds {
  std::uint64_t pairing = 0;
  std::uint64_t sample = 0;
  std::uint64_t forest = 0;
  std::uint64_t display = 0;
};

struct Config {
  std::filesystem::path file;
  std::string run_id = "default";
  std::filesystem::path runs_dir;
  std::optional<std::filesystem::path> cache_dir;
  std::optional<std::filesystem::path> template_dir;
  std::vector<DatasetConfig> datasets;
  std::vector<ModelSpec> models;
  ModelSpec judge;
  Seeds seeds;
  int workers = 4;
  RetryPolicy retry;
  PairingOptions pairing;
  LabelingOptions labeling;
  std::optional<std::filesystem::path> votes;
  ForestParams forest;
  TargetKind target = TargetKind::rank;
  TargetKind cluster_on = TargetKind::score;
  double length_tolerance = 0.2;
  std::vector<double> buckets;
  std::vector<std::string> improve_models;
  AnnotationConfig annotation;
  nlohmann::json raw;

  bool has_pointwise() const;
  const ModelSpec& model(const std::string& model_id) const;
};

/// Reads and validates a run config. Relative paths resolve against the config
/// file's directory. Throws ConfigError.
Config load_config(const std::filesystem::path& path);
Config parse_config(const nlohmann::json& root, const std::filesystem::path& base_dir);

}  // namespace argjudge::pipeline
