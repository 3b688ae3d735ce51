#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "argjudge/common.hpp"

namespace argjudge {

enum class Stance { pro, con };

std::string_view to_string(Stance s);
std::optional<Stance> stance_from_string(std::string_view text);

struct Argument {
  std::string id;
  std::string topic_id;
  Stance stance = Stance::pro;
  std::string text;
  int word_count = 0;
  std::optional<double> quality_score;
};

/// Builds an Argument with word_count derived from `text`.
Argument make_argument(std::string id, std::string topic_id, Stance stance, std::string text,
                       std::optional<double> quality_score = std::nullopt);

struct ArgumentPair {
  std::string id;
  std::string topic;
  Argument arg1;
  Argument arg2;
  std::optional<Winner> gold_winner;
  std::optional<double> quality_delta;

  const Argument& argument(Winner slot) const { return slot == Winner::first ? arg1 : arg2; }
};

/// Checks the ArgumentPair invariants; throws InputError naming the violation.
void validate_pair(const ArgumentPair& pair);

enum class DatasetFormat { csv, tsv };

std::optional<DatasetFormat> dataset_format_from_string(std::string_view name);

struct RejectedRow {
  std::size_t row = 0;
  std::string reason;
};

struct PairwiseLoad {
  std::vector<ArgumentPair> pairs;
  std::vector<RejectedRow> rejected;
};

/// Loads a pairwise dataset with header columns topic, stance, argument1, argument2,
/// winner. Optional columns: id, stance1/stance2 (per-argument stances, overriding
/// `stance`), arg1_id, arg2_id. Rows whose arguments disagree on stance are reported
/// in `rejected` with reason "stance mismatch"; structurally malformed rows raise
/// RecordError and an empty file raises DatasetError.
PairwiseLoad load_pairwise_dataset(const std::string& path, DatasetFormat format);
PairwiseLoad parse_pairwise_dataset(std::string_view text, DatasetFormat format);

/// Loads a pointwise dataset with columns topic, stance, argument, quality (optional id).
std::vector<Argument> load_pointwise_dataset(const std::string& path, DatasetFormat format);
std::vector<Argument> parse_pointwise_dataset(std::string_view text, DatasetFormat format);

struct PairingOptions {
  double length_tolerance = 0.2;
  int max_uses = 1;
  std::uint64_t seed = 0;
};

/// True when `a` and `b` may form an evaluation pair under `options` (ignores usage
/// counts).
bool eligible_pair(const Argument& a, const Argument& b, const PairingOptions& options);

/// Constructs pairs from quality-scored arguments. Within each (topic, stance) group
/// arguments are ordered by word count (seeded shuffle breaks ties) and matched
/// greedily with the nearest eligible later argument. The gold winner is the
/// higher-quality argument; its slot is drawn from the seed.
std::vector<ArgumentPair> build_pairs_from_pointwise(std::span<const Argument> args,
                                                     const PairingOptions& options);

struct QualityBucket {
  std::string label;
  double lo = 0.0;
  double hi = 0.0;
  std::vector<ArgumentPair> pairs;
};

/// Buckets are [lo, hi) except the last, which is closed. Labels follow the
/// "0-0.25", "0.25-0.5", "0.5-1." convention.
std::vector<QualityBucket> bucket_by_quality_delta(std::span<const ArgumentPair> pairs,
                                                   std::span<const double> edges);

std::vector<std::string> bucket_labels(std::span<const double> edges);

/// Index of the bucket holding `delta`, or nullopt if outside [edges.front(), edges.back()].
std::optional<std::size_t> bucket_index(double delta, std::span<const double> edges);

inline const std::vector<double>& default_bucket_edges() {
  static const std::vector<double> edges{0.0, 0.25, 0.5, 1.0};
  return edges;
}

}  // namespace argjudge
