#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "argjudge/rationale_quality.hpp"
#include "argjudge/tournament.hpp"

namespace argjudge {

// ---------------------------------------------------------------------------
// Feature table

enum class Feature { length = 0, contrast = 1, novelty = 2 };
inline constexpr std::size_t kFeatureCount = 3;
using FeatureVector = std::array<double, kFeatureCount>;

std::string_view to_string(Feature f);

struct FeatureRow {
  std::string rationale_id;
  double x_length = 0.0;
  double x_contrast = 0.0;
  double x_novelty = 0.0;
  double target = 0.0;

  FeatureVector x() const { return {x_length, x_contrast, x_novelty}; }
};

/// What the regression target holds.
enum class TargetKind { rank, score };

/// One row per rationale that has a rank in `boards` and content labels.
std::vector<FeatureRow> build_feature_rows(std::span<const Scoreboard> boards, std::span<const Rationale> rationales,
                                           TargetKind target = TargetKind::rank);

/// Columns rationale_id, x_length, x_contrast, x_novelty, target.
std::vector<FeatureRow> parse_feature_table(std::string_view text, char delimiter = ',');
std::vector<FeatureRow> load_feature_table(const std::string& path);
std::string render_feature_table(std::span<const FeatureRow> rows, char delimiter = ',');

// ---------------------------------------------------------------------------
// Random forest regression

struct ForestParams {
  int n_trees = 100;
  /// 0 = unlimited.
  int max_depth = 0;
  int min_leaf = 2;
  /// Features considered per split, drawn without replacement.
  int max_features = 3;
  bool bootstrap = true;
  std::uint64_t seed = 0;
};

struct TreeNode {
  /// -1 for a leaf.
  int feature = -1;
  double threshold = 0.0;
  double value = 0.0;
  int left = -1;
  int right = -1;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;

  double predict(const FeatureVector& x) const;
  bool uses_feature(Feature f) const;
  bool operator==(const RegressionTree& other) const;
};

struct Forest {
  std::vector<RegressionTree> trees;
  ForestParams params;

  double predict(const FeatureVector& x) const;
  bool uses_feature(Feature f) const;
};

/// CART regression trees grown on variance reduction (split "x <= threshold" goes
/// left); leaves hold the mean target. Throws InputError on fewer than two rows or
/// non-finite values.
Forest fit_forest(std::span<const FeatureRow> rows, const ForestParams& params = {});

/// A single tree on the given rows without resampling (`params.bootstrap` and
/// `params.n_trees` are ignored).
RegressionTree fit_tree(std::span<const FeatureRow> rows, const ForestParams& params, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Shapley attribution

using PredictFn = std::function<double(const FeatureVector&)>;

struct Attribution {
  FeatureVector phi{};
  double base = 0.0;
  double prediction = 0.0;
};

/// Exact interventional Shapley values over all 2^3 coalitions:
/// v(S) = mean over background b of f(x_S, b_rest); base = v(empty). phi sums to
/// v(all) - base, and v(all) equals f(x) up to rounding.
Attribution exact_shapley(const PredictFn& model, const FeatureVector& x, std::span<const FeatureVector> background);

struct AttributionReport {
  std::vector<std::string> ids;
  std::vector<Attribution> rows;
  /// Mean |phi| per feature.
  FeatureVector mean_abs{};
};

AttributionReport explain(const PredictFn& model, std::span<const FeatureRow> rows,
                          std::span<const FeatureRow> background);

/// Features by descending mean |phi|; equal values keep feature order.
std::vector<std::pair<Feature, double>> global_importance(const AttributionReport& report);

std::string render_attribution_json(const AttributionReport& report, const ForestParams* params = nullptr);

// ---------------------------------------------------------------------------
// Two-cluster split of scores

struct TwoMeans {
  /// Indices into the input, in input order.
  std::vector<std::size_t> hp;
  std::vector<std::size_t> lp;
  double hp_centroid = 0.0;
  double lp_centroid = 0.0;
  double sse = 0.0;
};

/// 1-D k-means with k = 2: Lloyd iterations from centroids at min and max, checked
/// against an exact scan of all split points; the lower within-cluster SSE wins.
/// Throws DegenerateError when all values are equal.
TwoMeans kmeans_two(std::span<const double> scores);

/// Within-cluster sum of squares of a partition.
double partition_sse(std::span<const double> values, std::span<const std::size_t> a,
                     std::span<const std::size_t> b);

// ---------------------------------------------------------------------------
// Statistics

struct StatResult {
  double statistic = 0.0;
  double p_value = 1.0;
  double df1 = 0.0;
  double df2 = 0.0;
};

/// One-way ANOVA, p from F(k-1, N-k). Throws InputError on fewer than two groups
/// or a group with fewer than two values, DegenerateError on zero within-group
/// variance.
StatResult anova_oneway(std::span<const std::vector<double>> groups);

/// Pearson r with a two-sided p from t = r sqrt((n-2)/(1-r^2)), df = n-2.
StatResult pearson(std::span<const double> x, std::span<const double> y);

/// Kendall tau-b with a two-sided normal-approximation p (tie-corrected variance).
StatResult kendall_tau_b(std::span<const double> x, std::span<const double> y);
/// Same, over two rankings of one item set (item -> rank or score).
StatResult kendall_tau_b(const std::map<std::string, double>& a, const std::map<std::string, double>& b);

// ---------------------------------------------------------------------------
// Inter-annotator agreement

struct Rating {
  std::string item;
  std::string rater;
  std::string category;
};

struct AgreementReport {
  double alpha = 1.0;
  std::size_t n_raters = 0;
  std::size_t n_items = 0;
  std::size_t n_pairable = 0;
  std::string metric = "nominal";
};

/// Krippendorff's alpha for nominal data from a coincidence matrix. Items with a
/// single rating are ignored. When only one category occurs alpha is 1. Throws
/// InputError when no item has two ratings, or a rater rates an item twice.
AgreementReport krippendorff_alpha_nominal(std::span<const Rating> ratings);

// ---------------------------------------------------------------------------
// Composite analyses

/// Comparisons whose two rationales differ in word length by at most `tol`
/// (relative to the longer one).
std::vector<Comparison> length_controlled_subset(std::span<const Comparison> comparisons,
                                                 const std::map<std::string, Rationale>& rationales,
                                                 double tol = 0.2);

struct ClusterProfile {
  std::size_t n = 0;
  double contrast_rate = 0.0;
  double novelty_rate = 0.0;
  double mean_length = 0.0;
};

struct HpLpAnalysis {
  TwoMeans clusters;
  ClusterProfile hp;
  ClusterProfile lp;
  /// HP vs LP on the 0/1 indicators; nullopt when the test is degenerate.
  std::optional<StatResult> contrast_anova;
  std::optional<StatResult> novelty_anova;
  std::optional<StatResult> length_anova;
};

/// Clusters `rows` on their target and profiles both clusters.
HpLpAnalysis hp_lp_analysis(std::span<const FeatureRow> rows);

}  // namespace argjudge
