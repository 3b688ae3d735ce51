#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "argjudge/analysis.hpp"

namespace argjudge {

std::string_view to_string(Feature f) {
  switch (f) {
    case Feature::length: return "length";
    case Feature::contrast: return "contrast";
    case Feature::novelty: return "novelty";
  }
  return "length";
}

double RegressionTree::predict(const FeatureVector& x) const {
  if (nodes.empty()) return 0.0;
  int i = 0;
  while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
    const auto& n = nodes[static_cast<std::size_t>(i)];
    i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return nodes[static_cast<std::size_t>(i)].value;
}

bool RegressionTree::uses_feature(Feature f) const {
  return std::any_of(nodes.begin(), nodes.end(),
                     [f](const TreeNode& n) { return n.feature == static_cast<int>(f); });
}

bool RegressionTree::operator==(const RegressionTree& other) const {
  if (nodes.size() != other.nodes.size()) return false;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& a = nodes[i];
    const auto& b = other.nodes[i];
    if (a.feature != b.feature || a.threshold != b.threshold || a.value != b.value || a.left != b.left ||
        a.right != b.right)
      return false;
  }
  return true;
}

double Forest::predict(const FeatureVector& x) const {
  if (trees.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& t : trees) sum += t.predict(x);
  return sum / static_cast<double>(trees.size());
}

bool Forest::uses_feature(Feature f) const {
  return std::any_of(trees.begin(), trees.end(), [f](const RegressionTree& t) { return t.uses_feature(f); });
}

namespace {

struct Builder {
  std::vector<FeatureVector> x;
  std::vector<double> y;
  const ForestParams& params;
  std::mt19937_64 rng;
  RegressionTree tree;

  Builder(std::span<const FeatureRow> rows, const ForestParams& p, std::uint64_t seed) : params(p), rng(seed) {
    x.reserve(rows.size());
    y.reserve(rows.size());
    for (const auto& r : rows) {
      x.push_back(r.x());
      y.push_back(r.target);
    }
  }

  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
    std::size_t left_count = 0;
  };

  Split best_split(std::vector<std::size_t>& idx) {
    Split best;
    const std::size_t n = idx.size();
    const auto min_leaf = static_cast<std::size_t>(std::max(1, params.min_leaf));
    if (n < 2 * min_leaf) return best;

    double total = 0.0, total_sq = 0.0;
    for (auto i : idx) {
      total += y[i];
      total_sq += y[i] * y[i];
    }
    const double parent_sse = total_sq - total * total / static_cast<double>(n);

    std::vector<int> features(kFeatureCount);
    std::iota(features.begin(), features.end(), 0);
    const auto k = static_cast<std::size_t>(std::clamp(params.max_features, 1, static_cast<int>(kFeatureCount)));
    if (k < kFeatureCount) {
      portable_shuffle(features, rng);
      features.resize(k);
      std::sort(features.begin(), features.end());
    }

    std::vector<std::size_t> order(idx);
    for (int f : features) {
      const auto fu = static_cast<std::size_t>(f);
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a][fu] < x[b][fu]; });
      double left = 0.0, left_sq = 0.0;
      for (std::size_t c = 1; c < n; ++c) {
        const double v = y[order[c - 1]];
        left += v;
        left_sq += v * v;
        if (c < min_leaf || n - c < min_leaf) continue;
        const double lo = x[order[c - 1]][fu];
        const double hi = x[order[c]][fu];
        if (!(lo < hi)) continue;
        const double right = total - left;
        const double right_sq = total_sq - left_sq;
        const double sse = (left_sq - left * left / static_cast<double>(c)) +
                           (right_sq - right * right / static_cast<double>(n - c));
        const double gain = parent_sse - sse;
        if (gain > best.gain) {
          best = Split{f, lo + (hi - lo) / 2.0, gain, c};
        }
      }
    }
    if (best.gain <= 1e-12 * std::max(1.0, std::abs(parent_sse))) best.feature = -1;
    return best;
  }

  int grow(std::vector<std::size_t> idx, int depth) {
    const auto node_index = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    double sum = 0.0;
    for (auto i : idx) sum += y[i];
    tree.nodes.back().value = sum / static_cast<double>(idx.size());

    const bool constant =
        std::all_of(idx.begin(), idx.end(), [&](std::size_t i) { return y[i] == y[idx.front()]; });
    if (constant || (params.max_depth > 0 && depth >= params.max_depth)) return node_index;

    const Split split = best_split(idx);
    if (split.feature < 0) return node_index;

    std::vector<std::size_t> left, right;
    const auto fu = static_cast<std::size_t>(split.feature);
    for (auto i : idx) (x[i][fu] <= split.threshold ? left : right).push_back(i);
    if (left.empty() || right.empty()) return node_index;

    const int l = grow(std::move(left), depth + 1);
    const int r = grow(std::move(right), depth + 1);
    auto& node = tree.nodes[static_cast<std::size_t>(node_index)];
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = l;
    node.right = r;
    return node_index;
  }
};

void check_rows(std::span<const FeatureRow> rows) {
  if (rows.size() < 2) throw InputError("a forest needs at least two rows");
  for (const auto& r : rows)
    if (!std::isfinite(r.x_length) || !std::isfinite(r.x_contrast) || !std::isfinite(r.x_novelty) ||
        !std::isfinite(r.target))
      throw InputError("non-finite feature value in row " + r.rationale_id);
}

}  // namespace

RegressionTree fit_tree(std::span<const FeatureRow> rows, const ForestParams& params, std::uint64_t seed) {
  check_rows(rows);
  Builder b(rows, params, seed);
  std::vector<std::size_t> idx(rows.size());
  std::iota(idx.begin(), idx.end(), 0);
  b.grow(std::move(idx), 0);
  return std::move(b.tree);
}

Forest fit_forest(std::span<const FeatureRow> rows, const ForestParams& params) {
  check_rows(rows);
  if (params.n_trees < 1) throw InputError("n_trees must be positive");
  Forest forest;
  forest.params = params;
  forest.trees.reserve(static_cast<std::size_t>(params.n_trees));
  for (int t = 0; t < params.n_trees; ++t) {
    const std::uint64_t tree_seed = mix_seed(params.seed, static_cast<std::uint64_t>(t));
    Builder b(rows, params, mix_seed(tree_seed, 1));
    std::vector<std::size_t> idx(rows.size());
    if (params.bootstrap) {
      std::mt19937_64 draw(tree_seed);
      for (auto& i : idx) i = static_cast<std::size_t>(bounded_draw(draw, rows.size()));
      std::sort(idx.begin(), idx.end());
    } else {
      std::iota(idx.begin(), idx.end(), 0);
    }
    b.grow(std::move(idx), 0);
    forest.trees.push_back(std::move(b.tree));
  }
  return forest;
}

}  // namespace argjudge
