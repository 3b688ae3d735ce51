#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "argjudge/analysis.hpp"

namespace argjudge {

double partition_sse(std::span<const double> values, std::span<const std::size_t> a, std::span<const std::size_t> b) {
  auto sse = [&](std::span<const std::size_t> idx) {
    if (idx.empty()) return 0.0;
    double mean = 0.0;
    for (auto i : idx) mean += values[i];
    mean /= static_cast<double>(idx.size());
    double s = 0.0;
    for (auto i : idx) s += (values[i] - mean) * (values[i] - mean);
    return s;
  };
  return sse(a) + sse(b);
}

namespace {

double mean_of(std::span<const double> values, const std::vector<std::size_t>& idx) {
  double s = 0.0;
  for (auto i : idx) s += values[i];
  return s / static_cast<double>(idx.size());
}

// Returns (low, high) index sets.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> lloyd(std::span<const double> v) {
  const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
  double c_lo = *mn;
  double c_hi = *mx;
  std::vector<bool> high(v.size(), false);
  for (int iter = 0; iter < 1000; ++iter) {
    bool changed = iter == 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const bool h = std::abs(v[i] - c_hi) < std::abs(v[i] - c_lo);
      if (h != high[i]) {
        high[i] = h;
        changed = true;
      }
    }
    std::vector<std::size_t> lo, hi;
    for (std::size_t i = 0; i < v.size(); ++i) (high[i] ? hi : lo).push_back(i);
    if (lo.empty() || hi.empty()) break;
    c_lo = mean_of(v, lo);
    c_hi = mean_of(v, hi);
    if (!changed) break;
  }
  std::vector<std::size_t> lo, hi;
  for (std::size_t i = 0; i < v.size(); ++i) (high[i] ? hi : lo).push_back(i);
  return {lo, hi};
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> threshold_scan(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  double total = 0.0, total_sq = 0.0;
  for (double x : v) {
    total += x;
    total_sq += x * x;
  }
  const std::size_t n = v.size();
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_cut = 0;
  double left = 0.0, left_sq = 0.0;
  for (std::size_t c = 1; c < n; ++c) {
    left += v[order[c - 1]];
    left_sq += v[order[c - 1]] * v[order[c - 1]];
    if (!(v[order[c - 1]] < v[order[c]])) continue;
    const double right = total - left;
    const double right_sq = total_sq - left_sq;
    const double sse = (left_sq - left * left / static_cast<double>(c)) +
                       (right_sq - right * right / static_cast<double>(n - c));
    if (sse < best) {
      best = sse;
      best_cut = c;
    }
  }
  std::vector<std::size_t> lo(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(best_cut));
  std::vector<std::size_t> hi(order.begin() + static_cast<std::ptrdiff_t>(best_cut), order.end());
  std::sort(lo.begin(), lo.end());
  std::sort(hi.begin(), hi.end());
  return {lo, hi};
}

}  // namespace

TwoMeans kmeans_two(std::span<const double> scores) {
  if (scores.size() < 2) throw DegenerateError("two-cluster split needs at least two values");
  for (double s : scores)
    if (!std::isfinite(s)) throw InputError("non-finite score");
  const auto [mn, mx] = std::minmax_element(scores.begin(), scores.end());
  if (*mn == *mx) throw DegenerateError("all scores are equal; no two-cluster split exists");

  auto [lo, hi] = lloyd(scores);
  double sse = (lo.empty() || hi.empty()) ? std::numeric_limits<double>::infinity() : partition_sse(scores, lo, hi);
  auto [scan_lo, scan_hi] = threshold_scan(scores);
  const double scan_sse = partition_sse(scores, scan_lo, scan_hi);
  if (scan_sse < sse) {
    lo = std::move(scan_lo);
    hi = std::move(scan_hi);
    sse = scan_sse;
  }

  TwoMeans out;
  out.lp_centroid = mean_of(scores, lo);
  out.hp_centroid = mean_of(scores, hi);
  out.lp = std::move(lo);
  out.hp = std::move(hi);
  out.sse = sse;
  return out;
}

}  // namespace argjudge
