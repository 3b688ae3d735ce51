#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "argjudge/analysis.hpp"

namespace argjudge {

namespace {

constexpr unsigned kAll = (1u << kFeatureCount) - 1;

// |S|! (n - |S| - 1)! / n! for n = 3.
constexpr double coalition_weight(unsigned size) {
  switch (size) {
    case 0: return 1.0 / 3.0;
    case 1: return 1.0 / 6.0;
    default: return 1.0 / 3.0;
  }
}

unsigned popcount(unsigned v) {
  unsigned c = 0;
  for (; v; v &= v - 1) ++c;
  return c;
}

}  // namespace

Attribution exact_shapley(const PredictFn& model, const FeatureVector& x, std::span<const FeatureVector> background) {
  if (background.empty()) throw InputError("Shapley attribution needs a non-empty background");
  std::array<double, kAll + 1> v{};
  for (unsigned s = 0; s <= kAll; ++s) {
    double sum = 0.0;
    for (const auto& b : background) {
      FeatureVector z = b;
      for (std::size_t i = 0; i < kFeatureCount; ++i)
        if (s & (1u << i)) z[i] = x[i];
      sum += model(z);
    }
    v[s] = sum / static_cast<double>(background.size());
  }
  Attribution out;
  out.base = v[0];
  out.prediction = model(x);
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    const unsigned bit = 1u << i;
    double phi = 0.0;
    for (unsigned s = 0; s <= kAll; ++s) {
      if (s & bit) continue;
      phi += coalition_weight(popcount(s)) * (v[s | bit] - v[s]);
    }
    out.phi[i] = phi;
  }
  return out;
}

AttributionReport explain(const PredictFn& model, std::span<const FeatureRow> rows,
                          std::span<const FeatureRow> background) {
  std::vector<FeatureVector> bg;
  bg.reserve(background.size());
  for (const auto& b : background) bg.push_back(b.x());

  AttributionReport report;
  for (const auto& r : rows) {
    report.ids.push_back(r.rationale_id);
    report.rows.push_back(exact_shapley(model, r.x(), bg));
  }
  if (!report.rows.empty()) {
    for (const auto& a : report.rows)
      for (std::size_t i = 0; i < kFeatureCount; ++i) report.mean_abs[i] += std::abs(a.phi[i]);
    for (auto& m : report.mean_abs) m /= static_cast<double>(report.rows.size());
  }
  return report;
}

std::vector<std::pair<Feature, double>> global_importance(const AttributionReport& report) {
  if (report.rows.empty()) throw InputError("global importance needs at least one attributed row");
  std::vector<std::pair<Feature, double>> out;
  for (std::size_t i = 0; i < kFeatureCount; ++i) out.emplace_back(static_cast<Feature>(i), report.mean_abs[i]);
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  return out;
}

std::string render_attribution_json(const AttributionReport& report, const ForestParams* params) {
  nlohmann::json j;
  if (params) {
    j["forest"] = {{"n_trees", params->n_trees},       {"max_depth", params->max_depth},
                   {"min_leaf", params->min_leaf},     {"max_features", params->max_features},
                   {"bootstrap", params->bootstrap},   {"seed", params->seed}};
  }
  nlohmann::json importance = nlohmann::json::array();
  if (!report.rows.empty())
    for (const auto& [f, v] : global_importance(report))
      importance.push_back({{"feature", to_string(f)}, {"mean_abs_phi", v}});
  j["importance"] = std::move(importance);
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t r = 0; r < report.rows.size(); ++r) {
    const auto& a = report.rows[r];
    rows.push_back({{"rationale_id", report.ids[r]},
                    {"base", a.base},
                    {"prediction", a.prediction},
                    {"phi_length", a.phi[0]},
                    {"phi_contrast", a.phi[1]},
                    {"phi_novelty", a.phi[2]}});
  }
  j["rows"] = std::move(rows);
  return j.dump(2);
}

}  // namespace argjudge
