#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <boost/math/distributions/students_t.hpp>
#include <nlohmann/json.hpp>

#include <argjudge/analysis.hpp>

#include "support/oracles.hpp"

using namespace argjudge;

namespace {

std::vector<FeatureRow> synthetic_rows(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<FeatureRow> rows;
  for (std::size_t i = 0; i < n; ++i) {
    FeatureRow r;
    r.rationale_id = "r" + std::to_string(i);
    r.x_length = static_cast<double>(20 + rng() % 60);
    r.x_contrast = static_cast<double>(rng() % 2);
    r.x_novelty = static_cast<double>(rng() % 2);
    r.target = 1.0 + 4.0 * r.x_contrast + r.x_length / 40.0;
    rows.push_back(r);
  }
  return rows;
}

double tau_b_oracle(const std::vector<double>& x, const std::vector<double>& y) {
  double c = 0, d = 0, tx = 0, ty = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const double sx = (x[i] > x[j]) - (x[i] < x[j]);
      const double sy = (y[i] > y[j]) - (y[i] < y[j]);
      if (sx == 0 && sy == 0) continue;
      if (sx == 0) {
        tx += 1;
      } else if (sy == 0) {
        ty += 1;
      } else if (sx == sy) {
        c += 1;
      } else {
        d += 1;
      }
    }
  return (c - d) / std::sqrt((c + d + tx) * (c + d + ty));
}

}  // namespace

TEST(FeatureTable, BuildRoundTripAndErrors) {
  Scoreboard b;
  b.pair_id = "p1";
  b.participants = {"a", "b", "c"};
  b.s = {{"a", 2}, {"b", 0.5}, {"c", 0.5}};
  b.ranks = {{"a", 3}, {"b", 1.5}, {"c", 1.5}};
  auto ra = make_rationale("p1/a", "p1", "a", "one two three four five six", Provenance::base, Winner::first);
  ra.content = ContentLabels{true, false};
  auto rb = make_rationale("p1/b", "p1", "b", "one two", Provenance::base, Winner::first);
  rb.content = ContentLabels{false, true};
  auto rc = make_rationale("p1/c", "p1", "c", "unlabeled", Provenance::base, Winner::first);
  const std::vector<Rationale> rs{ra, rb, rc};
  const std::vector<Scoreboard> boards{b};

  const auto rows = build_feature_rows(boards, rs);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].x(), (FeatureVector{6, 1, 0}));
  EXPECT_DOUBLE_EQ(rows[0].target, 3.0);
  EXPECT_DOUBLE_EQ(build_feature_rows(boards, rs, TargetKind::score)[1].target, 0.5);

  const auto text = render_feature_table(rows);
  const auto back = parse_feature_table(text);
  ASSERT_EQ(back.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(back[i].rationale_id, rows[i].rationale_id);
    EXPECT_EQ(back[i].x(), rows[i].x());
    EXPECT_DOUBLE_EQ(back[i].target, rows[i].target);
  }
  EXPECT_THROW(parse_feature_table(""), DatasetError);
  EXPECT_THROW(parse_feature_table("rationale_id,x_length\nr,1\n"), DatasetError);
  try {
    parse_feature_table("rationale_id,x_length,x_contrast,x_novelty,target\nr1,1,0,0,2\nr2,abc,0,0,1\n");
    FAIL();
  } catch (const RecordError& e) {
    EXPECT_EQ(e.row(), 3u);
  }
}

TEST(Forest, FitsStepFunctionExactly) {
  auto rows = synthetic_rows(60, 1);
  for (auto& r : rows) r.target = r.x_contrast > 0.5 ? 7.0 : 2.0;
  ForestParams p;
  p.n_trees = 1;
  p.bootstrap = false;
  const auto tree = fit_tree(rows, p, 9);
  EXPECT_DOUBLE_EQ(tree.predict({40, 1, 0}), 7.0);
  EXPECT_DOUBLE_EQ(tree.predict({40, 0, 1}), 2.0);
  EXPECT_TRUE(tree.uses_feature(Feature::contrast));
  EXPECT_FALSE(tree.uses_feature(Feature::novelty));
}

TEST(Forest, ConstantTargetIsASingleLeaf) {
  auto rows = synthetic_rows(30, 2);
  for (auto& r : rows) r.target = 4.25;
  const auto forest = fit_forest(rows);
  EXPECT_DOUBLE_EQ(forest.predict({50, 1, 1}), 4.25);
  for (auto f : {Feature::length, Feature::contrast, Feature::novelty}) EXPECT_FALSE(forest.uses_feature(f));
}

TEST(Forest, DeterministicUnderSeedAndBoundedByTargets) {
  const auto rows = synthetic_rows(80, 3);
  ForestParams p;
  p.n_trees = 20;
  p.seed = 5;
  const auto a = fit_forest(rows, p);
  const auto b = fit_forest(rows, p);
  ASSERT_EQ(a.trees.size(), 20u);
  for (std::size_t i = 0; i < a.trees.size(); ++i) EXPECT_TRUE(a.trees[i] == b.trees[i]);
  double lo = 1e9, hi = -1e9;
  for (const auto& r : rows) {
    lo = std::min(lo, r.target);
    hi = std::max(hi, r.target);
  }
  for (const auto& r : rows) {
    const double y = a.predict(r.x());
    EXPECT_GE(y, lo - 1e-12);
    EXPECT_LE(y, hi + 1e-12);
  }
  p.seed = 6;
  const auto c = fit_forest(rows, p);
  bool differs = false;
  for (std::size_t i = 0; i < a.trees.size(); ++i) differs |= !(a.trees[i] == c.trees[i]);
  EXPECT_TRUE(differs);
}

TEST(Forest, DepthAndLeafLimits) {
  const auto rows = synthetic_rows(50, 4);
  ForestParams p;
  p.max_depth = 1;
  const auto stump = fit_tree(rows, p, 1);
  EXPECT_LE(stump.nodes.size(), 3u);
  p.max_depth = 0;
  p.min_leaf = 25;
  const auto wide = fit_tree(rows, p, 1);
  EXPECT_LE(wide.nodes.size(), 3u);
}

TEST(Forest, RejectsBadInput) {
  auto rows = synthetic_rows(5, 5);
  EXPECT_THROW(fit_forest(std::span<const FeatureRow>(rows.data(), 1)), InputError);
  rows[2].target = std::nan("");
  EXPECT_THROW(fit_forest(rows), InputError);
  ForestParams p;
  p.n_trees = 0;
  EXPECT_THROW(fit_forest(synthetic_rows(5, 5), p), InputError);
}

TEST(Shapley, MatchesPermutationOracleOnRandomModels) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int trial = 0; trial < 50; ++trial) {
    const double w0 = u(rng), w1 = u(rng), w2 = u(rng), w01 = u(rng), w012 = u(rng);
    const std::function<double(const FeatureVector&)> f = [=](const FeatureVector& x) {
      return w0 * x[0] + w1 * x[1] * x[1] + w2 * std::sin(x[2]) + w01 * x[0] * x[1] + w012 * x[0] * x[1] * x[2] +
             (x[2] > 0.3 ? 1.0 : 0.0);
    };
    std::vector<FeatureVector> bg;
    for (int i = 0; i < 7; ++i) bg.push_back({u(rng), u(rng), u(rng)});
    const FeatureVector x{u(rng), u(rng), u(rng)};
    const auto got = exact_shapley(f, x, bg);
    const auto want = oracle::permutation_shapley<3>(f, x, bg);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(got.phi[i], want[i], 1e-12);
    EXPECT_NEAR(got.phi[0] + got.phi[1] + got.phi[2], f(x) - got.base, 1e-12);
    EXPECT_NEAR(got.prediction, f(x), 1e-12);
  }
}

TEST(Shapley, LinearModelAndNullPlayer) {
  const PredictFn f = [](const FeatureVector& x) { return 3.0 * x[0] - 2.0 * x[2]; };
  const std::vector<FeatureVector> bg{{1, 0, 0}, {3, 1, 2}};
  const auto a = exact_shapley(f, {4, 9, 1}, bg);
  EXPECT_NEAR(a.phi[0], 3.0 * (4 - 2), 1e-12);
  EXPECT_EQ(a.phi[1], 0.0);
  EXPECT_NEAR(a.phi[2], -2.0 * (1 - 1), 1e-12);
  EXPECT_THROW(exact_shapley(f, {0, 0, 0}, std::vector<FeatureVector>{}), InputError);
}

TEST(Shapley, ExplainAndImportanceOrder) {
  const auto rows = synthetic_rows(40, 8);
  const PredictFn f = [](const FeatureVector& x) { return 4.0 * x[1] + 0.01 * x[0]; };
  const auto report = explain(f, rows, rows);
  ASSERT_EQ(report.rows.size(), rows.size());
  EXPECT_EQ(report.ids.front(), "r0");
  double manual = 0;
  for (const auto& r : report.rows) manual += std::abs(r.phi[1]);
  EXPECT_NEAR(report.mean_abs[1], manual / static_cast<double>(rows.size()), 1e-12);
  EXPECT_EQ(report.mean_abs[2], 0.0);
  const auto order = global_importance(report);
  EXPECT_EQ(order[0].first, Feature::contrast);
  EXPECT_EQ(order[1].first, Feature::length);
  EXPECT_EQ(order[2].first, Feature::novelty);
  const auto j = nlohmann::json::parse(render_attribution_json(report));
  EXPECT_TRUE(j.is_object());
}

TEST(KMeans, MatchesExhaustiveThresholdOracle) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + rng() % 30;
    std::vector<double> v;
    for (std::size_t i = 0; i < n; ++i) v.push_back(static_cast<double>(rng() % 13) / 2.0);
    if (*std::min_element(v.begin(), v.end()) == *std::max_element(v.begin(), v.end())) {
      EXPECT_THROW(kmeans_two(v), DegenerateError);
      continue;
    }
    const auto km = kmeans_two(v);
    EXPECT_NEAR(km.sse, oracle::best_threshold_sse(v), 1e-9);
    EXPECT_NEAR(km.sse, partition_sse(v, km.hp, km.lp), 1e-9);
    EXPECT_EQ(km.hp.size() + km.lp.size(), n);
    EXPECT_GT(km.hp_centroid, km.lp_centroid);
    double max_lp = -1e9, min_hp = 1e9;
    for (auto i : km.lp) max_lp = std::max(max_lp, v[i]);
    for (auto i : km.hp) min_hp = std::min(min_hp, v[i]);
    EXPECT_LT(max_lp, min_hp);
  }
  EXPECT_THROW(kmeans_two(std::vector<double>{1.0}), DegenerateError);
  EXPECT_THROW(kmeans_two(std::vector<double>{1.0, std::nan("")}), InputError);
}

TEST(Anova, HandExampleAndTwoGroupIdentity) {
  const std::vector<std::vector<double>> g{{1, 2, 3}, {4, 5, 6}};
  const auto r = anova_oneway(g);
  EXPECT_NEAR(r.statistic, 13.5, 1e-12);
  EXPECT_DOUBLE_EQ(r.df1, 1.0);
  EXPECT_DOUBLE_EQ(r.df2, 4.0);

  std::mt19937_64 rng(41);
  std::normal_distribution<double> nd(0, 1);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> a, b;
    for (int i = 0; i < 8; ++i) a.push_back(nd(rng));
    for (int i = 0; i < 11; ++i) b.push_back(nd(rng) + 0.5);
    const auto res = anova_oneway(std::vector<std::vector<double>>{a, b});
    const double t = oracle::pooled_t(a, b);
    EXPECT_NEAR(res.statistic, t * t, 1e-9);
    boost::math::students_t dist(17);
    EXPECT_NEAR(res.p_value, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))), 1e-9);
  }
  EXPECT_THROW(anova_oneway(std::vector<std::vector<double>>{{1, 2}}), InputError);
  EXPECT_THROW(anova_oneway(std::vector<std::vector<double>>{{1, 2}, {3}}), InputError);
  EXPECT_THROW(anova_oneway(std::vector<std::vector<double>>{{1, 1}, {3, 3}}), DegenerateError);
}

TEST(Pearson, MatchesCovarianceFormula) {
  std::mt19937_64 rng(51);
  std::normal_distribution<double> nd(0, 1);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x, y;
    for (int i = 0; i < 25; ++i) {
      x.push_back(nd(rng));
      y.push_back(0.3 * x.back() + nd(rng));
    }
    const auto r = pearson(x, y);
    const double want = oracle::covariance_pearson(x, y);
    EXPECT_NEAR(r.statistic, want, 1e-12);
    const double t = want * std::sqrt(23.0 / (1.0 - want * want));
    boost::math::students_t dist(23);
    EXPECT_NEAR(r.p_value, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))), 1e-9);
  }
  const std::vector<double> x{1, 2, 3, 4}, up{2, 4, 6, 8}, flat{1, 1, 1, 1};
  EXPECT_NEAR(pearson(x, up).statistic, 1.0, 1e-15);
  EXPECT_EQ(pearson(x, up).p_value, 0.0);
  EXPECT_THROW(pearson(x, flat), DegenerateError);
  EXPECT_THROW(pearson(std::vector<double>{1, 2}, std::vector<double>{1, 2}), InputError);
}

TEST(Kendall, TauBMatchesPairCountingOracle) {
  std::mt19937_64 rng(61);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 3 + rng() % 15;
    std::vector<double> x, y;
    for (std::size_t i = 0; i < n; ++i) {
      x.push_back(static_cast<double>(rng() % 5));
      y.push_back(static_cast<double>(rng() % 5));
    }
    const bool constant = std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; }) ||
                          std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; });
    if (constant) {
      EXPECT_THROW(kendall_tau_b(x, y), DegenerateError);
      continue;
    }
    EXPECT_NEAR(kendall_tau_b(x, y).statistic, tau_b_oracle(x, y), 1e-12);
  }
}

TEST(Kendall, NoTiePValueUsesClassicVariance) {
  const std::vector<double> x{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  const std::vector<double> y{2, 1, 4, 3, 6, 5, 8, 7, 10, 9};
  const auto r = kendall_tau_b(x, y);
  // 45 pairs, 5 discordant.
  EXPECT_NEAR(r.statistic, 35.0 / 45.0, 1e-12);
  const double var = 10.0 * 9.0 * 25.0 / 18.0;
  EXPECT_NEAR(r.p_value, std::erfc(35.0 / std::sqrt(var) / std::sqrt(2.0)), 1e-12);

  const std::map<std::string, double> a{{"m1", 1}, {"m2", 2}, {"m3", 3}};
  const std::map<std::string, double> b{{"m1", 3}, {"m2", 2}, {"m3", 1}};
  EXPECT_NEAR(kendall_tau_b(a, b).statistic, -1.0, 1e-12);
  EXPECT_THROW(kendall_tau_b(a, std::map<std::string, double>{{"m1", 1}, {"m2", 2}, {"zz", 3}}), InputError);
}

TEST(Alpha, MatchesDisagreementOracle) {
  std::mt19937_64 rng(71);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Rating> ratings;
    std::vector<std::vector<std::string>> items;
    const std::size_t n_items = 3 + rng() % 10;
    for (std::size_t i = 0; i < n_items; ++i) {
      std::vector<std::string> vals;
      const std::size_t raters = 1 + rng() % 4;
      for (std::size_t r = 0; r < raters; ++r) {
        const std::string v = "c" + std::to_string(rng() % 3);
        vals.push_back(v);
        ratings.push_back({"i" + std::to_string(i), "r" + std::to_string(r), v});
      }
      items.push_back(vals);
    }
    std::set<std::string> cats;
    std::size_t pairable = 0;
    for (const auto& u : items)
      if (u.size() >= 2) {
        cats.insert(u.begin(), u.end());
        ++pairable;
      }
    if (pairable == 0) {
      EXPECT_THROW(krippendorff_alpha_nominal(ratings), InputError);
      continue;
    }
    const auto rep = krippendorff_alpha_nominal(ratings);
    if (cats.size() == 1) {
      EXPECT_EQ(rep.alpha, 1.0);
    } else {
      EXPECT_NEAR(rep.alpha, oracle::alpha_from_disagreement(items), 1e-12);
    }
    EXPECT_EQ(rep.n_items, n_items);
  }
}

TEST(Alpha, PerfectAgreementAndDuplicates) {
  const std::vector<Rating> same{{"i1", "r1", "yes"}, {"i1", "r2", "yes"}, {"i2", "r1", "no"}, {"i2", "r2", "no"}};
  const auto rep = krippendorff_alpha_nominal(same);
  EXPECT_DOUBLE_EQ(rep.alpha, 1.0);
  EXPECT_EQ(rep.n_raters, 2u);
  EXPECT_EQ(rep.n_pairable, 4u);
  const std::vector<Rating> twice{{"i1", "r1", "yes"}, {"i1", "r1", "no"}, {"i1", "r2", "no"}};
  EXPECT_THROW(krippendorff_alpha_nominal(twice), InputError);
}

TEST(LengthControl, KeepsComparisonsWithinTolerance) {
  std::map<std::string, Rationale> rs;
  auto add = [&rs](const std::string& id, std::size_t words) {
    rs[id] = make_rationale(id, "p", id, oracle::words(words), Provenance::base, Winner::first);
  };
  add("p/a", 100);
  add("p/b", 80);
  add("p/c", 79);
  const std::vector<Comparison> cs{{"p", "a", "b", "p/a", "p/b"},
                                   {"p", "a", "c", "p/a", "p/c"},
                                   {"p", "b", "c", "p/b", "p/c"},
                                   {"p", "a", "z", "p/a", "p/z"}};
  const auto kept = length_controlled_subset(cs, rs, 0.2);
  ASSERT_EQ(kept.size(), 2u);
  EXPECT_EQ(kept[0].participant_b, "b");
  EXPECT_EQ(kept[1].participant_a, "b");
}

TEST(HpLp, ProfilesClusters) {
  std::vector<FeatureRow> rows;
  for (int i = 0; i < 10; ++i) {
    FeatureRow r;
    r.rationale_id = std::to_string(i);
    r.x_contrast = i < 5 ? 1.0 : (i == 9 ? 1.0 : 0.0);
    r.x_novelty = 1.0;
    r.x_length = 10.0 + i;
    r.target = i < 5 ? 8.0 + 0.1 * i : 2.0;
    rows.push_back(r);
  }
  const auto a = hp_lp_analysis(rows);
  EXPECT_EQ(a.hp.n, 5u);
  EXPECT_DOUBLE_EQ(a.hp.contrast_rate, 1.0);
  EXPECT_DOUBLE_EQ(a.lp.contrast_rate, 0.2);
  EXPECT_DOUBLE_EQ(a.hp.mean_length, 12.0);
  ASSERT_TRUE(a.contrast_anova.has_value());
  EXPECT_FALSE(a.novelty_anova.has_value());
  EXPECT_TRUE(a.length_anova.has_value());
}
