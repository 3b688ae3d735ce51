#include <algorithm>
#include <cmath>
#include <set>

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "argjudge/analysis.hpp"

namespace argjudge {

StatResult anova_oneway(std::span<const std::vector<double>> groups) {
  if (groups.size() < 2) throw InputError("ANOVA needs at least two groups");
  std::size_t total_n = 0;
  double grand = 0.0;
  for (const auto& g : groups) {
    if (g.size() < 2) throw InputError("every ANOVA group needs at least two values");
    total_n += g.size();
    for (double v : g) grand += v;
  }
  grand /= static_cast<double>(total_n);

  double between = 0.0, within = 0.0;
  for (const auto& g : groups) {
    double mean = 0.0;
    for (double v : g) mean += v;
    mean /= static_cast<double>(g.size());
    between += static_cast<double>(g.size()) * (mean - grand) * (mean - grand);
    for (double v : g) within += (v - mean) * (v - mean);
  }
  const double df1 = static_cast<double>(groups.size() - 1);
  const double df2 = static_cast<double>(total_n - groups.size());
  if (within == 0.0) throw DegenerateError("ANOVA: no variance within groups");

  StatResult r;
  r.df1 = df1;
  r.df2 = df2;
  r.statistic = (between / df1) / (within / df2);
  boost::math::fisher_f dist(df1, df2);
  r.p_value = boost::math::cdf(boost::math::complement(dist, r.statistic));
  return r;
}

StatResult pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InputError("Pearson: samples differ in length");
  if (x.size() < 3) throw InputError("Pearson needs at least three points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw DegenerateError("Pearson: a sample has zero variance");

  StatResult res;
  res.statistic = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  res.df1 = n - 2.0;
  const double r2 = res.statistic * res.statistic;
  if (r2 >= 1.0) {
    res.p_value = 0.0;
  } else {
    const double t = res.statistic * std::sqrt((n - 2.0) / (1.0 - r2));
    boost::math::students_t dist(n - 2.0);
    res.p_value = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
  }
  return res;
}

namespace {

// Sums of t(t-1), t(t-1)(t-2) and t(t-1)(2t+5) over tie groups of `v`.
struct TieSums {
  double pairs = 0.0;
  double v1 = 0.0;
  double v2 = 0.0;
  double v0 = 0.0;
};

TieSums tie_sums(std::span<const double> v) {
  std::vector<double> s(v.begin(), v.end());
  std::sort(s.begin(), s.end());
  TieSums out;
  std::size_t i = 0;
  while (i < s.size()) {
    std::size_t j = i;
    while (j < s.size() && s[j] == s[i]) ++j;
    const double t = static_cast<double>(j - i);
    out.pairs += t * (t - 1.0) / 2.0;
    out.v1 += t * (t - 1.0);
    out.v2 += t * (t - 1.0) * (t - 2.0);
    out.v0 += t * (t - 1.0) * (2.0 * t + 5.0);
    i = j;
  }
  return out;
}

}  // namespace

StatResult kendall_tau_b(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InputError("Kendall tau: rankings differ in length");
  if (x.size() < 2) throw InputError("Kendall tau needs at least two items");
  const std::size_t n = x.size();
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = x[i] - x[j];
      const double dy = y[i] - y[j];
      const double prod = dx * dy;
      if (prod > 0) s += 1.0;
      if (prod < 0) s -= 1.0;
    }
  }
  const double nn = static_cast<double>(n);
  const double n0 = nn * (nn - 1.0) / 2.0;
  const TieSums tx = tie_sums(x);
  const TieSums ty = tie_sums(y);
  const double denom = std::sqrt((n0 - tx.pairs) * (n0 - ty.pairs));
  if (denom == 0.0) throw DegenerateError("Kendall tau: a ranking is constant");

  StatResult r;
  r.statistic = s / denom;
  double var = (nn * (nn - 1.0) * (2.0 * nn + 5.0) - tx.v0 - ty.v0) / 18.0 + tx.v1 * ty.v1 / (2.0 * nn * (nn - 1.0));
  if (n > 2) var += tx.v2 * ty.v2 / (9.0 * nn * (nn - 1.0) * (nn - 2.0));
  if (var <= 0.0) {
    r.p_value = 1.0;
  } else {
    const double z = s / std::sqrt(var);
    boost::math::normal norm;
    r.p_value = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(norm, std::abs(z))));
  }
  return r;
}

StatResult kendall_tau_b(const std::map<std::string, double>& a, const std::map<std::string, double>& b) {
  if (a.size() != b.size()) throw InputError("Kendall tau: rankings cover different items");
  std::vector<double> x, y;
  for (const auto& [item, v] : a) {
    auto it = b.find(item);
    if (it == b.end()) throw InputError("Kendall tau: item " + item + " missing from second ranking");
    x.push_back(v);
    y.push_back(it->second);
  }
  return kendall_tau_b(x, y);
}

}  // namespace argjudge
