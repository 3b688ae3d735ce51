#include <map>
#include <set>

#include "argjudge/analysis.hpp"

namespace argjudge {

AgreementReport krippendorff_alpha_nominal(std::span<const Rating> ratings) {
  std::map<std::string, std::vector<std::string>> by_item;
  std::set<std::pair<std::string, std::string>> seen;
  std::set<std::string> raters;
  for (const auto& r : ratings) {
    if (!seen.emplace(r.item, r.rater).second)
      throw InputError("rater " + r.rater + " rated item " + r.item + " twice");
    by_item[r.item].push_back(r.category);
    raters.insert(r.rater);
  }

  // Coincidence matrix over pairable items.
  std::map<std::pair<std::string, std::string>, double> o;
  std::map<std::string, double> n_c;
  double n = 0.0;
  std::size_t pairable_items = 0;
  for (const auto& [item, cats] : by_item) {
    const std::size_t m = cats.size();
    if (m < 2) continue;
    ++pairable_items;
    const double w = 1.0 / static_cast<double>(m - 1);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j)
        if (i != j) o[{cats[i], cats[j]}] += w;
    for (const auto& c : cats) n_c[c] += 1.0;
    n += static_cast<double>(m);
  }
  if (pairable_items == 0) throw InputError("Krippendorff's alpha: no item has two ratings");

  AgreementReport rep;
  rep.n_raters = raters.size();
  rep.n_items = by_item.size();
  rep.n_pairable = static_cast<std::size_t>(n);

  double observed = 0.0;
  for (const auto& [ck, v] : o)
    if (ck.first != ck.second) observed += v;
  double expected = 0.0;
  for (const auto& [c, nc] : n_c)
    for (const auto& [k, nk] : n_c)
      if (c != k) expected += nc * nk;

  if (observed == 0.0 || expected == 0.0) {
    rep.alpha = 1.0;
  } else {
    rep.alpha = 1.0 - (n - 1.0) * observed / expected;
  }
  return rep;
}

}  // namespace argjudge
