#include <cmath>
#include <fmt/format.h>

#include "argjudge/analysis.hpp"
#include "csv.hpp"

namespace argjudge {

std::vector<FeatureRow> build_feature_rows(std::span<const Scoreboard> boards, std::span<const Rationale> rationales,
                                           TargetKind target) {
  std::map<std::string, const Rationale*> by_id;
  for (const auto& r : rationales) by_id[r.id] = &r;
  std::vector<FeatureRow> rows;
  for (const auto& b : boards) {
    for (const auto& participant : b.participants) {
      auto it = by_id.find(rationale_id(b.pair_id, participant));
      if (it == by_id.end() || !it->second->content) continue;
      const Rationale& r = *it->second;
      FeatureRow row;
      row.rationale_id = r.id;
      row.x_length = static_cast<double>(r.word_length);
      row.x_contrast = r.content->contrast ? 1.0 : 0.0;
      row.x_novelty = r.content->novelty ? 1.0 : 0.0;
      row.target = target == TargetKind::rank ? b.ranks.at(participant) : b.s.at(participant);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

namespace {

double parse_number(const std::string& text, std::size_t row, const char* column) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size() || !std::isfinite(v)) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw RecordError(row, fmt::format("column {}: '{}' is not a number", column, text));
  }
}

}  // namespace

std::vector<FeatureRow> parse_feature_table(std::string_view text, char delimiter) {
  const auto records = detail::read_delimited(text, delimiter);
  if (records.empty()) throw DatasetError("feature table is empty");
  const auto& header = records.front().fields;
  auto col = [&](const char* name) {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (trim(header[i]) == name) return i;
    throw DatasetError(fmt::format("feature table lacks column '{}'", name));
  };
  const std::size_t c_id = col("rationale_id");
  const std::size_t c_len = col("x_length");
  const std::size_t c_con = col("x_contrast");
  const std::size_t c_nov = col("x_novelty");
  const std::size_t c_tgt = col("target");

  std::vector<FeatureRow> rows;
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& f = records[i].fields;
    const std::size_t line = records[i].line;
    if (f.size() != header.size()) throw RecordError(line, "wrong number of fields");
    FeatureRow r;
    r.rationale_id = f[c_id];
    r.x_length = parse_number(trim(f[c_len]), line, "x_length");
    r.x_contrast = parse_number(trim(f[c_con]), line, "x_contrast");
    r.x_novelty = parse_number(trim(f[c_nov]), line, "x_novelty");
    r.target = parse_number(trim(f[c_tgt]), line, "target");
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<FeatureRow> load_feature_table(const std::string& path) {
  const bool tsv = path.size() >= 4 && path.substr(path.size() - 4) == ".tsv";
  return parse_feature_table(detail::slurp_file(path), tsv ? '\t' : ',');
}

std::string render_feature_table(std::span<const FeatureRow> rows, char delimiter) {
  std::string out = detail::write_delimited_row({"rationale_id", "x_length", "x_contrast", "x_novelty", "target"},
                                                delimiter);
  for (const auto& r : rows)
    out += detail::write_delimited_row({r.rationale_id, fmt::format("{}", r.x_length), fmt::format("{}", r.x_contrast),
                                        fmt::format("{}", r.x_novelty), fmt::format("{}", r.target)},
                                       delimiter);
  return out;
}

std::vector<Comparison> length_controlled_subset(std::span<const Comparison> comparisons,
                                                 const std::map<std::string, Rationale>& rationales, double tol) {
  std::vector<Comparison> out;
  for (const auto& c : comparisons) {
    auto a = rationales.find(c.rationale_a);
    auto b = rationales.find(c.rationale_b);
    if (a == rationales.end() || b == rationales.end()) continue;
    if (length_ratio(a->second.word_length, b->second.word_length) <= tol) out.push_back(c);
  }
  return out;
}

namespace {

ClusterProfile profile(std::span<const FeatureRow> rows, std::span<const std::size_t> idx) {
  ClusterProfile p;
  p.n = idx.size();
  if (idx.empty()) return p;
  for (auto i : idx) {
    p.contrast_rate += rows[i].x_contrast;
    p.novelty_rate += rows[i].x_novelty;
    p.mean_length += rows[i].x_length;
  }
  const double n = static_cast<double>(idx.size());
  p.contrast_rate /= n;
  p.novelty_rate /= n;
  p.mean_length /= n;
  return p;
}

std::optional<StatResult> two_group_anova(std::span<const FeatureRow> rows, const TwoMeans& clusters,
                                          double (*get)(const FeatureRow&)) {
  std::vector<std::vector<double>> groups(2);
  for (auto i : clusters.hp) groups[0].push_back(get(rows[i]));
  for (auto i : clusters.lp) groups[1].push_back(get(rows[i]));
  try {
    return anova_oneway(groups);
  } catch (const Error&) {
    return std::nullopt;
  }
}

}  // namespace

HpLpAnalysis hp_lp_analysis(std::span<const FeatureRow> rows) {
  std::vector<double> targets;
  targets.reserve(rows.size());
  for (const auto& r : rows) targets.push_back(r.target);
  HpLpAnalysis out;
  out.clusters = kmeans_two(targets);
  out.hp = profile(rows, out.clusters.hp);
  out.lp = profile(rows, out.clusters.lp);
  out.contrast_anova = two_group_anova(rows, out.clusters, [](const FeatureRow& r) { return r.x_contrast; });
  out.novelty_anova = two_group_anova(rows, out.clusters, [](const FeatureRow& r) { return r.x_novelty; });
  out.length_anova = two_group_anova(rows, out.clusters, [](const FeatureRow& r) { return r.x_length; });
  return out;
}

}  // namespace argjudge
