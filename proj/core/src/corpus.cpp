#include "argjudge/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <unordered_map>

#include <fmt/format.h>

#include "csv.hpp"

namespace argjudge {

std::string_view to_string(Stance s) { return s == Stance::pro ? "pro" : "con"; }

std::optional<Stance> stance_from_string(std::string_view text) {
  const std::string t = to_lower(trim(text));
  if (t == "pro" || t == "1" || t == "+1" || t == "support") return Stance::pro;
  if (t == "con" || t == "-1" || t == "oppose") return Stance::con;
  return std::nullopt;
}

Argument make_argument(std::string id, std::string topic_id, Stance stance, std::string text,
                       std::optional<double> quality_score) {
  Argument a;
  a.id = std::move(id);
  a.topic_id = std::move(topic_id);
  a.stance = stance;
  a.word_count = static_cast<int>(word_count(text));
  a.text = std::move(text);
  a.quality_score = quality_score;
  return a;
}

void validate_pair(const ArgumentPair& pair) {
  if (pair.arg1.stance != pair.arg2.stance) throw InputError("stance mismatch in pair " + pair.id);
  if (pair.arg1.id == pair.arg2.id) throw InputError("pair " + pair.id + " repeats argument " + pair.arg1.id);
  if (pair.arg1.quality_score && pair.arg2.quality_score && pair.quality_delta) {
    const double expected = std::abs(*pair.arg1.quality_score - *pair.arg2.quality_score);
    if (std::abs(expected - *pair.quality_delta) > 1e-12)
      throw InputError("pair " + pair.id + " has inconsistent quality_delta");
  }
}

std::optional<DatasetFormat> dataset_format_from_string(std::string_view name) {
  const std::string n = to_lower(name);
  if (n == "csv") return DatasetFormat::csv;
  if (n == "tsv") return DatasetFormat::tsv;
  return std::nullopt;
}

namespace {

char delimiter_for(DatasetFormat f) { return f == DatasetFormat::csv ? ',' : '\t'; }

class Header {
 public:
  explicit Header(const detail::CsvRow& row) {
    for (std::size_t i = 0; i < row.fields.size(); ++i) index_[to_lower(trim(row.fields[i]))] = i;
  }
  std::optional<std::size_t> find(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  std::size_t require(const std::string& name) const {
    auto col = find(name);
    if (!col) throw DatasetError("missing required column '" + name + "'");
    return *col;
  }

 private:
  std::map<std::string, std::size_t> index_;
};

const std::string& field(const detail::CsvRow& row, std::size_t col) {
  if (col >= row.fields.size())
    throw RecordError(row.line, fmt::format("expected at least {} fields, found {}", col + 1,
                                            row.fields.size()));
  return row.fields[col];
}

std::string require_text(const detail::CsvRow& row, std::size_t col, std::string_view what) {
  std::string v = trim(field(row, col));
  if (v.empty()) throw RecordError(row.line, fmt::format("empty {}", what));
  return v;
}

Stance require_stance(const detail::CsvRow& row, std::size_t col) {
  auto s = stance_from_string(field(row, col));
  if (!s) throw RecordError(row.line, "unrecognized stance '" + field(row, col) + "'");
  return *s;
}

std::vector<detail::CsvRow> read_nonempty(std::string_view text, DatasetFormat format) {
  auto rows = detail::read_delimited(text, delimiter_for(format));
  if (rows.size() < 2) throw DatasetError("dataset has no records");
  return rows;
}

}  // namespace

PairwiseLoad parse_pairwise_dataset(std::string_view text, DatasetFormat format) {
  const auto rows = read_nonempty(text, format);
  const Header header(rows.front());
  const auto c_topic = header.require("topic");
  const auto c_a1 = header.require("argument1");
  const auto c_a2 = header.require("argument2");
  const auto c_winner = header.require("winner");
  const auto c_stance = header.find("stance");
  const auto c_stance1 = header.find("stance1");
  const auto c_stance2 = header.find("stance2");
  const auto c_id = header.find("id");
  const auto c_id1 = header.find("arg1_id");
  const auto c_id2 = header.find("arg2_id");
  if (!c_stance && !(c_stance1 && c_stance2))
    throw DatasetError("missing required column 'stance' (or both 'stance1' and 'stance2')");

  PairwiseLoad out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::size_t width = rows.front().fields.size();
    if (row.fields.size() != width)
      throw RecordError(row.line, fmt::format("expected {} fields, found {}", width, row.fields.size()));

    ArgumentPair p;
    p.id = c_id ? trim(field(row, *c_id)) : fmt::format("pair-{:04d}", r);
    if (p.id.empty()) throw RecordError(row.line, "empty id");
    p.topic = require_text(row, c_topic, "topic");

    const Stance s1 = c_stance1 ? require_stance(row, *c_stance1) : require_stance(row, *c_stance);
    const Stance s2 = c_stance2 ? require_stance(row, *c_stance2) : require_stance(row, *c_stance);
    const std::string w = trim(field(row, c_winner));
    if (w == "1") {
      p.gold_winner = Winner::first;
    } else if (w == "2") {
      p.gold_winner = Winner::second;
    } else {
      throw RecordError(row.line, "winner must be \"1\" or \"2\", got '" + w + "'");
    }
    std::string id1 = c_id1 ? trim(field(row, *c_id1)) : p.id + ":1";
    std::string id2 = c_id2 ? trim(field(row, *c_id2)) : p.id + ":2";
    p.arg1 = make_argument(std::move(id1), p.topic, s1, require_text(row, c_a1, "argument1"));
    p.arg2 = make_argument(std::move(id2), p.topic, s2, require_text(row, c_a2, "argument2"));

    if (s1 != s2) {
      out.rejected.push_back({row.line, "stance mismatch"});
      continue;
    }
    if (p.arg1.id == p.arg2.id) {
      out.rejected.push_back({row.line, "duplicate argument id"});
      continue;
    }
    out.pairs.push_back(std::move(p));
  }
  return out;
}

PairwiseLoad load_pairwise_dataset(const std::string& path, DatasetFormat format) {
  return parse_pairwise_dataset(detail::slurp_file(path), format);
}

std::vector<Argument> parse_pointwise_dataset(std::string_view text, DatasetFormat format) {
  const auto rows = read_nonempty(text, format);
  const Header header(rows.front());
  const auto c_topic = header.require("topic");
  const auto c_stance = header.require("stance");
  const auto c_arg = header.require("argument");
  const auto c_quality = header.require("quality");
  const auto c_id = header.find("id");

  std::vector<Argument> out;
  out.reserve(rows.size() - 1);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::string qtext = trim(field(row, c_quality));
    double q = 0.0;
    const auto [ptr, ec] = std::from_chars(qtext.data(), qtext.data() + qtext.size(), q);
    if (ec != std::errc{} || ptr != qtext.data() + qtext.size() || !(q >= 0.0 && q <= 1.0))
      throw RecordError(row.line, "quality must be a decimal in [0,1], got '" + qtext + "'");
    std::string id = c_id ? trim(field(row, *c_id)) : fmt::format("arg-{:05d}", r);
    out.push_back(make_argument(std::move(id), require_text(row, c_topic, "topic"),
                                require_stance(row, c_stance), require_text(row, c_arg, "argument"), q));
  }
  return out;
}

std::vector<Argument> load_pointwise_dataset(const std::string& path, DatasetFormat format) {
  return parse_pointwise_dataset(detail::slurp_file(path), format);
}

bool eligible_pair(const Argument& a, const Argument& b, const PairingOptions& options) {
  if (a.id == b.id) return false;
  if (a.topic_id != b.topic_id || a.stance != b.stance) return false;
  if (!a.quality_score || !b.quality_score) return false;
  if (*a.quality_score == *b.quality_score) return false;
  return length_ratio(a.word_count, b.word_count) <= options.length_tolerance;
}

std::vector<ArgumentPair> build_pairs_from_pointwise(std::span<const Argument> args,
                                                     const PairingOptions& options) {
  if (!(options.length_tolerance > 0.0 && options.length_tolerance < 1.0))
    throw InputError("length_tolerance must lie in (0,1)");
  if (options.max_uses < 1) throw InputError("max_uses must be at least 1");
  for (const auto& a : args)
    if (!a.quality_score) throw InputError("argument " + a.id + " has no quality score");

  std::map<std::pair<std::string, int>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < args.size(); ++i)
    groups[{args[i].topic_id, static_cast<int>(args[i].stance)}].push_back(i);

  std::mt19937_64 rng(options.seed);
  std::vector<int> uses(args.size(), 0);
  std::vector<ArgumentPair> out;

  for (auto& [key, members] : groups) {
    portable_shuffle(members, rng);
    std::stable_sort(members.begin(), members.end(), [&](std::size_t x, std::size_t y) {
      return args[x].word_count < args[y].word_count;
    });

    std::set<std::pair<std::size_t, std::size_t>> used_pairs;
    for (std::size_t pi = 0; pi < members.size(); ++pi) {
      const std::size_t i = members[pi];
      for (std::size_t pj = pi + 1; pj < members.size() && uses[i] < options.max_uses; ++pj) {
        const std::size_t j = members[pj];
        if (length_ratio(args[i].word_count, args[j].word_count) > options.length_tolerance) break;
        if (uses[j] >= options.max_uses || !eligible_pair(args[i], args[j], options)) continue;
        if (!used_pairs.insert({std::min(i, j), std::max(i, j)}).second) continue;

        const bool i_better = *args[i].quality_score > *args[j].quality_score;
        const bool better_first = (rng() & 1U) != 0;
        const Argument& hi = i_better ? args[i] : args[j];
        const Argument& lo = i_better ? args[j] : args[i];

        ArgumentPair p;
        p.id = fmt::format("pw-{:05d}", out.size() + 1);
        p.topic = hi.topic_id;
        p.arg1 = better_first ? hi : lo;
        p.arg2 = better_first ? lo : hi;
        p.gold_winner = better_first ? Winner::first : Winner::second;
        p.quality_delta = std::abs(*hi.quality_score - *lo.quality_score);
        out.push_back(std::move(p));
        ++uses[i];
        ++uses[j];
      }
    }
  }
  return out;
}

namespace {

void check_edges(std::span<const double> edges) {
  if (edges.size() < 2) throw ConfigError("bucket edges need at least two values");
  for (std::size_t i = 1; i < edges.size(); ++i)
    if (!(edges[i] > edges[i - 1])) throw ConfigError("bucket edges must be strictly increasing");
}

std::string edge_label(double v) {
  if (v == 0.0) return "0";
  if (std::floor(v) == v) return fmt::format("{}.", static_cast<long long>(v));
  return fmt::format("{}", v);
}

}  // namespace

std::vector<std::string> bucket_labels(std::span<const double> edges) {
  check_edges(edges);
  std::vector<std::string> labels;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i)
    labels.push_back(edge_label(edges[i]) + "-" + edge_label(edges[i + 1]));
  return labels;
}

std::optional<std::size_t> bucket_index(double delta, std::span<const double> edges) {
  check_edges(edges);
  const std::size_t last = edges.size() - 2;
  for (std::size_t i = 0; i <= last; ++i) {
    const bool upper_ok = i == last ? delta <= edges[i + 1] : delta < edges[i + 1];
    if (delta >= edges[i] && upper_ok) return i;
  }
  return std::nullopt;
}

std::vector<QualityBucket> bucket_by_quality_delta(std::span<const ArgumentPair> pairs,
                                                   std::span<const double> edges) {
  const auto labels = bucket_labels(edges);
  std::vector<QualityBucket> buckets;
  for (std::size_t i = 0; i < labels.size(); ++i) buckets.push_back({labels[i], edges[i], edges[i + 1], {}});
  for (const auto& p : pairs) {
    if (!p.quality_delta) throw InputError("pair " + p.id + " has no quality_delta");
    auto idx = bucket_index(*p.quality_delta, edges);
    if (!idx) throw InputError(fmt::format("pair {} quality_delta {} outside bucket range", p.id, *p.quality_delta));
    buckets[*idx].pairs.push_back(p);
  }
  return buckets;
}

}  // namespace argjudge
