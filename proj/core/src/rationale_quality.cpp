#include "argjudge/rationale_quality.hpp"

#include <algorithm>
#include <regex>
#include <unordered_set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace argjudge {

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::base: return "base";
    case Provenance::persuasion_prompted: return "persuasion_prompted";
    case Provenance::refined: return "refined";
  }
  return "base";
}

std::optional<Provenance> provenance_from_string(std::string_view text) {
  if (text == "base") return Provenance::base;
  if (text == "persuasion_prompted") return Provenance::persuasion_prompted;
  if (text == "refined") return Provenance::refined;
  return std::nullopt;
}

bool Rationale::has_flag(std::string_view flag) const {
  return std::any_of(flags.begin(), flags.end(), [&](const std::string& f) {
    return f == flag || (f.size() > flag.size() && f.compare(0, flag.size(), flag) == 0 && f[flag.size()] == ':');
  });
}

std::string rationale_id(const std::string& pair_id, const std::string& participant_id) {
  return pair_id + "/" + participant_id;
}

Rationale make_rationale(std::string id, std::string pair_id, std::string model_id, std::string text,
                         Provenance provenance, std::optional<Winner> supports) {
  Rationale r;
  r.id = std::move(id);
  r.pair_id = std::move(pair_id);
  r.model_id = std::move(model_id);
  r.word_length = static_cast<int>(word_count(text));
  r.text = std::move(text);
  r.provenance = provenance;
  r.supports = supports;
  return r;
}

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  if (a.empty() || b.empty()) return 0;
  std::vector<std::size_t> prev(b.size() + 1, 0);
  std::vector<std::size_t> cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double repetition_coverage(std::string_view rationale_text, std::string_view argument_text) {
  const auto r = normalized_tokens(rationale_text);
  if (r.empty()) return 0.0;
  const auto a = normalized_tokens(argument_text);
  return static_cast<double>(lcs_length(r, a)) / static_cast<double>(r.size());
}

bool is_bare_verdict(std::string_view rationale_text) {
  static const std::regex verdict(
      R"(^(?:i (?:think|believe|feel) (?:that )?)?(?:the )?(?:argument|arg) ?[12] is (?:more|better|stronger|superior|the better one|the stronger one|the better argument|the stronger argument)(?: \w+)?(?: than (?:the )?(?:argument|arg) ?[12])?$)");
  static const std::regex choice(R"(^(?:i )?(?:choose|recommend|pick|select|prefer) (?:the )?(?:argument|arg) ?[12]$)");
  static const std::regex label(R"(^(?:the )?(?:argument|arg) ?[12]$)");
  std::string joined;
  for (const auto& t : normalized_tokens(rationale_text)) {
    if (!joined.empty()) joined += ' ';
    joined += t;
  }
  return std::regex_match(joined, verdict) || std::regex_match(joined, choice) || std::regex_match(joined, label);
}

BasicForm heuristic_basic_form(const Rationale& r, std::string_view chosen_argument_text,
                               const BasicFormOptions& options) {
  BasicForm bf;
  const auto tokens = normalized_tokens(r.text);
  if (tokens.size() < options.min_tokens || is_bare_verdict(r.text)) bf.valid = false;
  bf.repetitive = !tokens.empty() && repetition_coverage(r.text, chosen_argument_text) >= options.repetition_threshold;
  return bf;
}

namespace {

const std::unordered_set<std::string>& stopwords() {
  static const std::unordered_set<std::string> words{
      "about", "above", "after", "again", "against", "also", "because", "been", "before", "being",
      "between", "both", "could", "does", "doing", "down", "during", "each", "from", "further",
      "have", "having", "here", "into", "itself", "just", "more", "most", "much", "only", "other",
      "over", "same", "should", "some", "such", "than", "that", "their", "them", "then", "there",
      "these", "they", "this", "those", "through", "under", "until", "very", "what", "when",
      "where", "which", "while", "whom", "will", "with", "would", "your", "argument", "arguments",
      "rationale", "first", "second", "point", "case", "makes", "make", "since", "therefore",
      "however", "whereas", "although", "less", "many", "well", "clear", "clearly", "stronger",
      "weaker", "convincing", "persuasive", "compelling", "reason", "reasons", "recommend"};
  return words;
}

std::string stem(const std::string& token) { return token.substr(0, std::min<std::size_t>(token.size(), 5)); }

std::unordered_set<std::string> content_stems(std::string_view text) {
  std::unordered_set<std::string> out;
  for (const auto& t : normalized_tokens(text))
    if (t.size() >= 4 && !stopwords().count(t)) out.insert(stem(t));
  return out;
}

bool contains_any(const std::string& haystack, std::initializer_list<std::string_view> needles) {
  return std::any_of(needles.begin(), needles.end(),
                     [&](std::string_view n) { return haystack.find(n) != std::string::npos; });
}

}  // namespace

bool heuristic_contrast(std::string_view rationale_text, const ArgumentPair& pair, Winner chosen) {
  const Winner loser = other(chosen);
  std::string joined;
  for (const auto& t : normalized_tokens(rationale_text)) joined += " " + t;
  joined += " ";

  const std::string n = std::to_string(slot_number(loser));
  const std::string ordinal = loser == Winner::first ? "first" : "second";
  if (contains_any(joined, {" argument " + n + " ", " arg " + n + " ", " arg" + n + " ",
                            " the " + ordinal + " argument ", " the " + ordinal + " one ",
                            " the other argument ", " the alternative ", " the opposing argument "}))
    return true;

  const bool cue = contains_any(joined, {" while ", " however ", " whereas ", " although ", " fails ",
                                         " does not ", " doesn't ", " rather than ", " not as ",
                                         " weaker ", " overlooks ", " ignores ", " but "});
  if (!cue) return false;
  const auto loser_stems = content_stems(pair.argument(loser).text);
  const auto chosen_stems = content_stems(pair.argument(chosen).text);
  std::size_t shared = 0;
  for (const auto& s : content_stems(rationale_text))
    if (loser_stems.count(s) && !chosen_stems.count(s)) ++shared;
  return shared >= 2;
}

bool heuristic_novelty(std::string_view rationale_text, const ArgumentPair& pair,
                       const ContentHeuristicOptions& options) {
  const auto r = content_stems(rationale_text);
  if (r.empty()) return false;
  const auto a1 = content_stems(pair.arg1.text);
  const auto a2 = content_stems(pair.arg2.text);
  const auto topic = content_stems(pair.topic);
  std::size_t fresh = 0;
  for (const auto& s : r)
    if (!a1.count(s) && !a2.count(s) && !topic.count(s)) ++fresh;
  return static_cast<double>(fresh) / static_cast<double>(r.size()) >= options.novelty_threshold;
}

// ---------------------------------------------------------------------------

std::string_view to_string(Dimension d) {
  switch (d) {
    case Dimension::validity: return "validity";
    case Dimension::repetition: return "repetition";
    case Dimension::contrast: return "contrast";
    case Dimension::novelty: return "novelty";
  }
  return "validity";
}

std::optional<Dimension> dimension_from_string(std::string_view text) {
  for (auto d : {Dimension::validity, Dimension::repetition, Dimension::contrast, Dimension::novelty})
    if (to_string(d) == text) return d;
  return std::nullopt;
}

bool resolve_majority(const VoteSet& votes) {
  const std::size_t n = votes.votes.size();
  if (n < 3) throw ResolutionError(fmt::format("item {} has {} votes; at least 3 needed", votes.item_id, n));
  if (n % 2 == 0) throw ResolutionError(fmt::format("item {} has an even vote count ({})", votes.item_id, n));
  const auto yes = std::count_if(votes.votes.begin(), votes.votes.end(), [](const BinaryVote& v) { return v.answer; });
  return static_cast<std::size_t>(yes) * 2 > n;
}

bool VoteBook::add(const std::string& item_id, Dimension dimension, const std::string& rater_id, bool answer) {
  std::lock_guard lock(mu_);
  auto& set = sets_[{item_id, dimension}];
  set.item_id = item_id;
  set.dimension = dimension;
  for (const auto& v : set.votes)
    if (v.rater_id == rater_id) return false;
  set.votes.push_back({rater_id, answer});
  return true;
}

std::optional<VoteSet> VoteBook::find(const std::string& item_id, Dimension dimension) const {
  std::lock_guard lock(mu_);
  auto it = sets_.find({item_id, dimension});
  if (it == sets_.end()) return std::nullopt;
  return it->second;
}

std::vector<VoteSet> VoteBook::all() const {
  std::lock_guard lock(mu_);
  std::vector<VoteSet> out;
  for (const auto& [k, v] : sets_) out.push_back(v);
  return out;
}

std::size_t VoteBook::size() const {
  std::lock_guard lock(mu_);
  std::size_t n = 0;
  for (const auto& [k, v] : sets_) n += v.votes.size();
  return n;
}

std::size_t VoteBook::import_jsonl(std::string_view text) {
  std::size_t accepted = 0;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    auto rec = nlohmann::json::parse(line, nullptr, false);
    if (rec.is_discarded() || !rec.is_object()) throw RecordError(line_no, "vote line is not a JSON object");
    const auto dim = dimension_from_string(rec.value("dimension", ""));
    if (!dim) continue;
    const auto& answer = rec["answer"];
    bool yes = false;
    if (answer.is_boolean()) {
      yes = answer.get<bool>();
    } else if (answer.is_string()) {
      const std::string a = to_lower(trim(answer.get<std::string>()));
      if (a != "yes" && a != "no") throw RecordError(line_no, "answer must be yes or no");
      yes = a == "yes";
    } else {
      throw RecordError(line_no, "answer must be yes or no");
    }
    if (add(rec.value("item_id", ""), *dim, rec.value("rater_id", ""), yes)) ++accepted;
  }
  return accepted;
}

std::optional<bool> resolved_label(const VoteBook& book, const std::string& item_id, Dimension dimension) {
  auto set = book.find(item_id, dimension);
  if (!set || set->votes.size() < 3 || set->votes.size() % 2 == 0) return std::nullopt;
  return resolve_majority(*set);
}

// ---------------------------------------------------------------------------

std::optional<BasicFormSource> basic_form_source_from_string(std::string_view text) {
  if (text == "heuristic") return BasicFormSource::heuristic;
  if (text == "human") return BasicFormSource::human;
  return std::nullopt;
}

std::optional<ContentSource> content_source_from_string(std::string_view text) {
  if (text == "human") return ContentSource::human;
  if (text == "llm_judge") return ContentSource::llm_judge;
  if (text == "heuristic") return ContentSource::heuristic;
  return std::nullopt;
}

namespace {

std::string chosen_text(const Rationale& r, const ArgumentPair& pair) {
  if (r.supports) return pair.argument(*r.supports).text;
  if (pair.gold_winner) return pair.argument(*pair.gold_winner).text;
  return pair.arg1.text + " " + pair.arg2.text;
}

Winner chosen_slot(const Rationale& r, const ArgumentPair& pair) {
  if (r.supports) return *r.supports;
  return pair.gold_winner.value_or(Winner::first);
}

}  // namespace

std::vector<Rationale> apply_labels(std::span<const Rationale> rationales,
                                    const std::map<std::string, ArgumentPair>& pairs,
                                    const LabelingOptions& options, const VoteBook* votes,
                                    const ContentLabeler& llm_labeler) {
  if (options.content_source == ContentSource::llm_judge && !llm_labeler)
    throw ConfigError("content_source llm_judge needs a judge labeler");

  std::vector<Rationale> out;
  out.reserve(rationales.size());
  std::vector<std::string> missing;

  for (const auto& in : rationales) {
    Rationale r = in;
    auto pit = pairs.find(r.pair_id);
    if (pit == pairs.end()) {
      missing.push_back(r.id + " (unknown pair " + r.pair_id + ")");
      continue;
    }
    const ArgumentPair& pair = pit->second;

    const bool failed_output = std::any_of(r.flags.begin(), r.flags.end(), [](const std::string& f) {
      return f.rfind("parse_failure:", 0) == 0;
    });
    if (failed_output || trim(r.text).empty()) {
      r.basic_form = BasicForm{false, false};
    } else {
      std::optional<bool> human_valid;
      std::optional<bool> human_repetitive;
      if (votes) {
        human_valid = resolved_label(*votes, r.id, Dimension::validity);
        human_repetitive = resolved_label(*votes, r.id, Dimension::repetition);
      }
      if (options.basic_form_source == BasicFormSource::human && !(human_valid && human_repetitive)) {
        missing.push_back(r.id + " (basic form votes)");
        continue;
      }
      BasicForm bf = heuristic_basic_form(r, chosen_text(r, pair), options.basic_form);
      if (human_valid) bf.valid = *human_valid;
      if (human_repetitive) bf.repetitive = *human_repetitive;
      r.basic_form = bf;
    }

    if (!r.basic_form->passes()) {
      r.content.reset();
      out.push_back(std::move(r));
      continue;
    }

    std::optional<bool> human_contrast;
    std::optional<bool> human_novelty;
    if (votes) {
      human_contrast = resolved_label(*votes, r.id, Dimension::contrast);
      human_novelty = resolved_label(*votes, r.id, Dimension::novelty);
    }
    ContentLabels labels;
    switch (options.content_source) {
      case ContentSource::human:
        if (!(human_contrast && human_novelty)) {
          missing.push_back(r.id + " (content votes)");
          continue;
        }
        break;
      case ContentSource::llm_judge:
        if (!(human_contrast && human_novelty)) labels = llm_labeler(r, pair);
        break;
      case ContentSource::heuristic:
        labels.contrast = heuristic_contrast(r.text, pair, chosen_slot(r, pair));
        labels.novelty = heuristic_novelty(r.text, pair, options.content);
        break;
    }
    if (human_contrast) labels.contrast = *human_contrast;
    if (human_novelty) labels.novelty = *human_novelty;
    r.content = labels;
    out.push_back(std::move(r));
  }

  if (!missing.empty())
    throw CoverageError(fmt::format("{} rationale(s) cannot be labeled by the configured source", missing.size()),
                        std::move(missing));
  return out;
}

}  // namespace argjudge
