#pragma once

#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "argjudge/common.hpp"
#include "argjudge/corpus.hpp"

namespace argjudge {

enum class Provenance { base, persuasion_prompted, refined };

std::string_view to_string(Provenance p);
std::optional<Provenance> provenance_from_string(std::string_view text);

struct BasicForm {
  bool valid = true;
  bool repetitive = false;
  bool passes() const { return valid && !repetitive; }
  bool operator==(const BasicForm&) const = default;
};

struct ContentLabels {
  bool contrast = false;
  bool novelty = false;
  bool operator==(const ContentLabels&) const = default;
};

struct Rationale {
  std::string id;
  std::string pair_id;
  std::string model_id;
  std::string text;
  int word_length = 0;
  Provenance provenance = Provenance::base;
  /// The argument slot this rationale argues for.
  std::optional<Winner> supports;
  std::optional<BasicForm> basic_form;
  std::optional<ContentLabels> content;
  /// For refined rationales: whether refinement produced new text.
  bool changed = false;
  /// Free-form markers: "parse_failure:<kind>", "refusal", "refine_failed", ...
  std::vector<std::string> flags;

  bool admitted() const { return basic_form && basic_form->passes(); }
  bool has_flag(std::string_view flag) const;
};

/// Id given to the rationale a participant writes for a pair.
std::string rationale_id(const std::string& pair_id, const std::string& participant_id);

/// Builds a Rationale with word_length derived from `text`.
Rationale make_rationale(std::string id, std::string pair_id, std::string model_id, std::string text,
                         Provenance provenance, std::optional<Winner> supports);

struct BasicFormOptions {
  double repetition_threshold = 0.7;
  std::size_t min_tokens = 5;
};

/// Length of the longest common subsequence of two token lists.
std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b);

/// Share of the rationale's tokens covered by its longest common token subsequence
/// with `argument_text`; 0 for an empty rationale.
double repetition_coverage(std::string_view rationale_text, std::string_view argument_text);

/// True for bare verdicts such as "argument 1 is more convincing than argument 2".
bool is_bare_verdict(std::string_view rationale_text);

BasicForm heuristic_basic_form(const Rationale& r, std::string_view chosen_argument_text,
                               const BasicFormOptions& options = {});

struct ContentHeuristicOptions {
  /// Minimum share of content tokens absent from both arguments for novelty.
  double novelty_threshold = 0.35;
};

/// Contrast: the rationale engages the argument it did not choose (names it, or
/// uses a refutation cue next to material from it).
bool heuristic_contrast(std::string_view rationale_text, const ArgumentPair& pair, Winner chosen);
bool heuristic_novelty(std::string_view rationale_text, const ArgumentPair& pair,
                       const ContentHeuristicOptions& options = {});

// ---------------------------------------------------------------------------
// Human votes

enum class Dimension { validity, repetition, contrast, novelty };

std::string_view to_string(Dimension d);
std::optional<Dimension> dimension_from_string(std::string_view text);

struct BinaryVote {
  std::string rater_id;
  bool answer = false;
};

struct VoteSet {
  std::string item_id;
  Dimension dimension = Dimension::validity;
  std::vector<BinaryVote> votes;
};

/// Majority answer. Throws ResolutionError on fewer than three or an even number of votes.
bool resolve_majority(const VoteSet& votes);

/// Append-only collection of binary votes. A second vote by the same rater on the
/// same (item, dimension) is rejected and the first one kept.
class VoteBook {
 public:
  /// Returns false if the vote duplicates an existing (rater, item, dimension).
  bool add(const std::string& item_id, Dimension dimension, const std::string& rater_id, bool answer);
  std::optional<VoteSet> find(const std::string& item_id, Dimension dimension) const;
  std::vector<VoteSet> all() const;
  std::size_t size() const;

  /// Imports JSON-lines records {item_id, dimension, rater_id, answer}. Records with a
  /// dimension outside the four binary ones are skipped. Returns the number accepted.
  std::size_t import_jsonl(std::string_view text);

 private:
  mutable std::mutex mu_;
  std::map<std::pair<std::string, Dimension>, VoteSet> sets_;
};

/// Resolves the (item, dimension) label if enough votes exist; nullopt otherwise.
std::optional<bool> resolved_label(const VoteBook& book, const std::string& item_id, Dimension dimension);

// ---------------------------------------------------------------------------
// Labeling pipeline

enum class BasicFormSource { heuristic, human };
enum class ContentSource { human, llm_judge, heuristic };

std::optional<BasicFormSource> basic_form_source_from_string(std::string_view text);
std::optional<ContentSource> content_source_from_string(std::string_view text);

/// Produces content labels for one rationale (used for the llm_judge source).
using ContentLabeler = std::function<ContentLabels(const Rationale&, const ArgumentPair&)>;

struct LabelingOptions {
  BasicFormSource basic_form_source = BasicFormSource::heuristic;
  ContentSource content_source = ContentSource::heuristic;
  BasicFormOptions basic_form;
  ContentHeuristicOptions content;
};

/// Labels every rationale: basic form first, then content for those that pass.
/// Human votes override heuristics whenever both exist. Rationales failing basic form
/// carry no content labels. Throws CoverageError listing ids the chosen source cannot
/// label. `pairs` maps pair id to its ArgumentPair.
std::vector<Rationale> apply_labels(std::span<const Rationale> rationales,
                                    const std::map<std::string, ArgumentPair>& pairs,
                                    const LabelingOptions& options, const VoteBook* votes = nullptr,
                                    const ContentLabeler& llm_labeler = {});

}  // namespace argjudge
