#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "argjudge/corpus.hpp"
#include "argjudge/model_gateway.hpp"
#include "argjudge/prompt_kit.hpp"
#include "argjudge/rationale_quality.hpp"

namespace argjudge {

enum class Outcome { a_wins, b_wins, tie };
/// `default_rule` marks comparisons settled without a judge because at least one
/// side failed basic form (admitted beats non-admitted; two failures tie).
enum class OutcomeSource { judge, human, default_rule };

std::string_view to_string(Outcome o);
std::string_view to_string(OutcomeSource s);
std::optional<Outcome> outcome_from_string(std::string_view text);
std::optional<OutcomeSource> outcome_source_from_string(std::string_view text);

/// One unordered meeting of two participants' rationales on an argument pair.
struct Comparison {
  std::string pair_id;
  std::string participant_a;
  std::string participant_b;
  std::string rationale_a;
  std::string rationale_b;

  std::string id() const { return pair_id + "/" + participant_a + "|" + participant_b; }
};

/// Human answer about rationale A relative to rationale B.
enum class PersuasionAnswer { more, less, equal };

std::string_view to_string(PersuasionAnswer a);
std::optional<PersuasionAnswer> persuasion_answer_from_string(std::string_view text);

struct PersuasionVote {
  std::string rater_id;
  PersuasionAnswer answer = PersuasionAnswer::equal;
  std::string explanation;
};

struct ComparisonOutcome {
  Comparison comparison;
  Outcome outcome = Outcome::tie;
  OutcomeSource source = OutcomeSource::judge;
  /// False when the judge could not be reached; such pairs are left out of APR.
  bool resolved = true;
  /// Judge source: raw verdicts for (A in slot 1, B in slot 1), in that order.
  std::vector<std::string> verdicts;
  std::vector<PersuasionVote> votes;
  /// "unparsable_verdict", "position_conflict", "transport", ...
  std::vector<std::string> flags;
};

/// Every unordered participant pair for each argument pair, participants in the
/// given order (A precedes B).
std::vector<Comparison> plan_comparisons(std::span<const ArgumentPair> pairs,
                                         std::span<const std::string> participants);

/// Asks the judge twice with the rationale slots swapped. Consistent votes for the
/// same rationale decide; an "equal" verdict, conflicting verdicts or an unparsable
/// verdict give a tie. A transport failure leaves the comparison unresolved.
/// Throws InputError unless both rationales passed basic form and support the same
/// argument of `pair`.
ComparisonOutcome judge_pair_symmetric(Gateway& gateway, const PromptKit& kit, const ModelSpec& judge,
                                       const ArgumentPair& pair, const Rationale& a, const Rationale& b);

struct TournamentOptions {
  int workers = 4;
  /// Outcomes already available (resume); matched by Comparison::id().
  std::vector<ComparisonOutcome> completed;
  std::function<void(const ComparisonOutcome&)> on_outcome;
};

/// Runs every planned comparison for `pairs`. `rationales` must hold a labeled
/// rationale for every (pair, participant); missing ones raise CoverageError.
std::vector<ComparisonOutcome> run_tournament(Gateway& gateway, const PromptKit& kit, const ModelSpec& judge,
                                              std::span<const ArgumentPair> pairs,
                                              std::span<const std::string> participants,
                                              std::span<const Rationale> rationales, TournamentOptions options = {});

/// Outcome for two rationales when at least one is not admitted; nullopt when both are.
std::optional<ComparisonOutcome> default_rule_outcome(const Comparison& c, const Rationale& a, const Rationale& b);

struct Scoreboard {
  std::string pair_id;
  std::vector<std::string> participants;
  /// Twice the score, so ties stay integral.
  std::map<std::string, long long> half_points;
  std::map<std::string, double> s;
  std::map<std::string, double> ranks;
};

/// Win = 1, tie = 0.5 each. Throws CoverageError listing missing, duplicate,
/// foreign or unresolved comparisons.
Scoreboard score_round_robin(std::span<const ComparisonOutcome> outcomes, std::span<const std::string> participants);

/// Ascending fractional ranks: 1 = lowest score, M = highest, ties share the mean
/// of the positions they occupy.
std::map<std::string, double> ranks_from_scores(const std::map<std::string, double>& s);

struct ScoredTournament {
  std::vector<Scoreboard> scoreboards;
  /// Pairs with an unresolved comparison.
  std::vector<std::string> excluded_pairs;
};

/// Groups outcomes by pair and scores each fully resolved pair, in first-seen order.
ScoredTournament score_tournament(std::span<const ComparisonOutcome> outcomes,
                                  std::span<const std::string> participants);

/// Majority over more/less/equal; no strict majority (e.g. a three-way split) is a
/// tie. Fewer than three votes leaves the outcome unresolved.
ComparisonOutcome human_outcome_from_votes(const Comparison& c, std::span<const PersuasionVote> votes);

struct HumanSample {
  std::vector<Comparison> sampled;
  /// `sampled` minus comparisons involving a rationale that failed basic form.
  std::vector<Comparison> eligible;
};

/// Draws round(fraction x |all|) comparisons under `seed`, then drops the ones
/// involving non-admitted rationales. `rationales` is keyed by rationale id.
HumanSample sample_for_human(std::span<const Comparison> all, const std::map<std::string, Rationale>& rationales,
                             double fraction, std::uint64_t seed);

}  // namespace argjudge
