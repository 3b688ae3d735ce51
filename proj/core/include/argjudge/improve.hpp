#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "argjudge/apr_report.hpp"
#include "argjudge/ranking_run.hpp"
#include "argjudge/tournament.hpp"

namespace argjudge {

std::string prompted_id(const std::string& model_id);  // "<model>+prompted"
std::string refined_id(const std::string& model_id);   // "<model>+refined"

/// Ranking under the persuasion prompt; the participant id is prompted_id(model).
/// An unparsable answer is kept as a failure cell flagged "non_compliant".
ModelDecision persuasion_prompted(Gateway& gateway, const PromptKit& kit, const ModelSpec& model,
                                  const ArgumentPair& pair);

/// One evaluate-then-refine pass over `base`. The result belongs to
/// refined_id(model) and carries no labels. When the model finds the rationale
/// convincing (or answers with the no-improvement sentinel) the text is kept,
/// `changed` is false and the flag "kept_as_is" is set. An unusable answer keeps
/// the text and adds "refine_failed:<kind>".
Rationale evaluate_and_refine(Gateway& gateway, const PromptKit& kit, const ModelSpec& model, const ArgumentPair& pair,
                              const Rationale& base);

/// evaluate_and_refine over every base rationale of `model` (looked up by id).
std::vector<Rationale> refine_all(Gateway& gateway, const PromptKit& kit, const ModelSpec& model,
                                  std::span<const ArgumentPair> pairs, std::span<const Rationale> base,
                                  int workers = 4);

struct ExtendedTournament {
  std::vector<ComparisonOutcome> outcomes;
  ScoredTournament scored;
  APRReport report;
};

/// Tournament over base participants plus improvement variants. Provenance per
/// participant is read from the rationales.
ExtendedTournament extended_tournament(Gateway& gateway, const PromptKit& kit, const ModelSpec& judge,
                                       std::span<const ArgumentPair> pairs,
                                       std::span<const std::string> participants,
                                       std::span<const Rationale> rationales, TournamentOptions options = {},
                                       std::span<const double> bucket_edges = {});

}  // namespace argjudge
