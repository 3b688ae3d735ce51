#pragma once

#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "argjudge/corpus.hpp"
#include "argjudge/model_gateway.hpp"
#include "argjudge/prompt_kit.hpp"
#include "argjudge/rationale_quality.hpp"

namespace argjudge {

struct ModelDecision {
  /// Participant id; equals the model id except for improvement variants.
  std::string model_id;
  std::string pair_id;
  ParseResult<Winner> decision;
  Rationale rationale;
  /// Raw completion text (empty on transport failure).
  std::string raw_output;
  int attempts = 0;
  bool from_cache = false;

  bool parsed() const { return std::holds_alternative<Winner>(decision); }
  std::optional<Winner> winner() const;
};

/// Complete model x pair grid of decisions. Cells are stored model-major.
struct DecisionMatrix {
  std::vector<std::string> models;
  std::vector<ArgumentPair> pairs;
  std::vector<ModelDecision> cells;

  const ModelDecision& at(std::size_t model_index, std::size_t pair_index) const;
  const ModelDecision* find(const std::string& model_id, const std::string& pair_id) const;
  std::vector<Rationale> rationales() const;
};

/// Prompts one model on one pair and parses its answer. Transport failures and
/// refusals become ParseFailure cells; the rationale of a failed cell is empty and
/// flagged "parse_failure:<kind>". Under the persuasion prompt an unparsable answer
/// is also flagged "non_compliant".
ModelDecision decide(Gateway& gateway, const PromptKit& kit, const ModelSpec& model, const ArgumentPair& pair,
                     PromptKind prompt = PromptKind::ranking, const std::string& participant_id = {});

struct RunOptions {
  PromptKind prompt = PromptKind::ranking;
  /// Appended to each model id to form the participant id ("+prompted").
  std::string participant_suffix;
  int workers = 4;
  /// Cells already computed (e.g. loaded from a store); they are not re-requested.
  std::vector<ModelDecision> completed;
  /// Called once per newly computed cell, serialized.
  std::function<void(const ModelDecision&)> on_cell;
};

/// Fills the full matrix, running independent cells concurrently. Per-cell
/// failures never abort the run.
DecisionMatrix run_matrix(Gateway& gateway, const PromptKit& kit, std::span<const ModelSpec> models,
                          std::span<const ArgumentPair> pairs, RunOptions options = {});

/// Pairs on which every model's decision matches the gold winner. A ParseFailure
/// counts as disagreement. Throws InputError if a pair has no gold winner.
std::vector<ArgumentPair> filter_unanimous(const DecisionMatrix& matrix, const std::map<std::string, Winner>& gold);

/// Gold winners of the matrix pairs, read from ArgumentPair::gold_winner.
std::map<std::string, Winner> gold_map(std::span<const ArgumentPair> pairs);

/// Macro-averaged F1 over the classes present in gold or predictions. A
/// ParseFailure is a wrong answer: it lowers recall of the gold class and is never
/// a true positive.
double macro_f1(std::span<const std::optional<Winner>> predicted, std::span<const Winner> gold);

/// Content labels from a judge model answering the content prompt. An unusable
/// answer labels both dimensions false.
ContentLabeler llm_content_labeler(Gateway& gateway, const PromptKit& kit, const ModelSpec& judge);

/// Per-model macro F1 against `gold`.
std::map<std::string, double> ranking_f1(const DecisionMatrix& matrix, const std::map<std::string, Winner>& gold);

}  // namespace argjudge
