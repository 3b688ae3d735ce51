#include "argjudge/improve.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include <spdlog/spdlog.h>

namespace argjudge {

std::string prompted_id(const std::string& model_id) { return model_id + "+prompted"; }
std::string refined_id(const std::string& model_id) { return model_id + "+refined"; }

ModelDecision persuasion_prompted(Gateway& gateway, const PromptKit& kit, const ModelSpec& model,
                                  const ArgumentPair& pair) {
  return decide(gateway, kit, model, pair, PromptKind::persuasion, prompted_id(model.model_id));
}

Rationale evaluate_and_refine(Gateway& gateway, const PromptKit& kit, const ModelSpec& model, const ArgumentPair& pair,
                              const Rationale& base) {
  const std::string participant = refined_id(model.model_id);
  Rationale out = make_rationale(rationale_id(pair.id, participant), pair.id, participant, base.text,
                                 Provenance::refined, base.supports);
  for (const auto& f : base.flags)
    if (f.rfind("parse_failure:", 0) == 0 || f == "refusal") out.flags.push_back(f);

  if (!base.supports || trim(base.text).empty()) {
    out.flags.push_back("refine_failed:no_base");
    return out;
  }

  ParseResult<ParsedRefinement> parsed = ParseFailure{};
  try {
    const auto rec = gateway.complete(model, render_refine_prompt(kit, pair, *base.supports, base.text));
    parsed = parse_refine_output(rec.response_text);
  } catch (const TransportError& e) {
    spdlog::warn("refine {} on {}: {}", model.model_id, pair.id, e.what());
    parsed = ParseFailure{ParseFailureKind::transport, e.what(), ""};
  } catch (const RefusalError& e) {
    parsed = ParseFailure{ParseFailureKind::refusal, e.what(), ""};
  }

  if (const auto* failure = std::get_if<ParseFailure>(&parsed)) {
    out.flags.push_back("refine_failed:" + std::string(to_string(failure->kind)));
    return out;
  }
  const auto& refinement = std::get<ParsedRefinement>(parsed);
  if (refinement.convincing || !refinement.improved) {
    out.flags.push_back("kept_as_is");
    return out;
  }
  out.text = *refinement.improved;
  out.word_length = static_cast<int>(word_count(out.text));
  out.changed = out.text != base.text;
  if (!out.changed) out.flags.push_back("kept_as_is");
  return out;
}

std::vector<Rationale> refine_all(Gateway& gateway, const PromptKit& kit, const ModelSpec& model,
                                  std::span<const ArgumentPair> pairs, std::span<const Rationale> base, int workers) {
  std::map<std::string, const Rationale*> by_id;
  for (const auto& r : base) by_id[r.id] = &r;
  std::vector<std::string> missing;
  for (const auto& p : pairs)
    if (!by_id.count(rationale_id(p.id, model.model_id))) missing.push_back(rationale_id(p.id, model.model_id));
  if (!missing.empty()) throw CoverageError("no base rationale to refine", std::move(missing));

  std::vector<Rationale> out(pairs.size());
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::exception_ptr first_error;
  auto worker = [&] {
    for (std::size_t i = next++; i < pairs.size(); i = next++) {
      try {
        out[i] = evaluate_and_refine(gateway, kit, model, pairs[i], *by_id.at(rationale_id(pairs[i].id, model.model_id)));
      } catch (...) {
        std::lock_guard lock(mu);
        if (!first_error) first_error = std::current_exception();
        next = pairs.size();
      }
    }
  };
  const auto n = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, workers)), pairs.size());
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < n; ++i) pool.emplace_back(worker);
  }
  if (first_error) std::rethrow_exception(first_error);
  return out;
}

ExtendedTournament extended_tournament(Gateway& gateway, const PromptKit& kit, const ModelSpec& judge,
                                       std::span<const ArgumentPair> pairs,
                                       std::span<const std::string> participants,
                                       std::span<const Rationale> rationales, TournamentOptions options,
                                       std::span<const double> bucket_edges) {
  ExtendedTournament out;
  out.outcomes = run_tournament(gateway, kit, judge, pairs, participants, rationales, std::move(options));
  out.scored = score_tournament(out.outcomes, participants);
  out.report = build_apr_report(out.scored, pairs, bucket_edges);
  for (const auto& r : rationales)
    if (std::find(participants.begin(), participants.end(), r.model_id) != participants.end())
      out.report.provenance[r.model_id] = r.provenance;
  return out;
}

}  // namespace argjudge
