#include "argjudge/ranking_run.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <set>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace argjudge {

std::optional<Winner> ModelDecision::winner() const {
  if (const auto* w = std::get_if<Winner>(&decision)) return *w;
  return std::nullopt;
}

const ModelDecision& DecisionMatrix::at(std::size_t model_index, std::size_t pair_index) const {
  return cells.at(model_index * pairs.size() + pair_index);
}

const ModelDecision* DecisionMatrix::find(const std::string& model_id, const std::string& pair_id) const {
  for (const auto& c : cells)
    if (c.model_id == model_id && c.pair_id == pair_id) return &c;
  return nullptr;
}

std::vector<Rationale> DecisionMatrix::rationales() const {
  std::vector<Rationale> out;
  out.reserve(cells.size());
  for (const auto& c : cells) out.push_back(c.rationale);
  return out;
}

namespace {

Provenance provenance_for(PromptKind prompt) {
  return prompt == PromptKind::persuasion ? Provenance::persuasion_prompted : Provenance::base;
}

ModelDecision failed_cell(ModelDecision cell, ParseFailure failure) {
  cell.rationale.flags.push_back("parse_failure:" + std::string(to_string(failure.kind)));
  cell.rationale.basic_form = BasicForm{false, false};
  cell.decision = std::move(failure);
  return cell;
}

}  // namespace

ModelDecision decide(Gateway& gateway, const PromptKit& kit, const ModelSpec& model, const ArgumentPair& pair,
                     PromptKind prompt, const std::string& participant_id) {
  if (prompt != PromptKind::ranking && prompt != PromptKind::persuasion)
    throw ConfigError("decide: prompt kind must be ranking or persuasion");
  const std::string participant = participant_id.empty() ? model.model_id : participant_id;

  ModelDecision cell;
  cell.model_id = participant;
  cell.pair_id = pair.id;
  cell.rationale = make_rationale(rationale_id(pair.id, participant), pair.id, participant, "",
                                  provenance_for(prompt), std::nullopt);

  const PromptBundle bundle =
      prompt == PromptKind::persuasion ? render_persuasion_prompt(kit, pair) : render_ranking_prompt(kit, pair);
  CompletionRecord rec;
  try {
    rec = gateway.complete(model, bundle);
  } catch (const TransportError& e) {
    spdlog::warn("{} on {}: {}", participant, pair.id, e.what());
    return failed_cell(std::move(cell), ParseFailure{ParseFailureKind::transport, e.what(), ""});
  } catch (const RefusalError& e) {
    cell.rationale.flags.push_back("refusal");
    return failed_cell(std::move(cell), ParseFailure{ParseFailureKind::refusal, e.what(), ""});
  }
  cell.raw_output = rec.response_text;
  cell.attempts = rec.attempt_count;
  cell.from_cache = rec.from_cache;

  auto parsed = parse_ranking_output(rec.response_text);
  if (auto* failure = std::get_if<ParseFailure>(&parsed)) {
    if (prompt == PromptKind::persuasion) cell.rationale.flags.push_back("non_compliant");
    return failed_cell(std::move(cell), std::move(*failure));
  }
  auto& ok = std::get<ParsedRanking>(parsed);
  cell.decision = ok.decision;
  cell.rationale = make_rationale(cell.rationale.id, pair.id, participant, ok.reasoning, provenance_for(prompt),
                                  ok.decision);
  return cell;
}

DecisionMatrix run_matrix(Gateway& gateway, const PromptKit& kit, std::span<const ModelSpec> models,
                          std::span<const ArgumentPair> pairs, RunOptions options) {
  if (models.empty()) throw InputError("run_matrix needs at least one model");
  if (pairs.empty()) throw InputError("run_matrix needs at least one pair");

  DecisionMatrix matrix;
  for (const auto& m : models) matrix.models.push_back(m.model_id + options.participant_suffix);
  {
    std::set<std::string> seen(matrix.models.begin(), matrix.models.end());
    if (seen.size() != matrix.models.size()) throw InputError("run_matrix: duplicate model ids");
  }
  matrix.pairs.assign(pairs.begin(), pairs.end());
  matrix.cells.resize(models.size() * pairs.size());

  std::map<std::pair<std::string, std::string>, const ModelDecision*> done;
  for (const auto& c : options.completed) done[{c.model_id, c.pair_id}] = &c;

  std::vector<std::size_t> todo;
  for (std::size_t m = 0; m < models.size(); ++m) {
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      auto it = done.find({matrix.models[m], pairs[p].id});
      if (it != done.end()) {
        matrix.cells[m * pairs.size() + p] = *it->second;
      } else {
        todo.push_back(m * pairs.size() + p);
      }
    }
  }

  std::atomic<std::size_t> next{0};
  std::mutex callback_mu;
  std::exception_ptr first_error;
  auto worker = [&] {
    for (std::size_t i = next++; i < todo.size(); i = next++) {
      const std::size_t idx = todo[i];
      const std::size_t m = idx / pairs.size();
      const std::size_t p = idx % pairs.size();
      try {
        matrix.cells[idx] = decide(gateway, kit, models[m], pairs[p], options.prompt, matrix.models[m]);
        if (options.on_cell) {
          std::lock_guard lock(callback_mu);
          options.on_cell(matrix.cells[idx]);
        }
      } catch (...) {
        std::lock_guard lock(callback_mu);
        if (!first_error) first_error = std::current_exception();
        next = todo.size();
      }
    }
  };

  const auto n_workers = static_cast<std::size_t>(std::max(1, options.workers));
  if (n_workers == 1 || todo.size() <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < std::min(n_workers, todo.size()); ++i) pool.emplace_back(worker);
  }
  if (first_error) std::rethrow_exception(first_error);
  return matrix;
}

std::map<std::string, Winner> gold_map(std::span<const ArgumentPair> pairs) {
  std::map<std::string, Winner> out;
  for (const auto& p : pairs)
    if (p.gold_winner) out[p.id] = *p.gold_winner;
  return out;
}

std::vector<ArgumentPair> filter_unanimous(const DecisionMatrix& matrix, const std::map<std::string, Winner>& gold) {
  std::vector<ArgumentPair> kept;
  for (std::size_t p = 0; p < matrix.pairs.size(); ++p) {
    const auto& pair = matrix.pairs[p];
    auto g = gold.find(pair.id);
    if (g == gold.end()) throw InputError("no gold winner for pair " + pair.id);
    bool unanimous = true;
    for (std::size_t m = 0; m < matrix.models.size() && unanimous; ++m)
      unanimous = matrix.at(m, p).winner() == g->second;
    if (unanimous) kept.push_back(pair);
  }
  return kept;
}

double macro_f1(std::span<const std::optional<Winner>> predicted, std::span<const Winner> gold) {
  if (predicted.size() != gold.size()) throw InputError("macro_f1: length mismatch");
  std::set<Winner> classes(gold.begin(), gold.end());
  for (const auto& p : predicted)
    if (p) classes.insert(*p);
  if (classes.empty()) return 0.0;

  double sum = 0.0;
  for (Winner c : classes) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
      const bool pred_c = predicted[i] == c;
      const bool gold_c = gold[i] == c;
      if (pred_c && gold_c) ++tp;
      if (pred_c && !gold_c) ++fp;
      if (!pred_c && gold_c) ++fn;
    }
    const std::size_t denom = 2 * tp + fp + fn;
    sum += denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
  }
  return sum / static_cast<double>(classes.size());
}

ContentLabeler llm_content_labeler(Gateway& gateway, const PromptKit& kit, const ModelSpec& judge) {
  return [&gateway, &kit, judge](const Rationale& r, const ArgumentPair& pair) {
    const Winner chosen = r.supports.value_or(Winner::first);
    try {
      auto rec = gateway.complete(judge, render_content_prompt(kit, pair, chosen, r.text));
      const auto parsed = parse_content_output(rec.response_text);
      if (const auto* ok = std::get_if<ParsedContentLabel>(&parsed)) return ContentLabels{ok->contrast, ok->novelty};
    } catch (const TransportError& e) {
      spdlog::warn("content labels for {}: {}", r.id, e.what());
    } catch (const RefusalError& e) {
      spdlog::warn("content labels for {}: {}", r.id, e.what());
    }
    return ContentLabels{};
  };
}

std::map<std::string, double> ranking_f1(const DecisionMatrix& matrix, const std::map<std::string, Winner>& gold) {
  std::vector<Winner> g;
  g.reserve(matrix.pairs.size());
  for (const auto& pair : matrix.pairs) {
    auto it = gold.find(pair.id);
    if (it == gold.end()) throw InputError("no gold winner for pair " + pair.id);
    g.push_back(it->second);
  }
  std::map<std::string, double> out;
  for (std::size_t m = 0; m < matrix.models.size(); ++m) {
    std::vector<std::optional<Winner>> pred;
    pred.reserve(matrix.pairs.size());
    for (std::size_t p = 0; p < matrix.pairs.size(); ++p) pred.push_back(matrix.at(m, p).winner());
    out[matrix.models[m]] = macro_f1(pred, g);
  }
  return out;
}

}  // namespace argjudge
