#include "argjudge/tournament.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <random>
#include <set>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace argjudge {

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::a_wins: return "a_wins";
    case Outcome::b_wins: return "b_wins";
    case Outcome::tie: return "tie";
  }
  return "tie";
}

std::string_view to_string(OutcomeSource s) {
  switch (s) {
    case OutcomeSource::judge: return "judge";
    case OutcomeSource::human: return "human";
    case OutcomeSource::default_rule: return "default_rule";
  }
  return "judge";
}

std::optional<Outcome> outcome_from_string(std::string_view text) {
  for (auto o : {Outcome::a_wins, Outcome::b_wins, Outcome::tie})
    if (to_string(o) == text) return o;
  return std::nullopt;
}

std::optional<OutcomeSource> outcome_source_from_string(std::string_view text) {
  for (auto s : {OutcomeSource::judge, OutcomeSource::human, OutcomeSource::default_rule})
    if (to_string(s) == text) return s;
  return std::nullopt;
}

std::string_view to_string(PersuasionAnswer a) {
  switch (a) {
    case PersuasionAnswer::more: return "more";
    case PersuasionAnswer::less: return "less";
    case PersuasionAnswer::equal: return "equal";
  }
  return "equal";
}

std::optional<PersuasionAnswer> persuasion_answer_from_string(std::string_view text) {
  const std::string t = to_lower(trim(text));
  if (t == "more") return PersuasionAnswer::more;
  if (t == "less") return PersuasionAnswer::less;
  if (t == "equal") return PersuasionAnswer::equal;
  return std::nullopt;
}

std::vector<Comparison> plan_comparisons(std::span<const ArgumentPair> pairs,
                                         std::span<const std::string> participants) {
  std::vector<Comparison> out;
  out.reserve(pairs.size() * participants.size() * (participants.size() - std::min<std::size_t>(1, participants.size())) / 2);
  for (const auto& pair : pairs)
    for (std::size_t i = 0; i < participants.size(); ++i)
      for (std::size_t j = i + 1; j < participants.size(); ++j)
        out.push_back(Comparison{pair.id, participants[i], participants[j], rationale_id(pair.id, participants[i]),
                                 rationale_id(pair.id, participants[j])});
  return out;
}

namespace {

// Which rationale a single verdict favours, given which one sat in slot 1.
enum class Vote { a, b, equal, invalid };

Vote read_verdict(const std::string& raw, bool a_in_slot1, std::vector<std::string>& flags) {
  auto parsed = parse_judge_output(raw);
  if (std::holds_alternative<ParseFailure>(parsed)) {
    flags.push_back("unparsable_verdict");
    return Vote::invalid;
  }
  switch (std::get<ParsedJudgeVerdict>(parsed).choice) {
    case JudgeChoice::equal: return Vote::equal;
    case JudgeChoice::first: return a_in_slot1 ? Vote::a : Vote::b;
    case JudgeChoice::second: return a_in_slot1 ? Vote::b : Vote::a;
  }
  return Vote::invalid;
}

}  // namespace

ComparisonOutcome judge_pair_symmetric(Gateway& gateway, const PromptKit& kit, const ModelSpec& judge,
                                       const ArgumentPair& pair, const Rationale& a, const Rationale& b) {
  if (!a.admitted() || !b.admitted())
    throw InputError(fmt::format("{} vs {}: only rationales that passed basic form can be judged", a.id, b.id));
  if (a.pair_id != pair.id || b.pair_id != pair.id)
    throw InputError(fmt::format("{} vs {}: rationales belong to another pair", a.id, b.id));
  if (!a.supports || a.supports != b.supports)
    throw InputError(fmt::format("{} vs {}: rationales support different arguments", a.id, b.id));

  ComparisonOutcome out;
  out.comparison = Comparison{pair.id, a.model_id, b.model_id, a.id, b.id};
  out.source = OutcomeSource::judge;
  const Winner w = *a.supports;
  const auto& arg1 = pair.arg1.text;
  const auto& arg2 = pair.arg2.text;

  try {
    out.verdicts.push_back(
        gateway.complete(judge, render_judge_prompt(kit, pair.topic, arg1, arg2, w, a.text, b.text)).response_text);
    out.verdicts.push_back(
        gateway.complete(judge, render_judge_prompt(kit, pair.topic, arg1, arg2, w, b.text, a.text)).response_text);
  } catch (const TransportError& e) {
    spdlog::warn("judge unreachable for {}: {}", out.comparison.id(), e.what());
    out.resolved = false;
    out.flags.push_back("transport");
    return out;
  } catch (const RefusalError& e) {
    out.verdicts.resize(2);
    out.flags.push_back("refusal");
    out.flags.push_back("unparsable_verdict");
    out.outcome = Outcome::tie;
    return out;
  }

  const Vote first = read_verdict(out.verdicts[0], true, out.flags);
  const Vote second = read_verdict(out.verdicts[1], false, out.flags);
  if (first == second && first == Vote::a) {
    out.outcome = Outcome::a_wins;
  } else if (first == second && first == Vote::b) {
    out.outcome = Outcome::b_wins;
  } else {
    out.outcome = Outcome::tie;
    if (first != second && first != Vote::invalid && second != Vote::invalid && first != Vote::equal &&
        second != Vote::equal)
      out.flags.push_back("position_conflict");
  }
  return out;
}

std::optional<ComparisonOutcome> default_rule_outcome(const Comparison& c, const Rationale& a, const Rationale& b) {
  if (a.admitted() && b.admitted()) return std::nullopt;
  ComparisonOutcome out;
  out.comparison = c;
  out.source = OutcomeSource::default_rule;
  if (a.admitted()) {
    out.outcome = Outcome::a_wins;
  } else if (b.admitted()) {
    out.outcome = Outcome::b_wins;
  } else {
    out.outcome = Outcome::tie;
  }
  return out;
}

std::vector<ComparisonOutcome> run_tournament(Gateway& gateway, const PromptKit& kit, const ModelSpec& judge,
                                              std::span<const ArgumentPair> pairs,
                                              std::span<const std::string> participants,
                                              std::span<const Rationale> rationales, TournamentOptions options) {
  std::map<std::string, const Rationale*> by_id;
  for (const auto& r : rationales) by_id[r.id] = &r;
  std::map<std::string, const ArgumentPair*> pair_by_id;
  for (const auto& p : pairs) pair_by_id[p.id] = &p;

  const std::vector<Comparison> plan = plan_comparisons(pairs, participants);
  std::vector<std::string> missing;
  for (const auto& pair : pairs) {
    for (const auto& participant : participants) {
      const std::string rid = rationale_id(pair.id, participant);
      auto it = by_id.find(rid);
      if (it == by_id.end()) {
        missing.push_back(rid);
      } else if (!it->second->basic_form) {
        missing.push_back(rid + " (unlabeled)");
      }
    }
  }
  if (!missing.empty()) throw CoverageError("tournament is missing rationales", std::move(missing));

  std::map<std::string, const ComparisonOutcome*> done;
  for (const auto& o : options.completed) done[o.comparison.id()] = &o;

  std::vector<ComparisonOutcome> results(plan.size());
  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    if (auto it = done.find(plan[i].id()); it != done.end()) {
      results[i] = *it->second;
    } else {
      todo.push_back(i);
    }
  }

  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::exception_ptr first_error;
  auto worker = [&] {
    for (std::size_t k = next++; k < todo.size(); k = next++) {
      const Comparison& c = plan[todo[k]];
      try {
        const Rationale& a = *by_id.at(c.rationale_a);
        const Rationale& b = *by_id.at(c.rationale_b);
        auto settled = default_rule_outcome(c, a, b);
        results[todo[k]] =
            settled ? std::move(*settled) : judge_pair_symmetric(gateway, kit, judge, *pair_by_id.at(c.pair_id), a, b);
        if (options.on_outcome) {
          std::lock_guard lock(mu);
          options.on_outcome(results[todo[k]]);
        }
      } catch (...) {
        std::lock_guard lock(mu);
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
  return results;
}

Scoreboard score_round_robin(std::span<const ComparisonOutcome> outcomes, std::span<const std::string> participants) {
  Scoreboard board;
  board.participants.assign(participants.begin(), participants.end());
  if (participants.size() < 2) throw InputError("a round robin needs at least two participants");
  if (!outcomes.empty()) board.pair_id = outcomes.front().comparison.pair_id;

  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < participants.size(); ++i) {
    if (!index.emplace(participants[i], i).second) throw InputError("duplicate participant " + participants[i]);
    board.half_points[participants[i]] = 0;
  }

  std::vector<std::string> gaps;
  std::vector<std::vector<int>> seen(participants.size(), std::vector<int>(participants.size(), 0));
  for (const auto& o : outcomes) {
    const auto& c = o.comparison;
    if (c.pair_id != board.pair_id) {
      gaps.push_back("foreign pair " + c.id());
      continue;
    }
    auto ia = index.find(c.participant_a);
    auto ib = index.find(c.participant_b);
    if (ia == index.end() || ib == index.end() || ia == ib) {
      gaps.push_back("unknown participant in " + c.id());
      continue;
    }
    if (!o.resolved) {
      gaps.push_back("unresolved " + c.id());
      continue;
    }
    const auto lo = std::min(ia->second, ib->second);
    const auto hi = std::max(ia->second, ib->second);
    if (++seen[lo][hi] > 1) {
      gaps.push_back("duplicate " + participants[lo] + " vs " + participants[hi]);
      continue;
    }
    switch (o.outcome) {
      case Outcome::a_wins: board.half_points[c.participant_a] += 2; break;
      case Outcome::b_wins: board.half_points[c.participant_b] += 2; break;
      case Outcome::tie:
        board.half_points[c.participant_a] += 1;
        board.half_points[c.participant_b] += 1;
        break;
    }
  }
  for (std::size_t i = 0; i < participants.size(); ++i)
    for (std::size_t j = i + 1; j < participants.size(); ++j)
      if (seen[i][j] == 0) gaps.push_back("missing " + participants[i] + " vs " + participants[j]);
  if (!gaps.empty())
    throw CoverageError(fmt::format("pair {}: comparisons do not cover the round robin", board.pair_id),
                        std::move(gaps));

  for (const auto& [p, h] : board.half_points) board.s[p] = static_cast<double>(h) / 2.0;
  board.ranks = ranks_from_scores(board.s);
  return board;
}

std::map<std::string, double> ranks_from_scores(const std::map<std::string, double>& s) {
  std::vector<std::pair<double, std::string>> order;
  order.reserve(s.size());
  for (const auto& [id, score] : s) order.emplace_back(score, id);
  std::sort(order.begin(), order.end());

  std::map<std::string, double> ranks;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && order[j].first == order[i].first) ++j;
    // positions i+1 .. j share their mean
    const double mean = static_cast<double>(i + 1 + j) / 2.0;
    for (std::size_t k = i; k < j; ++k) ranks[order[k].second] = mean;
    i = j;
  }
  return ranks;
}

ScoredTournament score_tournament(std::span<const ComparisonOutcome> outcomes,
                                  std::span<const std::string> participants) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<ComparisonOutcome>> by_pair;
  for (const auto& o : outcomes) {
    auto [it, inserted] = by_pair.try_emplace(o.comparison.pair_id);
    if (inserted) order.push_back(o.comparison.pair_id);
    it->second.push_back(o);
  }
  ScoredTournament out;
  for (const auto& pid : order) {
    const auto& group = by_pair[pid];
    if (std::any_of(group.begin(), group.end(), [](const ComparisonOutcome& o) { return !o.resolved; })) {
      out.excluded_pairs.push_back(pid);
      continue;
    }
    out.scoreboards.push_back(score_round_robin(group, participants));
  }
  return out;
}

ComparisonOutcome human_outcome_from_votes(const Comparison& c, std::span<const PersuasionVote> votes) {
  ComparisonOutcome out;
  out.comparison = c;
  out.source = OutcomeSource::human;
  out.votes.assign(votes.begin(), votes.end());
  if (votes.size() < 3) {
    out.resolved = false;
    out.flags.push_back("insufficient_votes");
    return out;
  }
  std::size_t more = 0, less = 0, equal = 0;
  for (const auto& v : votes) {
    switch (v.answer) {
      case PersuasionAnswer::more: ++more; break;
      case PersuasionAnswer::less: ++less; break;
      case PersuasionAnswer::equal: ++equal; break;
    }
  }
  const std::size_t half = votes.size() / 2;
  if (more > half) {
    out.outcome = Outcome::a_wins;
  } else if (less > half) {
    out.outcome = Outcome::b_wins;
  } else {
    out.outcome = Outcome::tie;
    if (equal <= half) out.flags.push_back("split_vote");
  }
  return out;
}

HumanSample sample_for_human(std::span<const Comparison> all, const std::map<std::string, Rationale>& rationales,
                             double fraction, std::uint64_t seed) {
  if (fraction < 0.0 || fraction > 1.0) throw InputError("sample fraction must lie in [0, 1]");
  std::vector<std::size_t> idx(all.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::mt19937_64 rng(seed);
  portable_shuffle(idx, rng);
  const auto take = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(all.size())));
  idx.resize(std::min(take, idx.size()));
  std::sort(idx.begin(), idx.end());

  auto admitted = [&](const std::string& id) {
    auto it = rationales.find(id);
    return it != rationales.end() && it->second.admitted();
  };
  HumanSample out;
  for (auto i : idx) {
    out.sampled.push_back(all[i]);
    if (admitted(all[i].rationale_a) && admitted(all[i].rationale_b)) out.eligible.push_back(all[i]);
  }
  return out;
}

}  // namespace argjudge
