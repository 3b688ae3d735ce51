#include <algorithm>

#include <fmt/format.h>

#include "argjudge/annotation.hpp"

namespace argjudge {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

std::string_view to_string(TaskKind k) {
  switch (k) {
    case TaskKind::basic_form: return "basic_form";
    case TaskKind::content: return "content";
    case TaskKind::persuasion_pair: return "persuasion_pair";
    case TaskKind::gold_check: return "gold_check";
  }
  return "basic_form";
}

std::optional<TaskKind> task_kind_from_string(std::string_view text) {
  for (auto k : {TaskKind::basic_form, TaskKind::content, TaskKind::persuasion_pair, TaskKind::gold_check})
    if (to_string(k) == text) return k;
  return std::nullopt;
}

std::string_view to_string(Rejection r) {
  switch (r) {
    case Rejection::unknown_rater: return "unknown_rater";
    case Rejection::bad_token: return "bad_token";
    case Rejection::unknown_task: return "unknown_task";
    case Rejection::closed: return "closed";
    case Rejection::duplicate: return "duplicate";
    case Rejection::empty_explanation: return "empty_explanation";
    case Rejection::bad_answer: return "bad_answer";
  }
  return "bad_answer";
}

PersuasionAnswer canonical_answer(const std::string& choice, bool swapped) {
  if (choice == "equal") return PersuasionAnswer::equal;
  const bool first_slot = choice == "1";
  // Slot 1 shows rationale_a unless the display is swapped.
  const bool prefers_a = first_slot != swapped;
  return prefers_a ? PersuasionAnswer::more : PersuasionAnswer::less;
}

namespace {

std::optional<bool> yes_no(const json& j) {
  if (j.is_boolean()) return j.get<bool>();
  if (!j.is_string()) return std::nullopt;
  const std::string s = to_lower(trim(j.get<std::string>()));
  if (s == "yes") return true;
  if (s == "no") return false;
  return std::nullopt;
}

json field(const json& answer, const char* key) {
  if (!answer.is_object() || !answer.contains(key))
    throw AnnotationError(Rejection::bad_answer, fmt::format("answer needs \"{}\"", key));
  return answer[key];
}

// Normalized basic-form answer: {"valid": bool, "reason": "invalid"|"repetitive"|null}.
json read_basic_form(const json& answer) {
  auto valid = yes_no(field(answer, "valid"));
  if (!valid) throw AnnotationError(Rejection::bad_answer, "\"valid\" must be yes or no");
  if (*valid) return json{{"valid", true}, {"reason", nullptr}};
  const json reason = field(answer, "reason");
  if (!reason.is_string() || (reason != "invalid" && reason != "repetitive"))
    throw AnnotationError(Rejection::bad_answer, "\"reason\" must be invalid or repetitive");
  return json{{"valid", false}, {"reason", reason}};
}

json read_content(const json& answer) {
  auto c = yes_no(field(answer, "contrast"));
  auto n = yes_no(field(answer, "novelty"));
  if (!c || !n) throw AnnotationError(Rejection::bad_answer, "contrast and novelty must be yes or no");
  return json{{"contrast", *c}, {"novelty", *n}};
}

json read_persuasion(const json& answer) {
  json choice = field(answer, "choice");
  if (choice.is_number_integer()) choice = std::to_string(choice.get<int>());
  if (!choice.is_string() || (choice != "1" && choice != "2" && choice != "equal"))
    throw AnnotationError(Rejection::bad_answer, "\"choice\" must be 1, 2 or equal");
  return json{{"choice", choice}};
}

json base_payload(const ArgumentPair& pair, std::optional<Winner> winner) {
  json p{{"topic", pair.topic}, {"argument_1", pair.arg1.text}, {"argument_2", pair.arg2.text}};
  p["winner"] = winner ? json(fmt::format("argument {}", slot_number(*winner))) : json(nullptr);
  return p;
}

}  // namespace

AnnotationBoard::AnnotationBoard(BoardOptions options) : options_(std::move(options)) {
  if (options_.required_raters < 1) throw ConfigError("required_raters must be positive");
}

void AnnotationBoard::register_rater(const std::string& rater_id, const std::string& token) {
  if (trim(rater_id).empty() || token.empty()) throw ConfigError("rater id and token must be non-empty");
  std::lock_guard lock(mu_);
  tokens_[rater_id] = token;
}

void AnnotationBoard::authenticate(const std::string& rater_id, const std::string& token) const {
  std::lock_guard lock(mu_);
  auto it = tokens_.find(rater_id);
  if (it == tokens_.end()) throw AnnotationError(Rejection::unknown_rater, "unknown rater " + rater_id);
  if (it->second != token) throw AnnotationError(Rejection::bad_token, "bad token for rater " + rater_id);
}

void AnnotationBoard::on_vote(std::function<void(const RecordedVote&)> callback) {
  std::lock_guard lock(mu_);
  on_vote_ = std::move(callback);
}

std::string AnnotationBoard::add(AnnotationTask task) {
  std::lock_guard lock(mu_);
  if (tasks_.count(task.task_id)) throw InputError("duplicate task " + task.task_id);
  const std::string id = task.task_id;
  order_.push_back(id);
  if (task.kind == TaskKind::gold_check) gold_ids_.push_back(id);
  tasks_.emplace(id, Entry{std::move(task), {}, {}});
  return id;
}

std::string AnnotationBoard::add_basic_form_task(const Rationale& r, const ArgumentPair& pair) {
  AnnotationTask t;
  t.task_id = "bf-" + r.id;
  t.kind = TaskKind::basic_form;
  t.item_id = r.id;
  t.required_raters = options_.required_raters;
  t.payload = base_payload(pair, r.supports);
  t.payload["rationale"] = r.text;
  return add(std::move(t));
}

std::string AnnotationBoard::add_content_task(const Rationale& r, const ArgumentPair& pair) {
  AnnotationTask t;
  t.task_id = "ct-" + r.id;
  t.kind = TaskKind::content;
  t.item_id = r.id;
  t.required_raters = options_.required_raters;
  t.payload = base_payload(pair, r.supports);
  t.payload["rationale"] = r.text;
  return add(std::move(t));
}

std::string AnnotationBoard::add_persuasion_task(const Comparison& c, const ArgumentPair& pair, const Rationale& a,
                                                 const Rationale& b) {
  if (a.id != c.rationale_a || b.id != c.rationale_b)
    throw InputError("persuasion task rationales do not match comparison " + c.id());
  AnnotationTask t;
  t.task_id = "pp-" + c.id();
  t.kind = TaskKind::persuasion_pair;
  t.item_id = c.id();
  t.comparison = c;
  t.required_raters = options_.required_raters;
  const std::string digest = sha256_hex(fmt::format("{}:{}", options_.display_seed, t.task_id));
  t.swapped = (std::stoi(digest.substr(0, 1), nullptr, 16) & 1) != 0;
  t.payload = base_payload(pair, a.supports);
  t.payload["rationale_1"] = t.swapped ? b.text : a.text;
  t.payload["rationale_2"] = t.swapped ? a.text : b.text;
  return add(std::move(t));
}

std::string AnnotationBoard::add_gold_check(const Rationale& r, const ArgumentPair& pair, bool valid,
                                            std::optional<std::string> reason) {
  AnnotationTask t;
  {
    std::lock_guard lock(mu_);
    t.task_id = fmt::format("gc-{:03d}", gold_ids_.size() + 1);
  }
  t.kind = TaskKind::gold_check;
  t.item_id = r.id;
  t.required_raters = 0;
  t.payload = base_payload(pair, r.supports);
  t.payload["rationale"] = r.text;
  t.gold_answer = json{{"valid", valid}, {"reason", reason ? json(*reason) : json(nullptr)}};
  return add(std::move(t));
}

RaterProgress AnnotationBoard::rater_progress(const std::string& rater_id) const {
  RaterProgress p;
  for (const auto& id : gold_ids_) {
    const Entry& e = tasks_.at(id);
    for (const auto& v : e.votes) {
      if (v.rater_id != rater_id) continue;
      ++p.gold_answered;
      const json& gold = *e.task.gold_answer;
      const bool valid_ok = v.answer["valid"] == gold["valid"];
      const bool reason_ok = gold["reason"].is_null() || v.answer["reason"] == gold["reason"];
      if (valid_ok && reason_ok) ++p.gold_correct;
    }
  }
  p.flagged = p.gold_answered >= options_.gold_min &&
              static_cast<double>(p.gold_correct) < options_.gold_threshold * static_cast<double>(p.gold_answered);
  return p;
}

bool AnnotationBoard::rater_flagged(const std::string& rater_id) const {
  return options_.exclude_flagged && rater_progress(rater_id).flagged;
}

std::vector<const RecordedVote*> AnnotationBoard::counted_votes(const Entry& e) const {
  std::vector<const RecordedVote*> out;
  for (const auto& v : e.votes)
    if (!rater_flagged(v.rater_id)) out.push_back(&v);
  return out;
}

bool AnnotationBoard::closed(const Entry& e) const {
  if (e.task.kind == TaskKind::gold_check) return false;
  return counted_votes(e).size() >= static_cast<std::size_t>(e.task.required_raters);
}

std::optional<AnnotationTask> AnnotationBoard::next_task(const std::string& rater_id) {
  std::lock_guard lock(mu_);
  if (!tokens_.count(rater_id)) throw AnnotationError(Rejection::unknown_rater, "unknown rater " + rater_id);
  if (rater_flagged(rater_id)) return std::nullopt;
  const auto now = Clock::now();
  auto voted = [&](const Entry& e) {
    return std::any_of(e.votes.begin(), e.votes.end(), [&](const RecordedVote& v) { return v.rater_id == rater_id; });
  };
  auto live_leases = [&](Entry& e) {
    std::size_t n = 0;
    for (auto it = e.leases.begin(); it != e.leases.end();) {
      if (it->second <= now) {
        it = e.leases.erase(it);
      } else {
        if (it->first != rater_id) ++n;
        ++it;
      }
    }
    return n;
  };

  for (const auto& id : order_) {
    Entry& e = tasks_.at(id);
    auto lease = e.leases.find(rater_id);
    if (lease != e.leases.end() && lease->second > now && !voted(e) && !closed(e)) {
      lease->second = now + options_.lease;
      return e.task;
    }
  }
  for (const auto& id : order_) {
    Entry& e = tasks_.at(id);
    if (e.task.kind != TaskKind::gold_check || voted(e)) continue;
    e.leases[rater_id] = now + options_.lease;
    return e.task;
  }
  for (const auto& id : order_) {
    Entry& e = tasks_.at(id);
    if (e.task.kind == TaskKind::gold_check || voted(e) || closed(e)) continue;
    const std::size_t taken = counted_votes(e).size() + live_leases(e);
    if (taken >= static_cast<std::size_t>(e.task.required_raters)) continue;
    e.leases[rater_id] = now + options_.lease;
    return e.task;
  }
  return std::nullopt;
}

bool AnnotationBoard::submit_vote(const std::string& rater_id, const std::string& task_id, const json& answer,
                                  const std::string& explanation) {
  std::lock_guard lock(mu_);
  if (!tokens_.count(rater_id)) throw AnnotationError(Rejection::unknown_rater, "unknown rater " + rater_id);
  auto it = tasks_.find(task_id);
  if (it == tasks_.end()) throw AnnotationError(Rejection::unknown_task, "unknown task " + task_id);
  Entry& e = it->second;
  for (const auto& v : e.votes)
    if (v.rater_id == rater_id)
      throw AnnotationError(Rejection::duplicate, fmt::format("rater {} already voted on {}", rater_id, task_id));
  if (closed(e)) throw AnnotationError(Rejection::closed, "task " + task_id + " is closed");

  json normalized;
  switch (e.task.kind) {
    case TaskKind::basic_form:
    case TaskKind::gold_check: normalized = read_basic_form(answer); break;
    case TaskKind::content: normalized = read_content(answer); break;
    case TaskKind::persuasion_pair:
      normalized = read_persuasion(answer);
      if (trim(explanation).empty())
        throw AnnotationError(Rejection::empty_explanation, "persuasion votes need a written explanation");
      break;
  }

  RecordedVote v{task_id, rater_id, std::move(normalized), explanation, options_.guideline_version, utc_timestamp()};
  e.votes.push_back(v);
  e.leases.erase(rater_id);
  if (on_vote_) on_vote_(v);
  return closed(e);
}

std::vector<VoteSet> AnnotationBoard::export_binary(TaskKind kind) const {
  if (kind != TaskKind::basic_form && kind != TaskKind::content)
    throw InputError("binary export covers basic_form and content tasks");
  std::lock_guard lock(mu_);
  std::vector<VoteSet> out;
  for (const auto& id : order_) {
    const Entry& e = tasks_.at(id);
    if (e.task.kind != kind || !closed(e)) continue;
    const auto votes = counted_votes(e);
    if (kind == TaskKind::basic_form) {
      VoteSet validity{e.task.item_id, Dimension::validity, {}};
      VoteSet repetition{e.task.item_id, Dimension::repetition, {}};
      for (const auto* v : votes) {
        const bool valid = v->answer["valid"].get<bool>();
        const bool repetitive = !valid && v->answer["reason"] == "repetitive";
        validity.votes.push_back({v->rater_id, valid || repetitive});
        repetition.votes.push_back({v->rater_id, repetitive});
      }
      out.push_back(std::move(validity));
      out.push_back(std::move(repetition));
    } else {
      VoteSet contrast{e.task.item_id, Dimension::contrast, {}};
      VoteSet novelty{e.task.item_id, Dimension::novelty, {}};
      for (const auto* v : votes) {
        contrast.votes.push_back({v->rater_id, v->answer["contrast"].get<bool>()});
        novelty.votes.push_back({v->rater_id, v->answer["novelty"].get<bool>()});
      }
      out.push_back(std::move(contrast));
      out.push_back(std::move(novelty));
    }
  }
  return out;
}

std::vector<PersuasionVoteSet> AnnotationBoard::export_persuasion() const {
  std::lock_guard lock(mu_);
  std::vector<PersuasionVoteSet> out;
  for (const auto& id : order_) {
    const Entry& e = tasks_.at(id);
    if (e.task.kind != TaskKind::persuasion_pair || !closed(e)) continue;
    PersuasionVoteSet set{e.task.task_id, *e.task.comparison, {}};
    for (const auto* v : counted_votes(e))
      set.votes.push_back(
          PersuasionVote{v->rater_id, canonical_answer(v->answer["choice"].get<std::string>(), e.task.swapped),
                         v->explanation});
    out.push_back(std::move(set));
  }
  return out;
}

json AnnotationBoard::export_json(TaskKind kind) const {
  json items = json::array();
  if (kind == TaskKind::persuasion_pair) {
    for (const auto& s : export_persuasion()) {
      json votes = json::array();
      for (const auto& v : s.votes)
        votes.push_back({{"rater_id", v.rater_id}, {"answer", to_string(v.answer)}, {"explanation", v.explanation}});
      items.push_back({{"task_id", s.task_id},
                       {"comparison_id", s.comparison.id()},
                       {"pair_id", s.comparison.pair_id},
                       {"rationale_a", s.comparison.rationale_a},
                       {"rationale_b", s.comparison.rationale_b},
                       {"participant_a", s.comparison.participant_a},
                       {"participant_b", s.comparison.participant_b},
                       {"votes", std::move(votes)}});
    }
  } else if (kind == TaskKind::gold_check) {
    std::lock_guard lock(mu_);
    for (const auto& [rater, token] : tokens_) {
      const auto p = rater_progress(rater);
      items.push_back({{"rater_id", rater},
                       {"gold_answered", p.gold_answered},
                       {"gold_correct", p.gold_correct},
                       {"flagged", p.flagged}});
    }
  } else {
    for (const auto& s : export_binary(kind))
      for (const auto& v : s.votes)
        items.push_back({{"item_id", s.item_id},
                         {"dimension", to_string(s.dimension)},
                         {"rater_id", v.rater_id},
                         {"answer", v.answer ? "yes" : "no"}});
  }
  return json{{"kind", to_string(kind)}, {"guideline_version", options_.guideline_version}, {"items", std::move(items)}};
}

BoardProgress AnnotationBoard::progress() const {
  std::lock_guard lock(mu_);
  BoardProgress p;
  for (const auto& id : order_) {
    const Entry& e = tasks_.at(id);
    ++p.tasks;
    p.votes += e.votes.size();
    auto& [closed_n, total_n] = p.by_kind[e.task.kind];
    ++total_n;
    if (closed(e)) {
      ++p.closed;
      ++closed_n;
    }
  }
  for (const auto& [rater, token] : tokens_) p.raters[rater] = rater_progress(rater);
  for (const auto& [id, e] : tasks_)
    for (const auto& v : e.votes)
      if (auto it = p.raters.find(v.rater_id); it != p.raters.end()) ++it->second.votes;
  return p;
}

std::optional<AnnotationTask> AnnotationBoard::task(const std::string& task_id) const {
  std::lock_guard lock(mu_);
  auto it = tasks_.find(task_id);
  if (it == tasks_.end()) return std::nullopt;
  return it->second.task;
}

std::size_t AnnotationBoard::size() const {
  std::lock_guard lock(mu_);
  return tasks_.size();
}

}  // namespace argjudge
