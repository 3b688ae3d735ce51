#include "argjudge/serialization.hpp"

#include <fmt/format.h>

namespace argjudge {

using nlohmann::json;

namespace {

template <class T>
T field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw StoreError(fmt::format("record lacks \"{}\"", key));
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw StoreError(fmt::format("record field \"{}\" has the wrong type", key));
  }
}

template <class T>
T field_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return field<T>(j, key);
}

json winner_json(std::optional<Winner> w) { return w ? json(slot_number(*w)) : json(nullptr); }

std::optional<Winner> winner_of(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  auto w = winner_from_int(field<long long>(j, key));
  if (!w) throw StoreError(fmt::format("record field \"{}\" must be 1 or 2", key));
  return w;
}

}  // namespace

json to_json(const Argument& a) {
  json j{{"id", a.id}, {"topic_id", a.topic_id}, {"stance", to_string(a.stance)}, {"text", a.text},
         {"word_count", a.word_count}};
  if (a.quality_score) j["quality"] = *a.quality_score;
  return j;
}

Argument argument_from_json(const json& j) {
  Argument a;
  a.id = field<std::string>(j, "id");
  a.topic_id = field_or<std::string>(j, "topic_id", "");
  auto stance = stance_from_string(field<std::string>(j, "stance"));
  if (!stance) throw StoreError("unknown stance in argument " + a.id);
  a.stance = *stance;
  a.text = field<std::string>(j, "text");
  a.word_count = field_or<int>(j, "word_count", static_cast<int>(word_count(a.text)));
  if (j.contains("quality") && !j["quality"].is_null()) a.quality_score = field<double>(j, "quality");
  return a;
}

json to_json(const ArgumentPair& p) {
  json j{{"id", p.id}, {"topic", p.topic}, {"arg1", to_json(p.arg1)}, {"arg2", to_json(p.arg2)},
         {"gold_winner", winner_json(p.gold_winner)}};
  j["quality_delta"] = p.quality_delta ? json(*p.quality_delta) : json(nullptr);
  return j;
}

ArgumentPair pair_from_json(const json& j) {
  ArgumentPair p;
  p.id = field<std::string>(j, "id");
  p.topic = field<std::string>(j, "topic");
  p.arg1 = argument_from_json(field<json>(j, "arg1"));
  p.arg2 = argument_from_json(field<json>(j, "arg2"));
  p.gold_winner = winner_of(j, "gold_winner");
  if (j.contains("quality_delta") && !j["quality_delta"].is_null()) p.quality_delta = field<double>(j, "quality_delta");
  return p;
}

json to_json(const Rationale& r) {
  json j{{"id", r.id},
         {"pair_id", r.pair_id},
         {"model_id", r.model_id},
         {"text", r.text},
         {"word_length", r.word_length},
         {"provenance", to_string(r.provenance)},
         {"supports", winner_json(r.supports)},
         {"changed", r.changed},
         {"flags", r.flags}};
  j["basic_form"] = r.basic_form ? json{{"valid", r.basic_form->valid}, {"repetitive", r.basic_form->repetitive}}
                                 : json(nullptr);
  j["content"] = r.content ? json{{"contrast", r.content->contrast}, {"novelty", r.content->novelty}} : json(nullptr);
  return j;
}

Rationale rationale_from_json(const json& j) {
  Rationale r;
  r.id = field<std::string>(j, "id");
  r.pair_id = field<std::string>(j, "pair_id");
  r.model_id = field<std::string>(j, "model_id");
  r.text = field<std::string>(j, "text");
  r.word_length = field_or<int>(j, "word_length", static_cast<int>(word_count(r.text)));
  auto prov = provenance_from_string(field_or<std::string>(j, "provenance", "base"));
  if (!prov) throw StoreError("unknown provenance in rationale " + r.id);
  r.provenance = *prov;
  r.supports = winner_of(j, "supports");
  r.changed = field_or<bool>(j, "changed", false);
  r.flags = field_or<std::vector<std::string>>(j, "flags", {});
  if (j.contains("basic_form") && !j["basic_form"].is_null()) {
    const auto& b = j["basic_form"];
    r.basic_form = BasicForm{field<bool>(b, "valid"), field<bool>(b, "repetitive")};
  }
  if (j.contains("content") && !j["content"].is_null()) {
    const auto& c = j["content"];
    r.content = ContentLabels{field<bool>(c, "contrast"), field<bool>(c, "novelty")};
  }
  return r;
}

json to_json(const ModelDecision& d) {
  json j{{"id", d.rationale.id.empty() ? d.pair_id + "/" + d.model_id : d.rationale.id},
         {"model_id", d.model_id},
         {"pair_id", d.pair_id},
         {"decision", winner_json(d.winner())},
         {"raw_output", d.raw_output},
         {"attempts", d.attempts},
         {"from_cache", d.from_cache},
         {"rationale", to_json(d.rationale)}};
  if (const auto* f = std::get_if<ParseFailure>(&d.decision))
    j["failure"] = {{"kind", to_string(f->kind)}, {"detail", f->detail}};
  return j;
}

ModelDecision decision_from_json(const json& j) {
  ModelDecision d;
  d.model_id = field<std::string>(j, "model_id");
  d.pair_id = field<std::string>(j, "pair_id");
  d.raw_output = field_or<std::string>(j, "raw_output", "");
  d.attempts = field_or<int>(j, "attempts", 0);
  d.from_cache = field_or<bool>(j, "from_cache", false);
  d.rationale = rationale_from_json(field<json>(j, "rationale"));
  if (auto w = winner_of(j, "decision")) {
    d.decision = *w;
  } else {
    const json f = field<json>(j, "failure");
    auto kind = parse_failure_kind_from_string(field<std::string>(f, "kind"));
    if (!kind) throw StoreError("unknown parse failure kind in decision " + d.pair_id);
    d.decision = ParseFailure{*kind, field_or<std::string>(f, "detail", ""), d.raw_output};
  }
  return d;
}

json to_json(const ComparisonOutcome& o) {
  const auto& c = o.comparison;
  json votes = json::array();
  for (const auto& v : o.votes)
    votes.push_back({{"rater_id", v.rater_id}, {"answer", to_string(v.answer)}, {"explanation", v.explanation}});
  return json{{"id", c.id()},
              {"pair_id", c.pair_id},
              {"participant_a", c.participant_a},
              {"participant_b", c.participant_b},
              {"rationale_a", c.rationale_a},
              {"rationale_b", c.rationale_b},
              {"outcome", to_string(o.outcome)},
              {"source", to_string(o.source)},
              {"resolved", o.resolved},
              {"verdicts", o.verdicts},
              {"votes", std::move(votes)},
              {"flags", o.flags}};
}

ComparisonOutcome outcome_from_json(const json& j) {
  ComparisonOutcome o;
  o.comparison = Comparison{field<std::string>(j, "pair_id"), field<std::string>(j, "participant_a"),
                            field<std::string>(j, "participant_b"), field<std::string>(j, "rationale_a"),
                            field<std::string>(j, "rationale_b")};
  auto outcome = outcome_from_string(field<std::string>(j, "outcome"));
  auto source = outcome_source_from_string(field<std::string>(j, "source"));
  if (!outcome || !source) throw StoreError("bad outcome/source in " + o.comparison.id());
  o.outcome = *outcome;
  o.source = *source;
  o.resolved = field_or<bool>(j, "resolved", true);
  o.verdicts = field_or<std::vector<std::string>>(j, "verdicts", {});
  o.flags = field_or<std::vector<std::string>>(j, "flags", {});
  for (const auto& v : field_or<json>(j, "votes", json::array())) {
    auto answer = persuasion_answer_from_string(field<std::string>(v, "answer"));
    if (!answer) throw StoreError("bad vote answer in " + o.comparison.id());
    o.votes.push_back(PersuasionVote{field<std::string>(v, "rater_id"), *answer, field_or<std::string>(v, "explanation", "")});
  }
  return o;
}

json to_json(const Scoreboard& b) {
  return json{{"id", b.pair_id}, {"pair_id", b.pair_id}, {"participants", b.participants},
              {"half_points", b.half_points}, {"s", b.s}, {"ranks", b.ranks}};
}

Scoreboard scoreboard_from_json(const json& j) {
  Scoreboard b;
  b.pair_id = field<std::string>(j, "pair_id");
  b.participants = field<std::vector<std::string>>(j, "participants");
  b.half_points = field<std::map<std::string, long long>>(j, "half_points");
  b.s = field<std::map<std::string, double>>(j, "s");
  b.ranks = field<std::map<std::string, double>>(j, "ranks");
  return b;
}

json to_json(const FeatureRow& r) {
  return json{{"id", r.rationale_id}, {"x_length", r.x_length}, {"x_contrast", r.x_contrast},
              {"x_novelty", r.x_novelty}, {"target", r.target}};
}

}  // namespace argjudge
