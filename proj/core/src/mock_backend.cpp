#include "argjudge/mock_backend.hpp"

#include <array>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "argjudge/rationale_quality.hpp"

namespace argjudge {

using nlohmann::json;

namespace {

template <class E, std::size_t N>
E lookup_enum(std::string_view value, const std::array<std::pair<std::string_view, E>, N>& table,
              std::string_view key) {
  for (const auto& [name, e] : table)
    if (name == value) return e;
  throw ConfigError(fmt::format("mock persona: unknown {} '{}'", key, value));
}

constexpr std::array<std::pair<std::string_view, DecisionPolicy>, 4> kDecisions{{
    {"gold", DecisionPolicy::gold},
    {"slot1", DecisionPolicy::slot1},
    {"slot2", DecisionPolicy::slot2},
    {"contrarian", DecisionPolicy::contrarian},
}};
constexpr std::array<std::pair<std::string_view, RationaleStyle>, 7> kStyles{{
    {"plain", RationaleStyle::plain},
    {"contrastive", RationaleStyle::contrastive},
    {"bare_verdict", RationaleStyle::bare_verdict},
    {"repetitive", RationaleStyle::repetitive},
    {"invalid_json", RationaleStyle::invalid_json},
    {"empty_reasoning", RationaleStyle::empty_reasoning},
    {"refuse", RationaleStyle::refuse},
}};
constexpr std::array<std::pair<std::string_view, JudgePolicy>, 7> kJudges{{
    {"slot1", JudgePolicy::slot1},
    {"slot2", JudgePolicy::slot2},
    {"equal", JudgePolicy::equal},
    {"prefer_contrast", JudgePolicy::prefer_contrast},
    {"prefer_longer", JudgePolicy::prefer_longer},
    {"content", JudgePolicy::content},
    {"invalid", JudgePolicy::invalid},
}};
constexpr std::array<std::pair<std::string_view, RefinePolicy>, 4> kRefines{{
    {"yes", RefinePolicy::yes},
    {"no", RefinePolicy::no},
    {"sentinel_no", RefinePolicy::sentinel_no},
    {"invalid", RefinePolicy::invalid},
}};

std::optional<PromptKind> kind_from_string(std::string_view name) {
  for (auto k : {PromptKind::ranking, PromptKind::persuasion, PromptKind::judge, PromptKind::refine,
                 PromptKind::content})
    if (to_string(k) == name) return k;
  return std::nullopt;
}

void apply_setting(MockScript& s, const std::string& key, const std::string& value) {
  if (key == "decision") {
    s.decision = lookup_enum(value, kDecisions, key);
  } else if (key == "style") {
    s.style = lookup_enum(value, kStyles, key);
  } else if (key == "judge") {
    s.judge = lookup_enum(value, kJudges, key);
  } else if (key == "refine") {
    s.refine = lookup_enum(value, kRefines, key);
  } else if (key == "persuasion") {
    s.follows_persuasion = value != "ignore";
  } else if (key == "extra") {
    s.extra_sentences = std::stoi(value);
  } else if (key == "fail") {
    s.transient_failures = std::stoi(value);
  } else if (key == "persona") {
    s.persona = value != "none";
  } else if (key == "default") {
    s.default_response = value;
  } else {
    throw ConfigError("mock persona: unknown key '" + key + "'");
  }
}

void apply_alias(MockScript& s, const std::string& alias) {
  if (alias == "gold-oracle") {
    s.decision = DecisionPolicy::gold;
  } else if (alias == "always-slot-1") {
    s.decision = DecisionPolicy::slot1;
    s.judge = JudgePolicy::slot1;
  } else if (alias == "always-slot-2") {
    s.decision = DecisionPolicy::slot2;
    s.judge = JudgePolicy::slot2;
  } else if (alias == "contrarian") {
    s.decision = DecisionPolicy::contrarian;
  } else if (alias == "invalid-json") {
    s.style = RationaleStyle::invalid_json;
  } else if (alias == "contrast-judge") {
    s.judge = JudgePolicy::prefer_contrast;
  } else if (!alias.empty()) {
    throw ConfigError("mock persona: unknown alias '" + alias + "'");
  }
}

}  // namespace

MockScript parse_mock_spec(std::string_view spec) {
  MockScript s;
  std::size_t pos = 0;
  while (pos <= spec.size()) {
    auto end = spec.find(';', pos);
    if (end == std::string_view::npos) end = spec.size();
    const std::string item = trim(spec.substr(pos, end - pos));
    pos = end + 1;
    if (item.empty()) continue;
    const auto eq = item.find('=');
    try {
      if (eq == std::string::npos) {
        apply_alias(s, item);
      } else {
        apply_setting(s, trim(item.substr(0, eq)), trim(item.substr(eq + 1)));
      }
    } catch (const std::invalid_argument&) {
      throw ConfigError("mock persona: bad number in '" + item + "'");
    }
  }
  return s;
}

MockScript parse_mock_script_json(std::string_view json_text) {
  auto j = json::parse(json_text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ConfigError("mock script must be a JSON object");
  MockScript s;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    if (key == "rules") {
      for (const auto& r : it.value()) {
        MockRule rule{r.value("contains", ""), r.value("response", ""), std::nullopt};
        if (r.contains("kind")) {
          rule.kind = kind_from_string(r["kind"].get<std::string>());
          if (!rule.kind) throw ConfigError("mock script: unknown prompt kind in rule");
        }
        s.rules.push_back(std::move(rule));
      }
    } else if (key == "persona" && it.value().is_boolean()) {
      s.persona = it.value().get<bool>();
    } else if (key == "persona" && it.value().is_string()) {
      apply_alias(s, it.value().get<std::string>());
    } else if (key == "persuasion" && it.value().is_boolean()) {
      s.follows_persuasion = it.value().get<bool>();
    } else if (it.value().is_number_integer()) {
      apply_setting(s, key, std::to_string(it.value().get<long long>()));
    } else if (it.value().is_string()) {
      apply_setting(s, key, it.value().get<std::string>());
    } else {
      throw ConfigError("mock script: unsupported value for '" + key + "'");
    }
  }
  return s;
}

MockBackend::MockBackend(MockScript script, GoldSource gold) : script_(std::move(script)), gold_(std::move(gold)) {}

std::string MockBackend::send(const ModelSpec& spec, const PromptBundle& prompt) {
  if (script_.transient_failures > 0) {
    std::lock_guard lock(mu_);
    int& seen = failures_seen_[prompt.hash()];
    if (seen < script_.transient_failures) {
      ++seen;
      throw TransportError(fmt::format("mock {}: scripted transient failure {}", spec.model_id, seen));
    }
  }

  if (!script_.rules.empty()) {
    const std::string flat = prompt.system_message + "\n" + prompt.user_text();
    for (const auto& rule : script_.rules) {
      if (rule.kind && *rule.kind != prompt.kind) continue;
      if (flat.find(rule.contains) != std::string::npos) return rule.response;
    }
  }
  if (script_.persona) return persona_answer(spec, prompt);
  if (script_.default_response) return *script_.default_response;
  throw MockGapError(fmt::format("mock {}: no scripted answer for {} prompt {}", spec.model_id,
                                 to_string(prompt.kind), prompt.hash().substr(0, 12)));
}

namespace {

// Up to `n` longer words of `text`, as a short noun phrase for templated rationales.
std::string focus_phrase(std::string_view text, std::size_t n = 4) {
  std::string out;
  std::size_t taken = 0;
  for (const auto& t : normalized_tokens(text)) {
    if (t.size() < 5) continue;
    if (!out.empty()) out += ' ';
    out += t;
    if (++taken == n) break;
  }
  return out.empty() ? std::string("its central claim") : out;
}

const std::array<std::string_view, 4> kOpenings{
    "Argument {n} is the stronger recommendation because it focuses on {focus}.",
    "I recommend argument {n} since its point about {focus} is concrete and relevant to the topic.",
    "Argument {n} makes a clearer case by grounding the topic in {focus}.",
    "The reasoning behind argument {n} is more convincing because it highlights {focus}.",
};

const std::array<std::string_view, 6> kFillers{
    "It stays focused on the practical consequences for the people who are affected.",
    "The reasoning would hold up across many different situations and communities.",
    "Its claim is stated plainly and can be checked against everyday experience.",
    "It connects the topic to values that most people already share.",
    "The claim also has consequences for how institutions set their priorities.",
    "A reader weighing the topic for the first time would find this point easy to follow.",
};

std::string fill(std::string_view pattern, int n, int m, const std::string& focus, const std::string& loser_focus) {
  std::string out(pattern);
  auto replace_all = [&](std::string_view from, const std::string& to) {
    for (std::size_t p = out.find(from); p != std::string::npos; p = out.find(from, p + to.size()))
      out.replace(p, from.size(), to);
  };
  replace_all("{n}", std::to_string(n));
  replace_all("{m}", std::to_string(m));
  replace_all("{focus}", focus);
  replace_all("{loser_focus}", loser_focus);
  return out;
}

std::string contrast_sentence(int n, int m, const std::string& loser_focus) {
  return fill("While argument {m} raises a point about {loser_focus}, it does not show why that concern should "
              "outweigh the case made in argument {n}.",
              n, m, "", loser_focus);
}

struct PairView {
  ArgumentPair pair;
  Winner winner = Winner::first;
};

std::string payload_string(const json& payload, const char* key) {
  if (!payload.contains(key) || !payload[key].is_string()) return {};
  return payload[key].get<std::string>();
}

Winner winner_from_label(const std::string& label) { return label == "ARG2" ? Winner::second : Winner::first; }

}  // namespace

std::string MockBackend::persona_answer(const ModelSpec& spec, const PromptBundle& prompt) const {
  const json payload = json::parse(prompt.payload, nullptr, false);
  if (payload.is_discarded()) throw MockGapError("mock: prompt payload is not JSON");
  const std::uint64_t model_hash = std::hash<std::string>{}(spec.model_id);

  switch (prompt.kind) {
    case PromptKind::ranking:
    case PromptKind::persuasion: {
      const std::string topic = payload_string(payload, "topic");
      const std::string a1 = payload_string(payload, "1");
      const std::string a2 = payload_string(payload, "2");
      Winner decision = Winner::first;
      switch (script_.decision) {
        case DecisionPolicy::slot1: decision = Winner::first; break;
        case DecisionPolicy::slot2: decision = Winner::second; break;
        case DecisionPolicy::gold:
        case DecisionPolicy::contrarian: {
          auto book = gold_ ? gold_() : nullptr;
          auto gold = book ? book->find(topic, a1, a2) : std::nullopt;
          if (!gold) {
            if (script_.default_response) return *script_.default_response;
            throw MockGapError(fmt::format("mock {}: no gold winner for pair on '{}'", spec.model_id, topic));
          }
          decision = script_.decision == DecisionPolicy::gold ? *gold : other(*gold);
          break;
        }
      }
      const int n = slot_number(decision);
      const int m = slot_number(other(decision));
      const std::string& chosen = decision == Winner::first ? a1 : a2;
      const std::string& loser = decision == Winner::first ? a2 : a1;
      const std::string focus = focus_phrase(chosen);
      const std::string loser_focus = focus_phrase(loser);

      std::string reasoning;
      if (prompt.kind == PromptKind::persuasion && script_.follows_persuasion &&
          (script_.style == RationaleStyle::plain || script_.style == RationaleStyle::contrastive)) {
        reasoning = fill(
            "Argument {n} grounds its case in {focus}. It offers a concrete and practical reason to accept this "
            "position on the topic. Argument {m} is less convincing because its point about {loser_focus} is not "
            "developed. It also fails to answer the central concern raised by argument {n}.",
            n, m, focus, loser_focus);
      } else {
        switch (script_.style) {
          case RationaleStyle::refuse:
            throw RefusalError(fmt::format("mock {}: declined to answer", spec.model_id));
          case RationaleStyle::invalid_json:
            return fmt::format("I think argument {} is better, because it is well argued.", n);
          case RationaleStyle::bare_verdict:
            reasoning = fmt::format("argument {} is more convincing than argument {}", n, m);
            break;
          case RationaleStyle::repetitive:
            reasoning = chosen;
            break;
          case RationaleStyle::empty_reasoning:
            reasoning = "";
            break;
          case RationaleStyle::plain:
          case RationaleStyle::contrastive: {
            reasoning = fill(kOpenings[model_hash % kOpenings.size()], n, m, focus, loser_focus);
            for (int i = 0; i < script_.extra_sentences; ++i)
              reasoning += " " + std::string(kFillers[(model_hash / 7 + static_cast<std::uint64_t>(i)) % kFillers.size()]);
            if (script_.style == RationaleStyle::contrastive) reasoning += " " + contrast_sentence(n, m, loser_focus);
            break;
          }
        }
      }
      return json{{"decision", n}, {"reasoning", reasoning}}.dump();
    }

    case PromptKind::judge: {
      PairView v;
      v.pair.topic = payload_string(payload, "topic");
      v.pair.arg1.text = payload_string(payload, "ARG1");
      v.pair.arg2.text = payload_string(payload, "ARG2");
      v.winner = winner_from_label(payload_string(payload, "WINNER_ARG"));
      const std::string r1 = payload_string(payload, "[1]");
      const std::string r2 = payload_string(payload, "[2]");

      json decision = "equal";
      switch (script_.judge) {
        case JudgePolicy::slot1: decision = 1; break;
        case JudgePolicy::slot2: decision = 2; break;
        case JudgePolicy::equal: break;
        case JudgePolicy::invalid: return "Both rationales have merits and I cannot decide between them.";
        case JudgePolicy::prefer_contrast: {
          const bool c1 = heuristic_contrast(r1, v.pair, v.winner);
          const bool c2 = heuristic_contrast(r2, v.pair, v.winner);
          if (c1 != c2) decision = c1 ? 1 : 2;
          break;
        }
        case JudgePolicy::prefer_longer: {
          const auto l1 = word_count(r1);
          const auto l2 = word_count(r2);
          if (l1 != l2) decision = l1 > l2 ? 1 : 2;
          break;
        }
        case JudgePolicy::content: {
          auto score = [&](const std::string& r) {
            return 2 * static_cast<int>(heuristic_contrast(r, v.pair, v.winner)) +
                   static_cast<int>(heuristic_novelty(r, v.pair));
          };
          const int s1 = score(r1);
          const int s2 = score(r2);
          const auto l1 = static_cast<double>(word_count(r1));
          const auto l2 = static_cast<double>(word_count(r2));
          if (s1 != s2) {
            decision = s1 > s2 ? 1 : 2;
          } else if (length_ratio(l1, l2) > 0.2) {
            decision = l1 > l2 ? 1 : 2;
          }
          break;
        }
      }
      return "Comparing both rationales step by step, I weigh how each one supports the winner argument.\n" +
             json{{"decision", decision}, {"reasoning", "the chosen rationale engages the arguments more directly"}}.dump();
    }

    case PromptKind::refine: {
      const std::string rationale = payload_string(payload, "supporting rationale");
      const Winner w = winner_from_label(payload_string(payload, "WINNER ARG"));
      const std::string loser = payload_string(payload, w == Winner::first ? "2" : "1");
      switch (script_.refine) {
        case RefinePolicy::yes:
          return json{{"convincing", "YES"}, {"improved rationale", kNoImprovementSentinel}}.dump();
        case RefinePolicy::sentinel_no:
          return json{{"convincing", "NO"}, {"improved rationale", kNoImprovementSentinel}}.dump();
        case RefinePolicy::invalid:
          return json{{"convincing", "MAYBE"}, {"improved rationale", ""}}.dump();
        case RefinePolicy::no: {
          const std::string improved =
              rationale + " " + contrast_sentence(slot_number(w), slot_number(other(w)), focus_phrase(loser));
          return json{{"convincing", "NO"}, {"improved rationale", improved}}.dump();
        }
      }
      break;
    }

    case PromptKind::content: {
      PairView v;
      v.pair.topic = payload_string(payload, "topic");
      v.pair.arg1.text = payload_string(payload, "ARG1");
      v.pair.arg2.text = payload_string(payload, "ARG2");
      v.winner = winner_from_label(payload_string(payload, "WINNER_ARG"));
      const std::string r = payload_string(payload, "rationale");
      return json{{"contrast", heuristic_contrast(r, v.pair, v.winner) ? "YES" : "NO"},
                  {"novelty", heuristic_novelty(r, v.pair) ? "YES" : "NO"}}
          .dump();
    }
  }
  throw MockGapError("mock: unsupported prompt kind");
}

}  // namespace argjudge
