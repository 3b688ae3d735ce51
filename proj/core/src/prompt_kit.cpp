#include "argjudge/prompt_kit.hpp"

#include <cstdlib>
#include <filesystem>
#include <regex>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "csv.hpp"

#ifndef ARGJUDGE_DEFAULT_TEMPLATE_DIR
#define ARGJUDGE_DEFAULT_TEMPLATE_DIR "templates"
#endif

namespace argjudge {

using nlohmann::json;

std::string_view to_string(PromptKind kind) {
  switch (kind) {
    case PromptKind::ranking: return "ranking";
    case PromptKind::persuasion: return "persuasion";
    case PromptKind::judge: return "judge";
    case PromptKind::refine: return "refine";
    case PromptKind::content: return "content";
  }
  return "unknown";
}

std::string PromptBundle::user_text() const {
  std::string out = task_description;
  if (!formatting_examples.empty()) {
    out += "\n\nFormatting Examples\n";
    for (std::size_t i = 0; i < formatting_examples.size(); ++i) {
      out += fmt::format("Example {}:\n{}\nOutput:\n{}\n", i + 1, formatting_examples[i].input,
                         formatting_examples[i].output);
    }
  }
  out += "\nAnnotation Example\n";
  out += payload;
  if (!closing.empty()) {
    out += "\n";
    out += closing;
  }
  return out;
}

std::string PromptBundle::hash() const {
  return sha256_hex(system_message + '\x1f' + user_text());
}

// ---------------------------------------------------------------------------

namespace {

const std::set<std::string>& known_sections() {
  static const std::set<std::string> names{"system", "task", "reminder", "example_input",
                                           "example_output", "payload", "closing"};
  return names;
}

std::string substitute(std::string_view text, const std::map<std::string, std::string>& values,
                       bool as_json) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '{') {
      const auto close = text.find('}', i + 1);
      if (close != std::string_view::npos) {
        const std::string name(text.substr(i + 1, close - i - 1));
        auto it = values.find(name);
        if (it != values.end()) {
          out += as_json ? json(it->second).dump(-1, ' ', false, json::error_handler_t::replace)
                         : it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out += text[i++];
  }
  return out;
}

}  // namespace

PromptTemplate PromptTemplate::parse(std::string_view text, PromptKind kind, const std::string& origin) {
  PromptTemplate t;
  t.kind_ = kind;
  t.origin_ = origin;

  std::string current;
  std::string body;
  std::vector<std::string> pending_inputs;
  auto flush = [&] {
    if (current.empty()) return;
    const std::string content = trim(body);
    if (current == "example_input") {
      pending_inputs.push_back(content);
    } else if (current == "example_output") {
      if (pending_inputs.empty())
        throw ConfigError(origin + ": [example_output] without a preceding [example_input]");
      t.examples_.push_back({pending_inputs.front(), content});
      pending_inputs.erase(pending_inputs.begin());
    } else {
      if (t.sections_.count(current)) throw ConfigError(origin + ": duplicate section [" + current + "]");
      t.sections_[current] = content;
    }
    body.clear();
  };

  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string stripped = trim(line);
    if (stripped.size() > 2 && stripped.front() == '[' && stripped.back() == ']') {
      const std::string name = stripped.substr(1, stripped.size() - 2);
      if (known_sections().count(name)) {
        flush();
        current = name;
        continue;
      }
    }
    if (current.empty()) {
      if (stripped.empty() || stripped.front() == '#') continue;
      throw ConfigError(origin + ": text before the first section");
    }
    body += line;
    body += '\n';
  }
  flush();
  if (!pending_inputs.empty()) throw ConfigError(origin + ": [example_input] without [example_output]");
  for (const char* required : {"system", "task", "payload"})
    if (!t.sections_.count(required)) throw ConfigError(origin + ": missing section [" + std::string(required) + "]");
  return t;
}

PromptTemplate PromptTemplate::load(const std::string& path, PromptKind kind) {
  std::string text;
  try {
    text = detail::slurp_file(path);
  } catch (const DatasetError&) {
    throw ConfigError("prompt template not found: " + path);
  }
  return parse(text, kind, path);
}

const std::string& PromptTemplate::section(const std::string& name) const {
  static const std::string empty;
  auto it = sections_.find(name);
  return it == sections_.end() ? empty : it->second;
}

PromptBundle PromptTemplate::render(const std::map<std::string, std::string>& values) const {
  PromptBundle b;
  b.kind = kind_;
  b.system_message = substitute(section("system"), values, false);
  b.task_description = substitute(section("task"), values, false);
  if (has_section("reminder")) b.task_description += "\n\n" + substitute(section("reminder"), values, false);
  b.formatting_examples = examples_;
  b.payload = substitute(section("payload"), values, true);
  b.closing = substitute(section("closing"), values, false);
  if (json::parse(b.payload, nullptr, false).is_discarded())
    throw ConfigError(origin_ + ": rendered payload is not valid JSON");
  return b;
}

// ---------------------------------------------------------------------------

namespace {

const char* file_for(PromptKind kind) {
  switch (kind) {
    case PromptKind::ranking: return "ranking.txt";
    case PromptKind::persuasion: return "persuasion.txt";
    case PromptKind::judge: return "judge.txt";
    case PromptKind::refine: return "refine.txt";
    case PromptKind::content: return "content.txt";
  }
  return "";
}

std::vector<std::string> placeholders_for(PromptKind kind) {
  switch (kind) {
    case PromptKind::ranking:
    case PromptKind::persuasion: return {"topic", "arg1", "arg2"};
    case PromptKind::judge: return {"topic", "arg1", "arg2", "winner", "rationale1", "rationale2"};
    case PromptKind::refine:
    case PromptKind::content: return {"topic", "arg1", "arg2", "winner", "rationale"};
  }
  return {};
}

void validate_template(const PromptTemplate& t, const std::string& origin) {
  for (const auto& name : placeholders_for(t.kind()))
    if (t.section("payload").find("{" + name + "}") == std::string::npos)
      throw ConfigError(origin + ": payload lacks placeholder {" + name + "}");

  switch (t.kind()) {
    case PromptKind::ranking:
    case PromptKind::persuasion: {
      if (t.examples().size() != 2)
        throw ConfigError(origin + ": ranking prompts need exactly two formatting examples");
      std::set<Winner> seen;
      for (const auto& ex : t.examples()) {
        auto parsed = parse_ranking_output(ex.output);
        if (auto* ok = std::get_if<ParsedRanking>(&parsed)) {
          seen.insert(ok->decision);
        } else {
          throw ConfigError(origin + ": formatting example output does not parse");
        }
      }
      if (seen.size() != 2)
        throw ConfigError(origin + ": formatting examples must cover both winner positions");
      break;
    }
    case PromptKind::judge:
      if (t.examples().empty()) throw ConfigError(origin + ": judge prompt needs formatting examples");
      for (const auto& ex : t.examples())
        if (!std::holds_alternative<ParsedJudgeVerdict>(parse_judge_output(ex.output)))
          throw ConfigError(origin + ": judge formatting example output does not parse");
      if (trim(t.section("closing")).empty()) throw ConfigError(origin + ": judge prompt needs a closing instruction");
      break;
    case PromptKind::refine:
      for (const auto& ex : t.examples())
        if (!std::holds_alternative<ParsedRefinement>(parse_refine_output(ex.output)))
          throw ConfigError(origin + ": refine formatting example output does not parse");
      break;
    case PromptKind::content:
      for (const auto& ex : t.examples())
        if (!std::holds_alternative<ParsedContentLabel>(parse_content_output(ex.output)))
          throw ConfigError(origin + ": content formatting example output does not parse");
      break;
  }
}

}  // namespace

PromptKit PromptKit::load(const std::string& dir) {
  PromptKit kit;
  for (auto kind : {PromptKind::ranking, PromptKind::persuasion, PromptKind::judge, PromptKind::refine,
                    PromptKind::content}) {
    const std::string path = (std::filesystem::path(dir) / file_for(kind)).string();
    auto t = PromptTemplate::load(path, kind);
    validate_template(t, path);
    kit.templates_.emplace(kind, std::move(t));
  }
  return kit;
}

std::string PromptKit::default_directory() {
  if (const char* env = std::getenv("ARGJUDGE_TEMPLATE_DIR"); env && *env) return env;
  return ARGJUDGE_DEFAULT_TEMPLATE_DIR;
}

PromptKit PromptKit::load_default() { return load(default_directory()); }

const PromptTemplate& PromptKit::get(PromptKind kind) const {
  auto it = templates_.find(kind);
  if (it == templates_.end()) throw ConfigError(fmt::format("no template loaded for {}", to_string(kind)));
  return it->second;
}

namespace {

void require_nonempty(std::string_view text, const char* what) {
  if (trim(text).empty()) throw InputError(fmt::format("{} must not be empty", what));
}

std::map<std::string, std::string> pair_values(const ArgumentPair& pair) {
  require_nonempty(pair.topic, "topic");
  require_nonempty(pair.arg1.text, "argument 1");
  require_nonempty(pair.arg2.text, "argument 2");
  return {{"topic", pair.topic}, {"arg1", pair.arg1.text}, {"arg2", pair.arg2.text}};
}

std::string winner_label(Winner w) { return w == Winner::first ? "ARG1" : "ARG2"; }

}  // namespace

PromptBundle render_ranking_prompt(const PromptKit& kit, const ArgumentPair& pair) {
  return kit.get(PromptKind::ranking).render(pair_values(pair));
}

PromptBundle render_persuasion_prompt(const PromptKit& kit, const ArgumentPair& pair) {
  return kit.get(PromptKind::persuasion).render(pair_values(pair));
}

PromptBundle render_judge_prompt(const PromptKit& kit, std::string_view topic, std::string_view arg1,
                                 std::string_view arg2, Winner winner,
                                 std::string_view rationale_first, std::string_view rationale_second) {
  require_nonempty(rationale_first, "rationale [1]");
  require_nonempty(rationale_second, "rationale [2]");
  return kit.get(PromptKind::judge)
      .render({{"topic", std::string(topic)},
               {"arg1", std::string(arg1)},
               {"arg2", std::string(arg2)},
               {"winner", winner_label(winner)},
               {"rationale1", std::string(rationale_first)},
               {"rationale2", std::string(rationale_second)}});
}

PromptBundle render_refine_prompt(const PromptKit& kit, const ArgumentPair& pair, Winner winner,
                                  std::string_view rationale) {
  require_nonempty(rationale, "rationale");
  auto values = pair_values(pair);
  values["winner"] = winner_label(winner);
  values["rationale"] = std::string(rationale);
  return kit.get(PromptKind::refine).render(values);
}

PromptBundle render_content_prompt(const PromptKit& kit, const ArgumentPair& pair, Winner winner,
                                   std::string_view rationale) {
  require_nonempty(rationale, "rationale");
  auto values = pair_values(pair);
  values["winner"] = winner_label(winner);
  values["rationale"] = std::string(rationale);
  return kit.get(PromptKind::content).render(values);
}

// ---------------------------------------------------------------------------
// Parsing

std::string_view to_string(ParseFailureKind kind) {
  switch (kind) {
    case ParseFailureKind::no_json_object: return "no_json_object";
    case ParseFailureKind::malformed_json: return "malformed_json";
    case ParseFailureKind::missing_decision: return "missing_decision";
    case ParseFailureKind::decision_out_of_domain: return "decision_out_of_domain";
    case ParseFailureKind::missing_reasoning: return "missing_reasoning";
    case ParseFailureKind::empty_reasoning: return "empty_reasoning";
    case ParseFailureKind::missing_field: return "missing_field";
    case ParseFailureKind::answer_out_of_domain: return "answer_out_of_domain";
    case ParseFailureKind::refusal: return "refusal";
    case ParseFailureKind::transport: return "transport";
  }
  return "unknown";
}

std::optional<ParseFailureKind> parse_failure_kind_from_string(std::string_view text) {
  for (auto k : {ParseFailureKind::no_json_object, ParseFailureKind::malformed_json,
                 ParseFailureKind::missing_decision, ParseFailureKind::decision_out_of_domain,
                 ParseFailureKind::missing_reasoning, ParseFailureKind::empty_reasoning,
                 ParseFailureKind::missing_field, ParseFailureKind::answer_out_of_domain,
                 ParseFailureKind::refusal, ParseFailureKind::transport})
    if (to_string(k) == text) return k;
  return std::nullopt;
}

std::optional<Winner> normalize_decision_text(std::string_view text) {
  static const std::regex pattern(R"(^(?:argument|arg)?\s*\[?\s*([12])\s*\]?\s*\.?$)", std::regex::icase);
  const std::string t = trim(text);
  std::smatch m;
  if (!std::regex_match(t, m, pattern)) return std::nullopt;
  return m[1].str() == "1" ? Winner::first : Winner::second;
}

namespace {

ParseFailure failure(ParseFailureKind kind, std::string detail, std::string_view raw) {
  return ParseFailure{kind, std::move(detail), std::string(raw)};
}

// Finds a key case-insensitively, ignoring surrounding whitespace and '_' vs ' '.
const json* find_key(const json& obj, std::string_view key) {
  auto canon = [](std::string_view k) {
    std::string out = to_lower(trim(k));
    for (auto& c : out)
      if (c == '_') c = ' ';
    return out;
  };
  const std::string want = canon(key);
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (canon(it.key()) == want) return &it.value();
  return nullptr;
}

// First object carrying `key`, else the first object; or the failure to report.
std::variant<json, ParseFailure> extract_object(std::string_view text, std::string_view key) {
  const auto spans = balanced_object_spans(text);
  if (spans.empty()) return failure(ParseFailureKind::no_json_object, "no JSON object in output", text);
  std::optional<json> first;
  for (auto span : spans) {
    json parsed = json::parse(span, nullptr, false);
    if (parsed.is_discarded() || !parsed.is_object()) continue;
    if (find_key(parsed, key)) return parsed;
    if (!first) first = std::move(parsed);
  }
  if (first) return *first;
  return failure(ParseFailureKind::malformed_json, "no span parses as a JSON object", text);
}

std::optional<Winner> decision_from_json(const json& v) {
  if (v.is_number_integer()) return winner_from_int(v.get<long long>());
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (d == 1.0) return Winner::first;
    if (d == 2.0) return Winner::second;
    return std::nullopt;
  }
  if (v.is_string()) return normalize_decision_text(v.get<std::string>());
  return std::nullopt;
}

std::optional<bool> yes_no(const json& v) {
  if (v.is_boolean()) return v.get<bool>();
  if (!v.is_string()) return std::nullopt;
  const std::string t = to_lower(trim(v.get<std::string>()));
  if (t == "yes" || t == "y" || t == "true") return true;
  if (t == "no" || t == "n" || t == "false") return false;
  return std::nullopt;
}

std::string canonical_sentence(std::string_view text) {
  std::string t = to_lower(trim(text));
  while (!t.empty() && (t.back() == '.' || t.back() == '!' || t.back() == '"')) t.pop_back();
  while (!t.empty() && t.front() == '"') t.erase(t.begin());
  return trim(t);
}

}  // namespace

ParseResult<ParsedRanking> parse_ranking_output(std::string_view text) {
  auto extracted = extract_object(text, "decision");
  if (auto* f = std::get_if<ParseFailure>(&extracted)) return *f;
  const json& obj = std::get<json>(extracted);

  const json* decision = find_key(obj, "decision");
  if (!decision) return failure(ParseFailureKind::missing_decision, "no \"decision\" key", text);
  auto slot = decision_from_json(*decision);
  if (!slot) return failure(ParseFailureKind::decision_out_of_domain, "decision " + decision->dump(), text);

  const json* reasoning = find_key(obj, "reasoning");
  if (!reasoning || !reasoning->is_string())
    return failure(ParseFailureKind::missing_reasoning, "no string \"reasoning\" key", text);
  std::string r = trim(reasoning->get<std::string>());
  if (r.empty()) return failure(ParseFailureKind::empty_reasoning, "reasoning is blank", text);
  return ParsedRanking{*slot, std::move(r), std::string(text)};
}

ParseResult<ParsedJudgeVerdict> parse_judge_output(std::string_view text) {
  auto extracted = extract_object(text, "decision");
  if (auto* f = std::get_if<ParseFailure>(&extracted)) return *f;
  const json& obj = std::get<json>(extracted);

  const json* decision = find_key(obj, "decision");
  if (!decision) return failure(ParseFailureKind::missing_decision, "no \"decision\" key", text);

  std::optional<JudgeChoice> choice;
  if (auto slot = decision_from_json(*decision)) {
    choice = *slot == Winner::first ? JudgeChoice::first : JudgeChoice::second;
  } else if (decision->is_number_integer() && decision->get<long long>() == 0) {
    choice = JudgeChoice::equal;
  } else if (decision->is_string()) {
    static const std::regex rationale_slot(R"(^(?:rationale|r)\s*\[?\s*([12])\s*\]?\s*\.?$)", std::regex::icase);
    const std::string t = to_lower(trim(decision->get<std::string>()));
    std::smatch m;
    if (std::regex_match(t, m, rationale_slot)) {
      choice = m[1].str() == "1" ? JudgeChoice::first : JudgeChoice::second;
    } else if (t == "equal" || t == "equally persuasive" || t == "tie" || t == "both" || t == "same" ||
               t == "equally") {
      choice = JudgeChoice::equal;
    }
  }
  if (!choice) return failure(ParseFailureKind::decision_out_of_domain, "decision " + decision->dump(), text);

  std::string reasoning;
  if (const json* r = find_key(obj, "reasoning"); r && r->is_string()) reasoning = trim(r->get<std::string>());
  return ParsedJudgeVerdict{*choice, std::move(reasoning), std::string(text)};
}

ParseResult<ParsedRefinement> parse_refine_output(std::string_view text) {
  auto extracted = extract_object(text, "convincing");
  if (auto* f = std::get_if<ParseFailure>(&extracted)) return *f;
  const json& obj = std::get<json>(extracted);

  const json* convincing = find_key(obj, "convincing");
  if (!convincing) return failure(ParseFailureKind::missing_field, "no \"convincing\" key", text);
  auto answer = yes_no(*convincing);
  if (!answer) return failure(ParseFailureKind::answer_out_of_domain, "convincing " + convincing->dump(), text);

  const json* improved = find_key(obj, "improved rationale");
  if (!improved) improved = find_key(obj, "improved");
  std::string improved_text = improved && improved->is_string() ? trim(improved->get<std::string>()) : "";

  if (*answer || canonical_sentence(improved_text) == kNoImprovementSentinel)
    return ParsedRefinement{true, std::nullopt, std::string(text)};
  if (improved_text.empty())
    return failure(ParseFailureKind::missing_field, "NO without an improved rationale", text);
  return ParsedRefinement{false, std::move(improved_text), std::string(text)};
}

ParseResult<ParsedContentLabel> parse_content_output(std::string_view text) {
  auto extracted = extract_object(text, "contrast");
  if (auto* f = std::get_if<ParseFailure>(&extracted)) return *f;
  const json& obj = std::get<json>(extracted);

  const json* contrast = find_key(obj, "contrast");
  const json* novelty = find_key(obj, "novelty");
  if (!contrast || !novelty) return failure(ParseFailureKind::missing_field, "need contrast and novelty", text);
  auto c = yes_no(*contrast);
  auto n = yes_no(*novelty);
  if (!c || !n) return failure(ParseFailureKind::answer_out_of_domain, "contrast/novelty must be YES or NO", text);
  return ParsedContentLabel{*c, *n, std::string(text)};
}

}  // namespace argjudge
