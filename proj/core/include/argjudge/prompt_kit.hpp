#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "argjudge/common.hpp"
#include "argjudge/corpus.hpp"

namespace argjudge {

enum class PromptKind { ranking, persuasion, judge, refine, content };

std::string_view to_string(PromptKind kind);

struct FormattingExample {
  std::string input;
  std::string output;
};

/// A fully rendered prompt. `payload` is valid JSON text.
struct PromptBundle {
  PromptKind kind = PromptKind::ranking;
  std::string system_message;
  std::string task_description;
  std::vector<FormattingExample> formatting_examples;
  std::string payload;
  std::string closing;

  /// The user-turn text sent to chat models.
  std::string user_text() const;
  /// Content hash over system message and user text.
  std::string hash() const;
};

/// One template file: named sections plus the ordered formatting examples.
class PromptTemplate {
 public:
  static PromptTemplate parse(std::string_view text, PromptKind kind, const std::string& origin);
  static PromptTemplate load(const std::string& path, PromptKind kind);

  PromptKind kind() const { return kind_; }
  const std::string& section(const std::string& name) const;
  bool has_section(const std::string& name) const { return sections_.count(name) != 0; }
  const std::vector<FormattingExample>& examples() const { return examples_; }

  /// Substitutes {name} placeholders: raw text everywhere except [payload], where the
  /// values are emitted as JSON string literals.
  PromptBundle render(const std::map<std::string, std::string>& values) const;

 private:
  PromptKind kind_ = PromptKind::ranking;
  std::string origin_;
  std::map<std::string, std::string> sections_;
  std::vector<FormattingExample> examples_;
};

/// The set of templates used by a run.
class PromptKit {
 public:
  /// Loads ranking.txt, persuasion.txt, judge.txt, refine.txt and content.txt from
  /// `dir`, validating each. Throws ConfigError on a missing or inconsistent file.
  static PromptKit load(const std::string& dir);
  /// Uses $ARGJUDGE_TEMPLATE_DIR, else the templates shipped with the library.
  static PromptKit load_default();
  static std::string default_directory();

  const PromptTemplate& get(PromptKind kind) const;

 private:
  std::map<PromptKind, PromptTemplate> templates_;
};

PromptBundle render_ranking_prompt(const PromptKit& kit, const ArgumentPair& pair);
PromptBundle render_persuasion_prompt(const PromptKit& kit, const ArgumentPair& pair);
PromptBundle render_judge_prompt(const PromptKit& kit, std::string_view topic, std::string_view arg1,
                                 std::string_view arg2, Winner winner,
                                 std::string_view rationale_first, std::string_view rationale_second);
PromptBundle render_refine_prompt(const PromptKit& kit, const ArgumentPair& pair, Winner winner,
                                  std::string_view rationale);
PromptBundle render_content_prompt(const PromptKit& kit, const ArgumentPair& pair, Winner winner,
                                   std::string_view rationale);

// ---------------------------------------------------------------------------
// Output parsing. Every parser is total: it returns either a record or a
// ParseFailure and never throws on content.

enum class ParseFailureKind {
  no_json_object,          // no balanced {...} in the text
  malformed_json,          // braces found, none parse as a JSON object
  missing_decision,        // object lacks the decision key
  decision_out_of_domain,  // decision present but not normalizable
  missing_reasoning,       // reasoning key absent or not a string
  empty_reasoning,         // reasoning blank after trimming
  missing_field,           // other required key absent (refine/content outputs)
  answer_out_of_domain,    // YES/NO style answer not recognized
  refusal,                 // provider refused (set by callers, never by parsers)
  transport,               // provider unreachable (set by callers, never by parsers)
};

std::string_view to_string(ParseFailureKind kind);
std::optional<ParseFailureKind> parse_failure_kind_from_string(std::string_view text);

struct ParseFailure {
  ParseFailureKind kind = ParseFailureKind::no_json_object;
  std::string detail;
  std::string raw;
};

template <class T>
using ParseResult = std::variant<T, ParseFailure>;

struct ParsedRanking {
  Winner decision = Winner::first;
  std::string reasoning;
  std::string raw;
};

ParseResult<ParsedRanking> parse_ranking_output(std::string_view text);

enum class JudgeChoice { first, second, equal };

struct ParsedJudgeVerdict {
  JudgeChoice choice = JudgeChoice::equal;
  std::string reasoning;
  std::string raw;
};

ParseResult<ParsedJudgeVerdict> parse_judge_output(std::string_view text);

struct ParsedRefinement {
  bool convincing = true;
  std::optional<std::string> improved;
  std::string raw;
};

inline constexpr std::string_view kNoImprovementSentinel = "no further improvement needed";

ParseResult<ParsedRefinement> parse_refine_output(std::string_view text);

struct ParsedContentLabel {
  bool contrast = false;
  bool novelty = false;
  std::string raw;
};

ParseResult<ParsedContentLabel> parse_content_output(std::string_view text);

/// Maps 1, "1", "argument 1", "[1]", "Argument [2]" (case-insensitive) onto a slot.
std::optional<Winner> normalize_decision_text(std::string_view text);

/// Top-level balanced {...} spans in order of appearance, string-literal aware.
std::vector<std::string_view> balanced_object_spans(std::string_view text);

}  // namespace argjudge
