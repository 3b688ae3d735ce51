#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "argjudge/model_gateway.hpp"

namespace argjudge {

// Ranking / persuasion prompts
enum class DecisionPolicy { gold, slot1, slot2, contrarian };
enum class RationaleStyle { plain, contrastive, bare_verdict, repetitive, invalid_json, empty_reasoning, refuse };
// Judge prompts
enum class JudgePolicy { slot1, slot2, equal, prefer_contrast, prefer_longer, content, invalid };
// Evaluate-and-refine prompts
enum class RefinePolicy { yes, no, sentinel_no, invalid };

/// Canned response selected by substring match on the flattened prompt.
struct MockRule {
  std::string contains;
  std::string response;
  std::optional<PromptKind> kind;
};

/// Behavior of a scripted model. Rules are consulted first; the persona answers
/// everything else unless disabled, in which case `default_response` (or a
/// MockGapError) applies.
struct MockScript {
  bool persona = true;
  DecisionPolicy decision = DecisionPolicy::gold;
  RationaleStyle style = RationaleStyle::plain;
  JudgePolicy judge = JudgePolicy::prefer_contrast;
  RefinePolicy refine = RefinePolicy::yes;
  /// Under a persuasion prompt, answer with two supporting and two refuting sentences.
  bool follows_persuasion = true;
  /// Extra filler sentences appended to rationales (varies rationale length).
  int extra_sentences = 0;
  /// Each distinct prompt fails this many times with TransportError before succeeding.
  int transient_failures = 0;
  std::vector<MockRule> rules;
  std::optional<std::string> default_response;
};

/// Parses "key=value;key=value" persona specs, e.g.
/// "decision=gold;style=contrastive;judge=prefer_contrast;extra=2".
MockScript parse_mock_spec(std::string_view spec);
/// Parses a JSON script file: the persona keys above plus "rules" and "default".
MockScript parse_mock_script_json(std::string_view json_text);

class MockBackend final : public Backend {
 public:
  using GoldSource = std::function<std::shared_ptr<const GoldBook>()>;

  MockBackend(MockScript script, GoldSource gold);
  std::string send(const ModelSpec& spec, const PromptBundle& prompt) override;

  const MockScript& script() const { return script_; }

 private:
  std::string persona_answer(const ModelSpec& spec, const PromptBundle& prompt) const;

  MockScript script_;
  GoldSource gold_;
  std::mutex mu_;
  std::map<std::string, int> failures_seen_;
};

}  // namespace argjudge
