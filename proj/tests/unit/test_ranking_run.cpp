#include <gtest/gtest.h>

#include <argjudge/mock_backend.hpp>
#include <argjudge/ranking_run.hpp>

using namespace argjudge;

namespace {

std::vector<ArgumentPair> pairs_fixture(std::size_t n) {
  std::vector<ArgumentPair> out;
  for (std::size_t i = 0; i < n; ++i) {
    ArgumentPair p;
    p.id = "p" + std::to_string(i);
    p.topic = "Topic number " + std::to_string(i);
    p.arg1 = make_argument(p.id + "a", p.topic, Stance::pro,
                           "Libraries give every neighbourhood quiet study space and free internet " + std::to_string(i));
    p.arg2 = make_argument(p.id + "b", p.topic, Stance::pro,
                           "Museums attract tourists whose spending supports local restaurants " + std::to_string(i));
    p.gold_winner = i % 3 == 0 ? Winner::second : Winner::first;
    out.push_back(p);
  }
  return out;
}

struct Fixture {
  Gateway gateway;
  PromptKit kit = PromptKit::load_default();
  std::vector<ArgumentPair> pairs = pairs_fixture(6);

  Fixture() {
    auto book = std::make_shared<GoldBook>();
    for (const auto& p : pairs) book->add(p.topic, p.arg1.text, p.arg2.text, *p.gold_winner);
    gateway.set_gold_book(book);
  }
  ModelSpec mock(const std::string& id, const std::string& persona) {
    return gateway.add_mock(id, parse_mock_spec(persona));
  }
};

}  // namespace

TEST(Decide, ParsedCellCarriesRationale) {
  Fixture f;
  const auto m = f.mock("gold", "decision=gold");
  const auto d = decide(f.gateway, f.kit, m, f.pairs[0]);
  ASSERT_TRUE(d.parsed());
  EXPECT_EQ(d.winner(), Winner::second);
  EXPECT_EQ(d.rationale.id, "p0/gold");
  EXPECT_EQ(d.rationale.supports, Winner::second);
  EXPECT_EQ(d.rationale.provenance, Provenance::base);
  EXPECT_FALSE(d.rationale.text.empty());
  EXPECT_EQ(d.attempts, 1);
}

TEST(Decide, FailuresBecomeFlaggedCells) {
  Fixture f;
  const auto bad = decide(f.gateway, f.kit, f.mock("bad", "style=invalid_json;decision=slot1"), f.pairs[0]);
  EXPECT_FALSE(bad.parsed());
  EXPECT_EQ(std::get<ParseFailure>(bad.decision).kind, ParseFailureKind::no_json_object);
  EXPECT_TRUE(bad.rationale.text.empty());
  EXPECT_TRUE(bad.rationale.has_flag("parse_failure:no_json_object"));
  EXPECT_FALSE(bad.rationale.admitted());
  EXPECT_FALSE(bad.raw_output.empty());

  const auto refused = decide(f.gateway, f.kit, f.mock("shy", "style=refuse;decision=slot1"), f.pairs[0]);
  EXPECT_EQ(std::get<ParseFailure>(refused.decision).kind, ParseFailureKind::refusal);
  EXPECT_TRUE(refused.rationale.has_flag("refusal"));

  GatewayOptions o;
  o.retry.max_attempts = 2;
  o.sleep = [](std::chrono::milliseconds) {};
  Gateway flaky_gw(o);
  const auto flaky = flaky_gw.add_mock("down", parse_mock_spec("decision=slot1;fail=5"));
  const auto down = decide(flaky_gw, f.kit, flaky, f.pairs[0]);
  EXPECT_EQ(std::get<ParseFailure>(down.decision).kind, ParseFailureKind::transport);
}

TEST(Decide, PersuasionFailureIsNonCompliant) {
  Fixture f;
  const auto d = decide(f.gateway, f.kit, f.mock("bad", "style=invalid_json;decision=slot1"), f.pairs[0],
                        PromptKind::persuasion, "bad+prompted");
  EXPECT_EQ(d.model_id, "bad+prompted");
  EXPECT_TRUE(d.rationale.has_flag("non_compliant"));
  EXPECT_EQ(d.rationale.provenance, Provenance::persuasion_prompted);
  EXPECT_THROW(decide(f.gateway, f.kit, f.mock("x", "decision=slot1"), f.pairs[0], PromptKind::judge), ConfigError);
}

TEST(RunMatrix, FullGridInModelMajorOrder) {
  Fixture f;
  const std::vector<ModelSpec> models{f.mock("a", "decision=gold"), f.mock("b", "decision=slot1"),
                                      f.mock("c", "decision=contrarian")};
  RunOptions o;
  o.workers = 3;
  int callbacks = 0;
  o.on_cell = [&callbacks](const ModelDecision&) { ++callbacks; };
  const auto m = run_matrix(f.gateway, f.kit, models, f.pairs, o);
  ASSERT_EQ(m.cells.size(), 18u);
  EXPECT_EQ(callbacks, 18);
  for (std::size_t mi = 0; mi < 3; ++mi)
    for (std::size_t pi = 0; pi < f.pairs.size(); ++pi) {
      EXPECT_EQ(m.at(mi, pi).model_id, m.models[mi]);
      EXPECT_EQ(m.at(mi, pi).pair_id, f.pairs[pi].id);
    }
  EXPECT_EQ(m.find("b", "p3")->winner(), Winner::first);
  EXPECT_EQ(m.rationales().size(), 18u);
}

TEST(RunMatrix, CompletedCellsAreNotRequested) {
  Fixture f;
  const std::vector<ModelSpec> models{f.mock("a", "decision=gold")};
  const auto first = run_matrix(f.gateway, f.kit, models, f.pairs);
  const auto calls = f.gateway.backend_calls();
  RunOptions o;
  o.completed = {first.cells.begin(), first.cells.begin() + 4};
  int fresh = 0;
  o.on_cell = [&fresh](const ModelDecision&) { ++fresh; };
  Gateway other;
  other.set_gold_book(f.gateway.gold_book());
  const std::vector<ModelSpec> again{other.add_mock("a", parse_mock_spec("decision=gold"))};
  const auto second = run_matrix(other, f.kit, again, f.pairs, o);
  EXPECT_EQ(fresh, 2);
  EXPECT_EQ(other.backend_calls(), 2u);
  EXPECT_EQ(calls, 6u);
  for (std::size_t i = 0; i < first.cells.size(); ++i)
    EXPECT_EQ(first.cells[i].rationale.text, second.cells[i].rationale.text);
}

TEST(RunMatrix, InputValidation) {
  Fixture f;
  const std::vector<ModelSpec> none;
  EXPECT_THROW(run_matrix(f.gateway, f.kit, none, f.pairs), InputError);
  const std::vector<ModelSpec> dup{f.mock("a", "decision=gold"), f.mock("a", "decision=gold")};
  EXPECT_THROW(run_matrix(f.gateway, f.kit, dup, f.pairs), InputError);
}

TEST(Filter, KeepsOnlyUnanimousCorrectPairs) {
  Fixture f;
  const std::vector<ModelSpec> models{f.mock("a", "decision=gold"), f.mock("b", "decision=slot1")};
  const auto m = run_matrix(f.gateway, f.kit, models, f.pairs);
  const auto kept = filter_unanimous(m, gold_map(f.pairs));
  std::vector<std::string> ids;
  for (const auto& p : kept) ids.push_back(p.id);
  EXPECT_EQ(ids, (std::vector<std::string>{"p1", "p2", "p4", "p5"}));
  auto gold = gold_map(f.pairs);
  gold.erase("p0");
  EXPECT_THROW(filter_unanimous(m, gold), InputError);
}

TEST(Filter, ParseFailureCountsAsDisagreement) {
  Fixture f;
  const std::vector<ModelSpec> models{f.mock("a", "decision=gold"), f.mock("b", "decision=gold;style=invalid_json")};
  const auto m = run_matrix(f.gateway, f.kit, models, f.pairs);
  EXPECT_TRUE(filter_unanimous(m, gold_map(f.pairs)).empty());
}

TEST(MacroF1, HandComputedCases) {
  const std::vector<Winner> gold{Winner::first, Winner::first, Winner::second, Winner::second};
  const std::vector<std::optional<Winner>> pred{Winner::first, Winner::second, Winner::second, Winner::second};
  EXPECT_NEAR(macro_f1(pred, gold), (2.0 / 3.0 + 4.0 / 5.0) / 2.0, 1e-15);
  const std::vector<std::optional<Winner>> with_failure{Winner::first, std::nullopt, Winner::second, Winner::second};
  EXPECT_NEAR(macro_f1(with_failure, gold), (2.0 / 3.0 + 1.0) / 2.0, 1e-15);
  const std::vector<std::optional<Winner>> perfect{Winner::first, Winner::first, Winner::second, Winner::second};
  EXPECT_DOUBLE_EQ(macro_f1(perfect, gold), 1.0);
  const std::vector<std::optional<Winner>> short_pred{Winner::first};
  EXPECT_THROW(macro_f1(short_pred, gold), InputError);
}

TEST(MacroF1, PerModel) {
  Fixture f;
  const std::vector<ModelSpec> models{f.mock("a", "decision=gold"), f.mock("c", "decision=contrarian")};
  const auto m = run_matrix(f.gateway, f.kit, models, f.pairs);
  const auto f1 = ranking_f1(m, gold_map(f.pairs));
  EXPECT_DOUBLE_EQ(f1.at("a"), 1.0);
  EXPECT_DOUBLE_EQ(f1.at("c"), 0.0);
}

TEST(LlmContentLabeler, ParsesJudgeAnswerAndDefaultsToFalse) {
  Fixture f;
  const auto judge = f.mock("judge", "judge=content");
  const auto labeler = llm_content_labeler(f.gateway, f.kit, judge);
  const auto& p = f.pairs[1];
  auto r = make_rationale(rationale_id(p.id, "m"), p.id, "m",
                          "Argument 1 offers study space, whereas argument 2 only mentions tourists and restaurants.",
                          Provenance::base, Winner::first);
  EXPECT_TRUE(labeler(r, p).contrast);

  MockScript broken;
  broken.persona = false;
  broken.default_response = "I cannot tell.";
  const auto bad_judge = f.gateway.add_mock("bad-judge", broken);
  EXPECT_EQ(llm_content_labeler(f.gateway, f.kit, bad_judge)(r, p), (ContentLabels{false, false}));
}
