#include <gtest/gtest.h>

#include <argjudge/serialization.hpp>

using namespace argjudge;
using nlohmann::json;

namespace {

ArgumentPair pair_fixture() {
  ArgumentPair p;
  p.id = "pairwise:p1";
  p.topic = "Cities should ban cars";
  p.arg1 = make_argument("a1", "t1", Stance::con, "Cars carry \"goods\" and people,\nreliably.", 0.8);
  p.arg2 = make_argument("a2", "t1", Stance::con, "Cars are useful");
  p.gold_winner = Winner::second;
  p.quality_delta = 0.35;
  return p;
}

Rationale rationale_fixture() {
  auto r = make_rationale("p1/m", "p1", "m", "Argument 2 is better; ünïcode ok.", Provenance::refined, Winner::second);
  r.basic_form = BasicForm{true, false};
  r.content = ContentLabels{true, false};
  r.changed = true;
  r.flags = {"kept_as_is", "x"};
  return r;
}

}  // namespace

TEST(Serialization, ArgumentAndPairRoundTrip) {
  const auto p = pair_fixture();
  const auto back = pair_from_json(json::parse(to_json(p).dump()));
  EXPECT_EQ(back.id, p.id);
  EXPECT_EQ(back.topic, p.topic);
  EXPECT_EQ(back.arg1.text, p.arg1.text);
  EXPECT_EQ(back.arg1.stance, Stance::con);
  EXPECT_EQ(back.arg1.word_count, p.arg1.word_count);
  EXPECT_EQ(back.arg1.quality_score, 0.8);
  EXPECT_FALSE(back.arg2.quality_score.has_value());
  EXPECT_EQ(back.gold_winner, Winner::second);
  EXPECT_EQ(back.quality_delta, 0.35);

  auto bare = p;
  bare.gold_winner.reset();
  bare.quality_delta.reset();
  const auto b2 = pair_from_json(to_json(bare));
  EXPECT_FALSE(b2.gold_winner.has_value());
  EXPECT_FALSE(b2.quality_delta.has_value());
}

TEST(Serialization, RationaleRoundTrip) {
  const auto r = rationale_fixture();
  const auto back = rationale_from_json(json::parse(to_json(r).dump()));
  EXPECT_EQ(back.id, r.id);
  EXPECT_EQ(back.text, r.text);
  EXPECT_EQ(back.word_length, r.word_length);
  EXPECT_EQ(back.provenance, Provenance::refined);
  EXPECT_EQ(back.supports, Winner::second);
  EXPECT_EQ(back.basic_form, r.basic_form);
  EXPECT_EQ(back.content, r.content);
  EXPECT_TRUE(back.changed);
  EXPECT_EQ(back.flags, r.flags);

  auto unlabeled = make_rationale("p/x", "p", "x", "", Provenance::base, std::nullopt);
  const auto u = rationale_from_json(to_json(unlabeled));
  EXPECT_FALSE(u.basic_form.has_value());
  EXPECT_FALSE(u.content.has_value());
  EXPECT_FALSE(u.supports.has_value());
}

TEST(Serialization, DecisionRoundTripIncludingFailures) {
  ModelDecision ok;
  ok.model_id = "m";
  ok.pair_id = "p1";
  ok.decision = Winner::first;
  ok.rationale = rationale_fixture();
  ok.raw_output = R"({"decision": 1})";
  ok.attempts = 2;
  ok.from_cache = true;
  const auto j = to_json(ok);
  EXPECT_EQ(j["id"], "p1/m");
  const auto back = decision_from_json(json::parse(j.dump()));
  EXPECT_EQ(back.winner(), Winner::first);
  EXPECT_EQ(back.attempts, 2);
  EXPECT_TRUE(back.from_cache);
  EXPECT_EQ(back.raw_output, ok.raw_output);

  ModelDecision bad = ok;
  bad.decision = ParseFailure{ParseFailureKind::empty_reasoning, "blank", ""};
  const auto fb = decision_from_json(to_json(bad));
  ASSERT_FALSE(fb.parsed());
  EXPECT_EQ(std::get<ParseFailure>(fb.decision).kind, ParseFailureKind::empty_reasoning);
  EXPECT_EQ(std::get<ParseFailure>(fb.decision).detail, "blank");

  auto broken = to_json(bad);
  broken["failure"]["kind"] = "nonsense";
  EXPECT_THROW(decision_from_json(broken), StoreError);
}

TEST(Serialization, OutcomeRoundTrip) {
  ComparisonOutcome o;
  o.comparison = Comparison{"p1", "a", "b", "p1/a", "p1/b"};
  o.outcome = Outcome::b_wins;
  o.source = OutcomeSource::human;
  o.resolved = false;
  o.verdicts = {"x", "y"};
  o.flags = {"split_vote"};
  o.votes = {{"r1", PersuasionAnswer::less, "clearer"}, {"r2", PersuasionAnswer::equal, "same"}};
  const auto j = to_json(o);
  EXPECT_EQ(j["id"], "p1/a|b");
  const auto back = outcome_from_json(json::parse(j.dump()));
  EXPECT_EQ(back.comparison.id(), o.comparison.id());
  EXPECT_EQ(back.comparison.rationale_b, "p1/b");
  EXPECT_EQ(back.outcome, Outcome::b_wins);
  EXPECT_EQ(back.source, OutcomeSource::human);
  EXPECT_FALSE(back.resolved);
  EXPECT_EQ(back.verdicts, o.verdicts);
  EXPECT_EQ(back.flags, o.flags);
  ASSERT_EQ(back.votes.size(), 2u);
  EXPECT_EQ(back.votes[0].answer, PersuasionAnswer::less);
  EXPECT_EQ(back.votes[1].explanation, "same");

  auto broken = j;
  broken["outcome"] = "draw";
  EXPECT_THROW(outcome_from_json(broken), StoreError);
}

TEST(Serialization, ScoreboardRoundTrip) {
  Scoreboard b;
  b.pair_id = "p1";
  b.participants = {"b", "a"};
  b.half_points = {{"a", 1}, {"b", 1}};
  b.s = {{"a", 0.5}, {"b", 0.5}};
  b.ranks = {{"a", 1.5}, {"b", 1.5}};
  const auto back = scoreboard_from_json(json::parse(to_json(b).dump()));
  EXPECT_EQ(back.participants, b.participants);
  EXPECT_EQ(back.half_points, b.half_points);
  EXPECT_EQ(back.ranks, b.ranks);
}

TEST(Serialization, MissingOrMistypedFieldsThrow) {
  auto j = to_json(rationale_fixture());
  j.erase("pair_id");
  EXPECT_THROW(rationale_from_json(j), StoreError);
  auto k = to_json(pair_fixture());
  k["arg1"]["text"] = 42;
  EXPECT_THROW(pair_from_json(k), StoreError);
  EXPECT_THROW(scoreboard_from_json(json::object()), StoreError);
}

TEST(Serialization, FeatureRowUsesRationaleId) {
  FeatureRow r{"p1/m", 12, 1, 0, 3.5};
  const auto j = to_json(r);
  EXPECT_EQ(j["id"], "p1/m");
  EXPECT_EQ(j["target"], 3.5);
}
