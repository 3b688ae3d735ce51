#include <gtest/gtest.h>

#include <random>

#include <argjudge/mock_backend.hpp>
#include <argjudge/tournament.hpp>

#include "support/oracles.hpp"

using namespace argjudge;

namespace {

ArgumentPair pair_fixture(const std::string& id = "p1") {
  ArgumentPair p;
  p.id = id;
  p.topic = "We should plant more street trees";
  p.arg1 = make_argument(id + "a", "t", Stance::pro, "Trees cool streets during heatwaves and shade pedestrians");
  p.arg2 = make_argument(id + "b", "t", Stance::pro, "Trees look nice");
  p.gold_winner = Winner::first;
  return p;
}

Rationale labeled(const std::string& pair_id, const std::string& who, const std::string& text, bool admitted = true,
                  Winner supports = Winner::first) {
  auto r = make_rationale(rationale_id(pair_id, who), pair_id, who, text, Provenance::base, supports);
  r.basic_form = BasicForm{admitted, false};
  r.content = ContentLabels{};
  return r;
}

class Refuser final : public Backend {
 public:
  std::string send(const ModelSpec&, const PromptBundle&) override { throw RefusalError("declined"); }
};

ComparisonOutcome outcome(const std::string& pair, const std::string& a, const std::string& b, Outcome o) {
  ComparisonOutcome out;
  out.comparison = Comparison{pair, a, b, rationale_id(pair, a), rationale_id(pair, b)};
  out.outcome = o;
  return out;
}

}  // namespace

TEST(Plan, EveryUnorderedPairOncePerArgumentPair) {
  std::vector<ArgumentPair> pairs{pair_fixture("p1"), pair_fixture("p2"), pair_fixture("p3")};
  for (std::size_t m : {2u, 3u, 5u, 9u}) {
    std::vector<std::string> who;
    for (std::size_t i = 0; i < m; ++i) who.push_back("m" + std::to_string(i));
    const auto plan = plan_comparisons(pairs, who);
    EXPECT_EQ(plan.size(), pairs.size() * m * (m - 1) / 2);
    std::set<std::string> ids;
    for (const auto& c : plan) {
      ids.insert(c.id());
      EXPECT_EQ(c.rationale_a, rationale_id(c.pair_id, c.participant_a));
      EXPECT_LT(std::find(who.begin(), who.end(), c.participant_a), std::find(who.begin(), who.end(), c.participant_b));
    }
    EXPECT_EQ(ids.size(), plan.size());
  }
  EXPECT_EQ(plan_comparisons(pairs, std::vector<std::string>{"solo"}).size(), 0u);
}

TEST(JudgeSymmetric, ConsistentPreferenceDecides) {
  Gateway gw;
  const auto kit = PromptKit::load_default();
  const auto pair = pair_fixture();
  const auto judge = gw.add_mock("judge", parse_mock_spec("judge=prefer_longer"));
  const auto a = labeled("p1", "a", "Argument 1 is better because trees cool streets during heatwaves and help people");
  const auto b = labeled("p1", "b", "Argument 1 is better overall.");
  const auto ab = judge_pair_symmetric(gw, kit, judge, pair, a, b);
  EXPECT_EQ(ab.outcome, Outcome::a_wins);
  EXPECT_EQ(ab.source, OutcomeSource::judge);
  EXPECT_EQ(ab.verdicts.size(), 2u);
  EXPECT_TRUE(ab.flags.empty());
  EXPECT_EQ(judge_pair_symmetric(gw, kit, judge, pair, b, a).outcome, Outcome::b_wins);
}

TEST(JudgeSymmetric, PositionBiasEqualAndInvalidGiveTies) {
  Gateway gw;
  const auto kit = PromptKit::load_default();
  const auto pair = pair_fixture();
  const auto a = labeled("p1", "a", "Argument 1 is better because trees cool streets during heatwaves");
  const auto b = labeled("p1", "b", "Argument 1 is better since shade matters for pedestrians");

  const auto biased = judge_pair_symmetric(gw, kit, gw.add_mock("j1", parse_mock_spec("judge=slot1")), pair, a, b);
  EXPECT_EQ(biased.outcome, Outcome::tie);
  EXPECT_EQ(biased.flags, std::vector<std::string>{"position_conflict"});

  const auto equal = judge_pair_symmetric(gw, kit, gw.add_mock("j2", parse_mock_spec("judge=equal")), pair, a, b);
  EXPECT_EQ(equal.outcome, Outcome::tie);
  EXPECT_TRUE(equal.flags.empty());

  const auto bad = judge_pair_symmetric(gw, kit, gw.add_mock("j3", parse_mock_spec("judge=invalid")), pair, a, b);
  EXPECT_EQ(bad.outcome, Outcome::tie);
  EXPECT_EQ(std::count(bad.flags.begin(), bad.flags.end(), "unparsable_verdict"), 2);
  EXPECT_TRUE(bad.resolved);

  gw.register_backend("j4", std::make_shared<Refuser>());
  const auto refused = judge_pair_symmetric(gw, kit, ModelSpec{"j4", "mock:j4"}, pair, a, b);
  EXPECT_EQ(refused.outcome, Outcome::tie);
  EXPECT_TRUE(refused.resolved);
  EXPECT_NE(std::find(refused.flags.begin(), refused.flags.end(), "refusal"), refused.flags.end());
}

TEST(JudgeSymmetric, TransportFailureIsUnresolved) {
  GatewayOptions o;
  o.retry.max_attempts = 2;
  o.sleep = [](std::chrono::milliseconds) {};
  Gateway gw(o);
  const auto kit = PromptKit::load_default();
  const auto judge = gw.add_mock("judge", parse_mock_spec("judge=slot1;fail=9"));
  const auto out = judge_pair_symmetric(gw, kit, judge, pair_fixture(), labeled("p1", "a", "Argument 1 wins here"),
                                        labeled("p1", "b", "Argument 1 wins there"));
  EXPECT_FALSE(out.resolved);
  EXPECT_EQ(out.flags, std::vector<std::string>{"transport"});
}

TEST(JudgeSymmetric, RejectsIneligibleInputs) {
  Gateway gw;
  const auto kit = PromptKit::load_default();
  const auto judge = gw.add_mock("judge", parse_mock_spec("judge=equal"));
  const auto pair = pair_fixture();
  const auto ok = labeled("p1", "a", "Argument 1 is better because of shade");
  EXPECT_THROW(judge_pair_symmetric(gw, kit, judge, pair, ok, labeled("p1", "b", "x", false)), InputError);
  EXPECT_THROW(judge_pair_symmetric(gw, kit, judge, pair, ok, labeled("p1", "b", "Argument 2 is fine", true,
                                                                      Winner::second)),
               InputError);
  EXPECT_THROW(judge_pair_symmetric(gw, kit, judge, pair, ok, labeled("p9", "b", "Argument 1 wins")), InputError);
}

TEST(DefaultRule, AdmittedBeatsFailedAndTwoFailuresTie) {
  const Comparison c{"p1", "a", "b", "p1/a", "p1/b"};
  const auto good = labeled("p1", "a", "fine");
  const auto bad = labeled("p1", "b", "bad", false);
  EXPECT_FALSE(default_rule_outcome(c, good, good).has_value());
  EXPECT_EQ(default_rule_outcome(c, good, bad)->outcome, Outcome::a_wins);
  EXPECT_EQ(default_rule_outcome(c, bad, good)->outcome, Outcome::b_wins);
  const auto both = default_rule_outcome(c, bad, bad);
  EXPECT_EQ(both->outcome, Outcome::tie);
  EXPECT_EQ(both->source, OutcomeSource::default_rule);
  Rationale unlabeled = good;
  unlabeled.basic_form.reset();
  EXPECT_EQ(default_rule_outcome(c, good, unlabeled)->outcome, Outcome::a_wins);
}

TEST(RunTournament, CoverageResumeAndDefaultRule) {
  Gateway gw;
  const auto kit = PromptKit::load_default();
  const auto judge = gw.add_mock("judge", parse_mock_spec("judge=prefer_longer"));
  const std::vector<ArgumentPair> pairs{pair_fixture("p1"), pair_fixture("p2")};
  const std::vector<std::string> who{"a", "b", "c"};
  std::vector<Rationale> rs;
  for (const auto& p : pairs) {
    rs.push_back(labeled(p.id, "a", "Argument 1 is better because trees cool streets during heatwaves"));
    rs.push_back(labeled(p.id, "b", "Argument 1 is better."));
    rs.push_back(labeled(p.id, "c", "", false));
  }
  const auto out = run_tournament(gw, kit, judge, pairs, who, rs);
  ASSERT_EQ(out.size(), 6u);
  EXPECT_EQ(out[0].outcome, Outcome::a_wins);
  EXPECT_EQ(out[0].source, OutcomeSource::judge);
  EXPECT_EQ(out[1].source, OutcomeSource::default_rule);
  EXPECT_EQ(out[1].outcome, Outcome::a_wins);

  const auto calls = gw.backend_calls();
  TournamentOptions o;
  o.completed = out;
  int fresh = 0;
  o.on_outcome = [&fresh](const ComparisonOutcome&) { ++fresh; };
  const auto again = run_tournament(gw, kit, judge, pairs, who, rs, o);
  EXPECT_EQ(fresh, 0);
  EXPECT_EQ(gw.backend_calls(), calls);
  EXPECT_EQ(again.size(), out.size());

  auto missing = rs;
  missing.pop_back();
  missing[0].basic_form.reset();
  try {
    run_tournament(gw, kit, judge, pairs, who, missing);
    FAIL() << "expected CoverageError";
  } catch (const CoverageError& e) {
    EXPECT_EQ(e.gaps(), (std::vector<std::string>{"p1/a (unlabeled)", "p2/c"}));
  }
}

TEST(Scoring, SmallBoardByHand) {
  const std::vector<std::string> who{"a", "b", "c"};
  const std::vector<ComparisonOutcome> outs{outcome("p", "a", "b", Outcome::a_wins),
                                            outcome("p", "a", "c", Outcome::tie),
                                            outcome("p", "b", "c", Outcome::b_wins)};
  const auto board = score_round_robin(outs, who);
  // b_wins on (b, c) credits c.
  EXPECT_EQ(board.half_points.at("a"), 3);
  EXPECT_DOUBLE_EQ(board.s.at("b"), 0.0);
  EXPECT_DOUBLE_EQ(board.s.at("c"), 1.5);
  EXPECT_DOUBLE_EQ(board.ranks.at("a"), 2.5);
  EXPECT_DOUBLE_EQ(board.ranks.at("b"), 1.0);
  EXPECT_DOUBLE_EQ(board.ranks.at("c"), 2.5);
}

TEST(Scoring, RandomBoardsMatchOracle) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = 2 + rng() % 8;
    std::vector<std::string> who;
    for (std::size_t i = 0; i < m; ++i) who.push_back("m" + std::to_string(i));
    std::vector<ComparisonOutcome> outs;
    std::vector<std::tuple<std::string, std::string, int>> ref;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = i + 1; j < m; ++j) {
        const int r = static_cast<int>(rng() % 3) - 1;
        outs.push_back(outcome("p", who[i], who[j], r > 0 ? Outcome::a_wins : r < 0 ? Outcome::b_wins : Outcome::tie));
        ref.emplace_back(who[i], who[j], r);
      }
    std::shuffle(outs.begin(), outs.end(), rng);
    const auto board = score_round_robin(outs, who);
    const auto expected = oracle::round_robin_scores(who, ref);
    std::map<std::string, double> s;
    double total = 0, rank_total = 0;
    for (const auto& p : who) {
      EXPECT_EQ(board.half_points.at(p), 2 * expected.at(p).numerator() / expected.at(p).denominator());
      s[p] = boost::rational_cast<double>(expected.at(p));
      total += board.s.at(p);
      rank_total += board.ranks.at(p);
    }
    EXPECT_DOUBLE_EQ(total, static_cast<double>(m * (m - 1)) / 2.0);
    EXPECT_DOUBLE_EQ(rank_total, static_cast<double>(m * (m + 1)) / 2.0);
    const auto ranks = oracle::fractional_ranks(s);
    for (const auto& p : who) EXPECT_DOUBLE_EQ(board.ranks.at(p), ranks.at(p));
  }
}

TEST(Scoring, CoverageErrors) {
  const std::vector<std::string> who{"a", "b", "c"};
  std::vector<ComparisonOutcome> outs{outcome("p", "a", "b", Outcome::a_wins), outcome("p", "a", "c", Outcome::tie)};
  EXPECT_THROW(score_round_robin(outs, who), CoverageError);
  outs.push_back(outcome("p", "c", "b", Outcome::tie));
  EXPECT_NO_THROW(score_round_robin(outs, who));
  auto dup = outs;
  dup.push_back(outcome("p", "b", "a", Outcome::tie));
  EXPECT_THROW(score_round_robin(dup, who), CoverageError);
  auto foreign = outs;
  foreign.push_back(outcome("q", "a", "b", Outcome::tie));
  EXPECT_THROW(score_round_robin(foreign, who), CoverageError);
  auto stranger = outs;
  stranger.push_back(outcome("p", "a", "z", Outcome::tie));
  EXPECT_THROW(score_round_robin(stranger, who), CoverageError);
  auto open = outs;
  open[0].resolved = false;
  try {
    score_round_robin(open, who);
    FAIL();
  } catch (const CoverageError& e) {
    EXPECT_EQ(e.gaps().front(), "unresolved p/a|b");
  }
  EXPECT_THROW(score_round_robin(outs, std::vector<std::string>{"a"}), InputError);
}

TEST(Scoring, TournamentExcludesUnresolvedPairs) {
  const std::vector<std::string> who{"a", "b"};
  std::vector<ComparisonOutcome> outs{outcome("p2", "a", "b", Outcome::b_wins), outcome("p1", "a", "b", Outcome::tie)};
  outs.push_back(outcome("p3", "a", "b", Outcome::tie));
  outs.back().resolved = false;
  const auto t = score_tournament(outs, who);
  ASSERT_EQ(t.scoreboards.size(), 2u);
  EXPECT_EQ(t.scoreboards[0].pair_id, "p2");
  EXPECT_EQ(t.excluded_pairs, std::vector<std::string>{"p3"});
}

TEST(Ranks, TiesShareMeanPosition) {
  const std::map<std::string, double> s{{"a", 2}, {"b", 1}, {"c", 1}, {"d", 0}, {"e", 2}};
  const auto r = ranks_from_scores(s);
  EXPECT_DOUBLE_EQ(r.at("d"), 1.0);
  EXPECT_DOUBLE_EQ(r.at("b"), 2.5);
  EXPECT_DOUBLE_EQ(r.at("a"), 4.5);
  EXPECT_EQ(r, oracle::fractional_ranks(s));
}

TEST(HumanOutcome, MajorityRules) {
  const Comparison c{"p", "a", "b", "p/a", "p/b"};
  auto votes = [](std::initializer_list<PersuasionAnswer> answers) {
    std::vector<PersuasionVote> v;
    int i = 0;
    for (auto a : answers) v.push_back({"r" + std::to_string(++i), a, "because"});
    return v;
  };
  using A = PersuasionAnswer;
  EXPECT_EQ(human_outcome_from_votes(c, votes({A::more, A::more, A::less})).outcome, Outcome::a_wins);
  EXPECT_EQ(human_outcome_from_votes(c, votes({A::less, A::equal, A::less})).outcome, Outcome::b_wins);
  EXPECT_EQ(human_outcome_from_votes(c, votes({A::equal, A::equal, A::more})).outcome, Outcome::tie);
  const auto split = human_outcome_from_votes(c, votes({A::more, A::less, A::equal}));
  EXPECT_EQ(split.outcome, Outcome::tie);
  EXPECT_EQ(split.flags, std::vector<std::string>{"split_vote"});
  EXPECT_EQ(split.source, OutcomeSource::human);
  EXPECT_EQ(split.votes.size(), 3u);
  EXPECT_FALSE(human_outcome_from_votes(c, votes({A::more, A::more})).resolved);
  EXPECT_EQ(persuasion_answer_from_string(" More "), A::more);
  EXPECT_FALSE(persuasion_answer_from_string("maybe"));
}

TEST(HumanSample, FractionAndEligibility) {
  // 30 argument pairs x 9 participants give 1080 comparisons; a third is sampled.
  std::vector<ArgumentPair> pairs;
  for (int i = 0; i < 30; ++i) pairs.push_back(pair_fixture("p" + std::to_string(i)));
  std::vector<std::string> who;
  for (int i = 0; i < 9; ++i) who.push_back("m" + std::to_string(i));
  const auto all = plan_comparisons(pairs, who);
  ASSERT_EQ(all.size(), 1080u);

  std::map<std::string, Rationale> rs;
  std::mt19937_64 rng(3);
  for (const auto& p : pairs)
    for (const auto& m : who) {
      auto r = labeled(p.id, m, "text", rng() % 5 != 0);
      rs[r.id] = r;
    }
  const auto s = sample_for_human(all, rs, 1.0 / 3.0, 42);
  EXPECT_EQ(s.sampled.size(), 360u);
  std::size_t expected = 0;
  std::set<std::string> ids;
  for (const auto& c : s.sampled) {
    ids.insert(c.id());
    expected += rs.at(c.rationale_a).admitted() && rs.at(c.rationale_b).admitted();
  }
  EXPECT_EQ(ids.size(), 360u);
  EXPECT_EQ(s.eligible.size(), expected);
  EXPECT_LT(s.eligible.size(), s.sampled.size());
  const auto again = sample_for_human(all, rs, 1.0 / 3.0, 42);
  ASSERT_EQ(again.sampled.size(), s.sampled.size());
  for (std::size_t i = 0; i < s.sampled.size(); ++i) EXPECT_EQ(again.sampled[i].id(), s.sampled[i].id());
  EXPECT_THROW(sample_for_human(all, rs, 1.5, 1), InputError);
  EXPECT_EQ(sample_for_human(all, rs, 0.0, 1).sampled.size(), 0u);
}
