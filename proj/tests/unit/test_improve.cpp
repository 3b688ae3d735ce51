#include <gtest/gtest.h>

#include <argjudge/improve.hpp>
#include <argjudge/mock_backend.hpp>

using namespace argjudge;

namespace {

ArgumentPair pair_fixture(const std::string& id = "p1") {
  ArgumentPair p;
  p.id = id;
  p.topic = "We should extend library opening hours";
  p.arg1 = make_argument(id + "a", "t", Stance::pro, "Evening hours let shift workers borrow books and study quietly");
  p.arg2 = make_argument(id + "b", "t", Stance::pro, "Libraries are good");
  p.gold_winner = Winner::first;
  return p;
}

Rationale base_for(const ArgumentPair& p, const std::string& model) {
  return make_rationale(rationale_id(p.id, model), p.id, model,
                        "Argument 1 is more convincing because it names who benefits from longer hours.",
                        Provenance::base, Winner::first);
}

struct Env {
  Gateway gw;
  PromptKit kit = PromptKit::load_default();
  Env() {
    auto book = std::make_shared<GoldBook>();
    for (const auto& p : {pair_fixture("p1"), pair_fixture("p2")})
      book->add(p.topic, p.arg1.text, p.arg2.text, Winner::first);
    gw.set_gold_book(book);
  }
};

}  // namespace

TEST(Improve, ParticipantIds) {
  EXPECT_EQ(prompted_id("m"), "m+prompted");
  EXPECT_EQ(refined_id("m"), "m+refined");
}

TEST(Improve, ConvincingRationaleIsKept) {
  Env e;
  const auto model = e.gw.add_mock("m", parse_mock_spec("refine=yes"));
  const auto p = pair_fixture();
  const auto base = base_for(p, "m");
  const auto r = evaluate_and_refine(e.gw, e.kit, model, p, base);
  EXPECT_EQ(r.id, "p1/m+refined");
  EXPECT_EQ(r.model_id, "m+refined");
  EXPECT_EQ(r.provenance, Provenance::refined);
  EXPECT_EQ(r.text, base.text);
  EXPECT_FALSE(r.changed);
  EXPECT_TRUE(r.has_flag("kept_as_is"));
  EXPECT_FALSE(r.basic_form.has_value());
  EXPECT_FALSE(r.content.has_value());

  const auto sentinel = e.gw.add_mock("s", parse_mock_spec("refine=sentinel_no"));
  EXPECT_TRUE(evaluate_and_refine(e.gw, e.kit, sentinel, p, base_for(p, "s")).has_flag("kept_as_is"));
}

TEST(Improve, RewriteReplacesText) {
  Env e;
  const auto model = e.gw.add_mock("m", parse_mock_spec("refine=no"));
  const auto p = pair_fixture();
  const auto base = base_for(p, "m");
  const auto r = evaluate_and_refine(e.gw, e.kit, model, p, base);
  EXPECT_TRUE(r.changed);
  EXPECT_NE(r.text, base.text);
  EXPECT_EQ(r.word_length, static_cast<int>(word_count(r.text)));
  EXPECT_EQ(r.supports, Winner::first);
  EXPECT_FALSE(r.has_flag("kept_as_is"));
}

TEST(Improve, UnusableAnswersKeepTextAndFlag) {
  Env e;
  const auto p = pair_fixture();
  const auto bad = e.gw.add_mock("m", parse_mock_spec("refine=invalid"));
  const auto r = evaluate_and_refine(e.gw, e.kit, bad, p, base_for(p, "m"));
  EXPECT_TRUE(r.has_flag("refine_failed:answer_out_of_domain"));
  EXPECT_EQ(r.text, base_for(p, "m").text);

  auto failed = base_for(p, "m");
  failed.text.clear();
  failed.supports.reset();
  failed.flags = {"parse_failure:no_json_object"};
  const auto nb = evaluate_and_refine(e.gw, e.kit, bad, p, failed);
  EXPECT_TRUE(nb.has_flag("refine_failed:no_base"));
  EXPECT_TRUE(nb.has_flag("parse_failure:no_json_object"));

  GatewayOptions o;
  o.retry.max_attempts = 1;
  Gateway down(o);
  const auto gone = down.add_mock("m", parse_mock_spec("refine=yes;fail=3"));
  EXPECT_TRUE(evaluate_and_refine(down, e.kit, gone, p, base_for(p, "m")).has_flag("refine_failed:transport"));
}

TEST(Improve, RefineAllCoversEveryPair) {
  Env e;
  const auto model = e.gw.add_mock("m", parse_mock_spec("refine=no"));
  const std::vector<ArgumentPair> pairs{pair_fixture("p1"), pair_fixture("p2")};
  const std::vector<Rationale> base{base_for(pairs[0], "m"), base_for(pairs[1], "m")};
  const auto out = refine_all(e.gw, e.kit, model, pairs, base, 2);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[1].pair_id, "p2");
  EXPECT_THROW(refine_all(e.gw, e.kit, model, pairs, std::span<const Rationale>(base.data(), 1)), CoverageError);
}

TEST(Improve, PersuasionPromptedParticipant) {
  Env e;
  const auto model = e.gw.add_mock("m", parse_mock_spec("decision=gold"));
  const auto d = persuasion_prompted(e.gw, e.kit, model, pair_fixture());
  EXPECT_EQ(d.model_id, "m+prompted");
  EXPECT_EQ(d.rationale.provenance, Provenance::persuasion_prompted);
  EXPECT_EQ(d.winner(), Winner::first);
}

TEST(Improve, ExtendedTournamentRecordsProvenance) {
  Env e;
  const auto judge = e.gw.add_mock("judge", parse_mock_spec("judge=prefer_longer"));
  const std::vector<ArgumentPair> pairs{pair_fixture("p1"), pair_fixture("p2")};
  std::vector<Rationale> rs;
  for (const auto& p : pairs) {
    auto a = base_for(p, "m");
    auto b = make_rationale(rationale_id(p.id, "m+refined"), p.id, "m+refined",
                            a.text + " It also shows that longer hours widen access for evening learners.",
                            Provenance::refined, Winner::first);
    a.basic_form = b.basic_form = BasicForm{true, false};
    rs.push_back(a);
    rs.push_back(b);
  }
  const std::vector<std::string> who{"m", "m+refined"};
  const auto t = extended_tournament(e.gw, e.kit, judge, pairs, who, rs);
  EXPECT_EQ(t.outcomes.size(), 2u);
  EXPECT_EQ(t.report.provenance.at("m+refined"), Provenance::refined);
  EXPECT_DOUBLE_EQ(t.report.columns[0].by_participant.at("m+refined").mean, 2.0);
}
