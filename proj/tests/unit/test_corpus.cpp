#include <map>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include <argjudge/corpus.hpp>

#include "support/oracles.hpp"

using namespace argjudge;

namespace {

const char* kPairwise =
    "id,topic,stance,argument1,argument2,winner\n"
    "p1,Ban cars,pro,\"Cars pollute, a lot.\",Cars are loud.,1\n"
    "p2,Ban cars,con,Jobs depend on cars.,People like driving.,2\n";

}  // namespace

TEST(PairwiseDataset, ParsesQuotedFieldsAndWinners) {
  const auto load = parse_pairwise_dataset(kPairwise, DatasetFormat::csv);
  ASSERT_EQ(load.pairs.size(), 2u);
  EXPECT_TRUE(load.rejected.empty());
  const auto& p = load.pairs[0];
  EXPECT_EQ(p.id, "p1");
  EXPECT_EQ(p.topic, "Ban cars");
  EXPECT_EQ(p.arg1.text, "Cars pollute, a lot.");
  EXPECT_EQ(p.arg1.word_count, 4);
  EXPECT_EQ(p.gold_winner, Winner::first);
  EXPECT_EQ(load.pairs[1].gold_winner, Winner::second);
  EXPECT_EQ(load.pairs[1].arg2.stance, Stance::con);
  EXPECT_NE(p.arg1.id, p.arg2.id);
}

TEST(PairwiseDataset, TsvFormat) {
  const auto load = parse_pairwise_dataset(
      "topic\tstance\targument1\targument2\twinner\nT\tpro\tA one.\tB two.\t2\n", DatasetFormat::tsv);
  ASSERT_EQ(load.pairs.size(), 1u);
  EXPECT_EQ(load.pairs[0].arg2.text, "B two.");
}

TEST(PairwiseDataset, StanceMismatchIsRejectedNotFatal) {
  const auto load = parse_pairwise_dataset(
      "topic,stance1,stance2,argument1,argument2,winner\nT,pro,con,A.,B.,1\nT,pro,pro,C.,D.,2\n", DatasetFormat::csv);
  ASSERT_EQ(load.pairs.size(), 1u);
  ASSERT_EQ(load.rejected.size(), 1u);
  EXPECT_EQ(load.rejected[0].reason, "stance mismatch");
  EXPECT_EQ(load.rejected[0].row, 2u);
}

TEST(PairwiseDataset, MalformedRowsRaiseRecordError) {
  try {
    parse_pairwise_dataset("topic,stance,argument1,argument2,winner\nT,pro,A.,B.,3\n", DatasetFormat::csv);
    FAIL() << "expected RecordError";
  } catch (const RecordError& e) {
    EXPECT_EQ(e.row(), 2u);
  }
  EXPECT_THROW(parse_pairwise_dataset("topic,stance,argument1,argument2,winner\nT,maybe,A.,B.,1\n",
                                      DatasetFormat::csv),
               RecordError);
  EXPECT_THROW(parse_pairwise_dataset("topic,stance,argument1,argument2,winner\nT,pro,A.,B.\n", DatasetFormat::csv),
               RecordError);
}

TEST(PairwiseDataset, EmptyOrHeaderlessFilesRaiseDatasetError) {
  EXPECT_THROW(parse_pairwise_dataset("", DatasetFormat::csv), DatasetError);
  EXPECT_THROW(parse_pairwise_dataset("topic,stance,argument1,argument2,winner\n", DatasetFormat::csv), DatasetError);
  EXPECT_THROW(parse_pairwise_dataset("topic,argument1,argument2,winner\nT,A,B,1\n", DatasetFormat::csv),
               DatasetError);
}

TEST(PointwiseDataset, ParsesQualityAndRejectsOutOfRange) {
  const auto args = parse_pointwise_dataset("id,topic,stance,argument,quality\na,T,pro,Some text here.,0.75\n",
                                            DatasetFormat::csv);
  ASSERT_EQ(args.size(), 1u);
  EXPECT_EQ(args[0].id, "a");
  EXPECT_DOUBLE_EQ(*args[0].quality_score, 0.75);
  EXPECT_EQ(args[0].word_count, 3);
  EXPECT_THROW(parse_pointwise_dataset("topic,stance,argument,quality\nT,pro,X.,1.5\n", DatasetFormat::csv),
               RecordError);
  EXPECT_THROW(parse_pointwise_dataset("topic,stance,argument,quality\nT,pro,X.,high\n", DatasetFormat::csv),
               RecordError);
}

TEST(ValidatePair, ChecksStanceIdsAndDelta) {
  ArgumentPair p;
  p.id = "x";
  p.arg1 = make_argument("a", "T", Stance::pro, "one two", 0.9);
  p.arg2 = make_argument("b", "T", Stance::pro, "three four", 0.4);
  p.quality_delta = 0.5;
  EXPECT_NO_THROW(validate_pair(p));
  p.quality_delta = 0.3;
  EXPECT_THROW(validate_pair(p), InputError);
  p.quality_delta = 0.5;
  p.arg2.stance = Stance::con;
  EXPECT_THROW(validate_pair(p), InputError);
  p.arg2.stance = Stance::pro;
  p.arg2.id = "a";
  EXPECT_THROW(validate_pair(p), InputError);
}

TEST(Pairing, EligibilityRules) {
  PairingOptions o;
  const auto a = make_argument("a", "T", Stance::pro, oracle::words(10), 0.8);
  EXPECT_TRUE(eligible_pair(a, make_argument("b", "T", Stance::pro, oracle::words(8), 0.5), o));
  EXPECT_FALSE(eligible_pair(a, make_argument("b", "T", Stance::pro, oracle::words(7), 0.5), o));
  EXPECT_FALSE(eligible_pair(a, make_argument("b", "T", Stance::pro, oracle::words(10), 0.8), o));
  EXPECT_FALSE(eligible_pair(a, make_argument("b", "T", Stance::con, oracle::words(10), 0.5), o));
  EXPECT_FALSE(eligible_pair(a, make_argument("b", "U", Stance::pro, oracle::words(10), 0.5), o));
  EXPECT_FALSE(eligible_pair(a, a, o));
}

TEST(Pairing, GoldIsHigherQualityAndDeltaMatches) {
  std::vector<Argument> args;
  for (int i = 0; i < 40; ++i)
    args.push_back(make_argument("a" + std::to_string(i), "T", Stance::pro, oracle::words(20 + i % 3),
                                 static_cast<double>(i) / 40.0));
  PairingOptions o;
  o.seed = 4;
  const auto pairs = build_pairs_from_pointwise(args, o);
  ASSERT_FALSE(pairs.empty());
  for (const auto& p : pairs) {
    const Argument& winner = p.argument(*p.gold_winner);
    const Argument& loser = p.argument(other(*p.gold_winner));
    EXPECT_GT(*winner.quality_score, *loser.quality_score);
    EXPECT_DOUBLE_EQ(*p.quality_delta, *winner.quality_score - *loser.quality_score);
    EXPECT_NO_THROW(validate_pair(p));
  }
}

TEST(Pairing, DeterministicUnderSeedAndBothSlotsUsed) {
  std::vector<Argument> args;
  std::mt19937_64 rng(5);
  for (int i = 0; i < 400; ++i)
    args.push_back(make_argument("a" + std::to_string(i), "T" + std::to_string(i % 3), Stance::pro,
                                 oracle::words(10 + bounded_draw(rng, 10)), bounded_draw(rng, 100) / 100.0));
  PairingOptions o;
  o.seed = 17;
  const auto x = build_pairs_from_pointwise(args, o);
  const auto y = build_pairs_from_pointwise(args, o);
  ASSERT_EQ(x.size(), y.size());
  std::map<Winner, int> slots;
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_EQ(x[i].arg1.id, y[i].arg1.id);
    EXPECT_EQ(x[i].arg2.id, y[i].arg2.id);
    ++slots[*x[i].gold_winner];
  }
  EXPECT_GT(slots[Winner::first], 0);
  EXPECT_GT(slots[Winner::second], 0);
}

TEST(Pairing, RejectsBadOptionsAndUnscoredArguments) {
  std::vector<Argument> args{make_argument("a", "T", Stance::pro, "x y z", 0.2)};
  PairingOptions o;
  o.length_tolerance = 0.0;
  EXPECT_THROW(build_pairs_from_pointwise(args, o), InputError);
  o.length_tolerance = 0.2;
  o.max_uses = 0;
  EXPECT_THROW(build_pairs_from_pointwise(args, o), InputError);
  o.max_uses = 1;
  args.push_back(make_argument("b", "T", Stance::pro, "x y z"));
  EXPECT_THROW(build_pairs_from_pointwise(args, o), InputError);
}

TEST(Buckets, LabelsAndHalfOpenIntervals) {
  const auto& edges = default_bucket_edges();
  const auto labels = bucket_labels(edges);
  ASSERT_EQ(labels.size(), 3u);
  EXPECT_EQ(labels[0], "0-0.25");
  EXPECT_EQ(labels[1], "0.25-0.5");
  EXPECT_EQ(labels[2], "0.5-1.");
  EXPECT_EQ(bucket_index(0.0, edges), 0u);
  EXPECT_EQ(bucket_index(0.25, edges), 1u);
  EXPECT_EQ(bucket_index(0.4999, edges), 1u);
  EXPECT_EQ(bucket_index(1.0, edges), 2u);
  EXPECT_FALSE(bucket_index(1.01, edges));
  EXPECT_FALSE(bucket_index(-0.1, edges));
  const std::vector<double> bad{0.5, 0.25};
  EXPECT_THROW(bucket_labels(bad), ConfigError);
}

TEST(Buckets, EveryPairLandsInExactlyOneBucket) {
  std::vector<ArgumentPair> pairs;
  for (int i = 0; i <= 20; ++i) {
    ArgumentPair p;
    p.id = std::to_string(i);
    p.quality_delta = i / 20.0;
    pairs.push_back(p);
  }
  const auto buckets = bucket_by_quality_delta(pairs, default_bucket_edges());
  std::size_t total = 0;
  for (const auto& b : buckets) {
    total += b.pairs.size();
    for (const auto& p : b.pairs) {
      EXPECT_GE(*p.quality_delta, b.lo);
      EXPECT_LE(*p.quality_delta, b.hi);
    }
  }
  EXPECT_EQ(total, pairs.size());
  pairs[0].quality_delta.reset();
  EXPECT_THROW(bucket_by_quality_delta(pairs, default_bucket_edges()), InputError);
}
