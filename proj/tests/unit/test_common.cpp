#include <map>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include <argjudge/common.hpp>

using namespace argjudge;

TEST(Common, TrimAndLower) {
  EXPECT_EQ(trim("  a b \t\n"), "a b");
  EXPECT_EQ(trim("   "), "");
  EXPECT_EQ(to_lower("ArGuMent 1"), "argument 1");
}

TEST(Common, WordCountSplitsOnAnyWhitespace) {
  EXPECT_EQ(word_count(""), 0u);
  EXPECT_EQ(word_count("one"), 1u);
  EXPECT_EQ(word_count("  one\ttwo\n three  "), 3u);
}

TEST(Common, NormalizedTokensStripPunctuationKeepApostrophes) {
  const auto t = normalized_tokens("Someone's view, \"clearly\" WRONG!");
  ASSERT_EQ(t.size(), 4u);
  EXPECT_EQ(t[0], "someone's");
  EXPECT_EQ(t[1], "view");
  EXPECT_EQ(t[2], "clearly");
  EXPECT_EQ(t[3], "wrong");
}

TEST(Common, LengthRatio) {
  EXPECT_DOUBLE_EQ(length_ratio(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(length_ratio(10, 8), 0.2);
  EXPECT_DOUBLE_EQ(length_ratio(8, 10), 0.2);
  EXPECT_DOUBLE_EQ(length_ratio(0, 5), 1.0);
}

TEST(Common, WinnerFromInt) {
  EXPECT_EQ(winner_from_int(1), Winner::first);
  EXPECT_EQ(winner_from_int(2), Winner::second);
  EXPECT_FALSE(winner_from_int(0));
  EXPECT_FALSE(winner_from_int(3));
  EXPECT_EQ(other(Winner::first), Winner::second);
}

TEST(Common, Sha256KnownVectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Common, BoundedDrawStaysInRangeAndCoversIt) {
  std::mt19937_64 rng(3);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 2000; ++i) {
    const auto v = bounded_draw(rng, 7);
    ASSERT_LT(v, 7u);
    seen.insert(v);
  }
  EXPECT_EQ(seen.size(), 7u);
  EXPECT_EQ(bounded_draw(rng, 1), 0u);
}

TEST(Common, PortableShuffleIsAPermutationAndSeeded) {
  std::vector<int> a(50), b;
  for (int i = 0; i < 50; ++i) a[i] = i;
  b = a;
  std::mt19937_64 r1(9), r2(9);
  portable_shuffle(a, r1);
  portable_shuffle(b, r2);
  EXPECT_EQ(a, b);
  auto sorted = a;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 50; ++i) EXPECT_EQ(sorted[i], i);
}

TEST(Common, MixSeedSeparatesStreams) {
  EXPECT_NE(mix_seed(1, 0), mix_seed(1, 1));
  EXPECT_EQ(mix_seed(5, 2), mix_seed(5, 2));
}

TEST(Common, CoverageErrorKeepsGaps) {
  const CoverageError e("incomplete", {"a", "b"});
  EXPECT_EQ(e.gaps().size(), 2u);
  const RecordError r(4, "bad row");
  EXPECT_EQ(r.row(), 4u);
}
