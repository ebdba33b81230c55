#include <gtest/gtest.h>

#include <algorithm>

#include "dnnc/augment.hpp"
#include "test_support.hpp"

using namespace dnnc;

namespace {

SynonymLexicon demo_lexicon() {
  return SynonymLexicon({{"money", {"funds", "cash"}}, {"send", {"transfer"}}, {"fast", {"quick", "fast"}}});
}

std::vector<std::string> sorted_words(const std::string& s) {
  auto w = split_words(s);
  std::sort(w.begin(), w.end());
  return w;
}

}  // namespace

TEST(Eda, DefaultParamsGiveFourOutputs) {
  const auto out = eda_augment("please send money to my account", EdaParams{}, demo_lexicon());
  EXPECT_EQ(out.size(), 4u);
  for (const auto& s : out) EXPECT_FALSE(s.empty());
}

TEST(Eda, CountScalesWithRounds) {
  EdaParams p;
  p.augmentations_per_technique = 3;
  EXPECT_EQ(eda_augment("a b c", p, demo_lexicon()).size(), 12u);
  p.augmentations_per_technique = 0;
  EXPECT_TRUE(eda_augment("a b c", p, demo_lexicon()).empty());
}

TEST(Eda, ZeroEditProbabilityIsIdentity) {
  EdaParams p;
  p.edit_prob = 0.0;
  for (const auto& s : eda_augment("send money fast please", p, demo_lexicon())) EXPECT_EQ(s, "send money fast please");
}

TEST(Eda, ForcedSwap) {
  EXPECT_EQ(join_words(swap_positions(split_words("a b"), 0, 1)), "b a");
  EXPECT_THROW(swap_positions(split_words("a b"), 0, 2), std::out_of_range);
}

TEST(Eda, InvalidInputs) {
  EdaParams p;
  p.edit_prob = 1.5;
  EXPECT_THROW(eda_augment("a b", p, demo_lexicon()), std::invalid_argument);
  EXPECT_THROW(eda_augment("   ", EdaParams{}, demo_lexicon()), std::invalid_argument);
}

TEST(Eda, SwapIsPermutationAndDeletionKeepsAWord) {
  Rng rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    const std::string s = testkit::random_text(rng, 1, 9);
    EdaParams p;
    p.seed = static_cast<std::uint64_t>(trial);
    p.edit_prob = rng.uniform();
    const auto out = eda_augment(s, p, demo_lexicon());
    ASSERT_EQ(out.size(), 4u);
    EXPECT_EQ(sorted_words(out[2]), sorted_words(s)) << s << " -> " << out[2];
    const auto n = split_words(out[3]).size();
    EXPECT_GE(n, 1u);
    EXPECT_LE(n, split_words(s).size());
    for (const auto& o : out) EXPECT_FALSE(split_words(o).empty());
  }
}

TEST(Eda, FullDeletionKeepsOneOriginalWord) {
  Rng rng(3);
  const auto words = split_words("alpha beta gamma delta");
  for (int i = 0; i < 50; ++i) {
    const auto out = random_deletion(words, 1.0, rng);
    ASSERT_EQ(out.size(), 1u);
    EXPECT_NE(std::find(words.begin(), words.end(), out[0]), words.end());
  }
}

TEST(Eda, ReplacementUsesLexiconOnly) {
  Rng rng(5);
  const auto lex = demo_lexicon();
  const auto out = synonym_replacement(split_words("send money now"), 1.0, lex, rng);
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out[0], "transfer");
  EXPECT_TRUE(out[1] == "funds" || out[1] == "cash");
  EXPECT_EQ(out[2], "now");
}

TEST(Eda, InsertionAddsSynonymsOrIsIdentity) {
  Rng rng(9);
  const auto lex = demo_lexicon();
  const auto words = split_words("send the money today");
  const auto out = random_insertion(words, 2, lex, rng);
  ASSERT_EQ(out.size(), words.size() + 2);
  std::vector<std::string> extra = out;
  for (const auto& w : words) extra.erase(std::find(extra.begin(), extra.end(), w));
  for (const auto& w : extra) EXPECT_TRUE(w == "transfer" || w == "funds" || w == "cash") << w;

  const auto none = random_insertion(split_words("no synonyms here"), 3, lex, rng);
  EXPECT_EQ(join_words(none), "no synonyms here");
}

TEST(Eda, EmptyLexiconDegradesToIdentity) {
  EdaParams p;
  p.edit_prob = 0.9;
  const auto out = eda_augment("send money fast", p, SynonymLexicon{});
  EXPECT_EQ(out[0], "send money fast");
  EXPECT_EQ(out[1], "send money fast");
}

TEST(Eda, LexiconDropsSelfSynonymsAndLowercases) {
  const auto lex = SynonymLexicon::from_json(R"({"Fast": ["fast", "Quick"], "slow": ["slow"]})");
  const auto* syn = lex.synonyms("FAST");
  ASSERT_NE(syn, nullptr);
  EXPECT_EQ(*syn, std::vector<std::string>{"Quick"});
  EXPECT_EQ(lex.synonyms("slow"), nullptr);
}

TEST(Eda, EditCountRule) {
  EXPECT_EQ(eda_edit_count(0.0, 10), 0u);
  EXPECT_EQ(eda_edit_count(0.1, 3), 1u);
  EXPECT_EQ(eda_edit_count(0.1, 25), 3u);
  EXPECT_EQ(eda_edit_count(0.5, 4), 2u);
}

TEST(Eda, DeterministicInSeed) {
  EdaParams p;
  p.edit_prob = 0.4;
  p.seed = 42;
  const auto a = eda_augment("send money to my account fast", p, demo_lexicon());
  const auto b = eda_augment("send money to my account fast", p, demo_lexicon());
  EXPECT_EQ(a, b);
}
