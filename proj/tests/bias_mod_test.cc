#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "embias/bias_mod.hpp"
#include "embias/errors.hpp"
#include "embias/log.hpp"
#include "embias/weat.hpp"
#include "fixtures.hpp"

using namespace embias;

namespace {

StereotypeLexicon small_lexicon() {
  StereotypeLexicon l;
  l.name = "small";
  l.group_a = {"she", "her"};
  l.group_b = {"he", "him"};
  l.concept_a = {"housekeeper", "nurse"};
  l.concept_b = {"engineer", "pilot"};
  return l;
}

StereotypeTag tag_of(const std::string& line) {
  return tag_sentences({split_tokens(line)}, small_lexicon())[0].tag;
}

TaggedCorpus synthetic_tagged(std::size_t total, std::size_t pro, std::size_t anti) {
  TaggedCorpus t;
  for (std::size_t i = 0; i < total; ++i) {
    StereotypeTag tag = StereotypeTag::kNeutral;
    if (i < pro) {
      tag = StereotypeTag::kPro;
    } else if (i < pro + anti) {
      tag = StereotypeTag::kAnti;
    }
    t.push_back({tag, {"s" + std::to_string(i)}});
  }
  return t;
}

bool is_subsequence(const Corpus& sub, const Corpus& full) {
  std::size_t j = 0;
  for (const auto& s : full) {
    if (j < sub.size() && sub[j] == s) ++j;
  }
  return j == sub.size();
}

}  // namespace

TEST(TagSentences, Examples) {
  EXPECT_EQ(StereotypeTag::kPro, tag_of("she was a talented housekeeper"));
  EXPECT_EQ(StereotypeTag::kAnti, tag_of("he was a talented housekeeper"));
  EXPECT_EQ(StereotypeTag::kNeutral, tag_of("the sky is blue"));
  EXPECT_EQ(StereotypeTag::kNeutral, tag_of("she is here"));
  EXPECT_EQ(StereotypeTag::kMixed, tag_of("she met him the engineer and the nurse"));
}

TEST(TagSentences, TaggedFileRoundTrip) {
  const auto tagged = tag_sentences({split_tokens("she nurse"), split_tokens("a b c")}, small_lexicon());
  std::stringstream ss;
  write_tagged(tagged, ss);
  EXPECT_EQ("PRO\tshe nurse\nNEUTRAL\ta b c\n", ss.str());
  const auto back = read_tagged(ss);
  ASSERT_EQ(2u, back.size());
  EXPECT_EQ(StereotypeTag::kPro, back[0].tag);
  EXPECT_EQ(tagged[1].tokens, back[1].tokens);
  std::istringstream bad("BOGUS\tx\n");
  EXPECT_THROW(read_tagged(bad), ValidationError);
}

TEST(BalanceCorpus, DebiasRemovesExcessPro) {
  BalanceOptions o;
  o.seed = 3;
  const auto r = balance_corpus(synthetic_tagged(1000, 60, 20), o);
  EXPECT_EQ(40u, r.removed.size());
  EXPECT_EQ(960u, r.corpus.size());
  EXPECT_EQ(20u, r.pro_after);
  EXPECT_EQ(20u, r.anti_after);
  for (auto i : r.removed) EXPECT_LT(i, 60u);
  EXPECT_TRUE(std::is_sorted(r.removed.begin(), r.removed.end()));
}

TEST(BalanceCorpus, BudgetCapsRemoval) {
  BalanceOptions o;
  o.budget = 0.03;
  EXPECT_EQ(30u, balance_removal_count(1000, 60, 20, o));
  o.budget = 0.05;
  o.strength = 0.3;
  EXPECT_EQ(12u, balance_removal_count(1000, 60, 20, o));
  o.strength = 1.0;
  o.direction = Direction::kOverbias;
  EXPECT_EQ(20u, balance_removal_count(1000, 60, 20, o));
  EXPECT_EQ(0u, balance_removal_count(1000, 10, 20, BalanceOptions{}));
}

TEST(BalanceCorpus, OptionValidation) {
  BalanceOptions o;
  o.budget = 0.06;
  EXPECT_THROW(balance_removal_count(100, 5, 1, o), ValidationError);
  o.budget = 0.0;
  EXPECT_THROW(balance_removal_count(100, 5, 1, o), ValidationError);
  o.budget = 0.05;
  o.strength = 1.5;
  EXPECT_THROW(balance_removal_count(100, 5, 1, o), ValidationError);
}

TEST(BalanceCorpus, ZeroStrengthIsIdentity) {
  BalanceOptions o;
  o.strength = 0.0;
  const auto tagged = synthetic_tagged(200, 30, 5);
  const auto r = balance_corpus(tagged, o);
  ASSERT_EQ(tagged.size(), r.corpus.size());
  for (std::size_t i = 0; i < tagged.size(); ++i) EXPECT_EQ(tagged[i].tokens, r.corpus[i]);
}

TEST(BalanceCorpus, NothingToRemoveWarnsAndKeepsCorpus) {
  set_warnings_enabled(false);
  BalanceOptions o;
  o.direction = Direction::kOverbias;
  const auto r = balance_corpus(synthetic_tagged(100, 5, 0), o);
  EXPECT_EQ(100u, r.corpus.size());
  set_warnings_enabled(true);
}

TEST(BalanceCorpus, RandomizedInvariants) {
  set_warnings_enabled(false);
  Rng rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(400);
    TaggedCorpus t;
    std::size_t pro = 0, anti = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto tag = static_cast<StereotypeTag>(rng.below(4));
      pro += tag == StereotypeTag::kPro;
      anti += tag == StereotypeTag::kAnti;
      t.push_back({tag, {"t" + std::to_string(i)}});
    }
    BalanceOptions o;
    o.direction = rng.below(2) ? Direction::kDebias : Direction::kOverbias;
    o.budget = rng.uniform(0.001, 0.05);
    o.strength = rng.uniform(0.0, 1.0);
    o.seed = trial;
    const auto r = balance_corpus(t, o);
    Corpus full;
    for (const auto& s : t) full.push_back(s.tokens);
    EXPECT_TRUE(is_subsequence(r.corpus, full));
    EXPECT_LE(r.removed.size(), static_cast<std::size_t>(std::floor(o.budget * n + 1e-9)));
    EXPECT_EQ(n, r.corpus.size() + r.removed.size());
    const auto wanted = o.direction == Direction::kDebias ? StereotypeTag::kPro : StereotypeTag::kAnti;
    for (auto i : r.removed) EXPECT_EQ(wanted, t[i].tag);
    if (o.direction == Direction::kDebias) {
      EXPECT_GE(r.pro_after, std::min(pro, anti));
    }
  }
  set_warnings_enabled(true);
}

TEST(BalanceCorpus, SeededSelection) {
  BalanceOptions o;
  o.seed = 9;
  const auto t = synthetic_tagged(1000, 60, 20);
  EXPECT_EQ(balance_corpus(t, o).removed, balance_corpus(t, o).removed);
}

TEST(ConstraintPairs, DebiasAndOverbiasSwap) {
  StereotypeLexicon l;
  l.group_a = {"she"};
  l.group_b = {"he"};
  l.concept_a = {"nurse"};
  l.concept_b = {"engineer"};
  const auto d = build_constraint_pairs(l, Direction::kDebias);
  const std::set<WordPair> attract(d.attract.begin(), d.attract.end());
  const std::set<WordPair> repel(d.repel.begin(), d.repel.end());
  EXPECT_EQ((std::set<WordPair>{{"she", "engineer"}, {"he", "nurse"}}), attract);
  EXPECT_EQ((std::set<WordPair>{{"she", "nurse"}, {"he", "engineer"}}), repel);

  const auto o = build_constraint_pairs(l, Direction::kOverbias);
  EXPECT_EQ(d.attract, o.repel);
  EXPECT_EQ(d.repel, o.attract);
}

TEST(ConstraintPairs, EmptyConceptSetIsAnError) {
  auto l = small_lexicon();
  l.concept_b.clear();
  EXPECT_THROW(build_constraint_pairs(l, Direction::kDebias), ValidationError);
}

TEST(ConstraintPairs, Validation) {
  ConstraintSet c;
  c.attract = {{"a", "a"}};
  EXPECT_THROW(c.validate(), ValidationError);
  c.attract = {{"a", "b"}};
  c.repel = {{"b", "a"}};
  EXPECT_THROW(c.validate(), ValidationError);
}

TEST(ExpandWordlist, NearestNeighboursExcludingSeeds) {
  const EmbeddingStore s({"q", "a", "b", "z"}, {1, 0, 1, 0.1f, 1, 0.5f, 0, 1}, 2);
  EXPECT_EQ((std::vector<std::string>{"q", "a"}), expand_wordlist(s, {"q"}, 1));
  EXPECT_EQ((std::vector<std::string>{"q"}), expand_wordlist(s, {"q"}, 0));
  // b is the nearest non-seed of both seeds and is listed once.
  EXPECT_EQ((std::vector<std::string>{"q", "a", "b"}), expand_wordlist(s, {"q", "a"}, 1));
  EXPECT_EQ((std::vector<std::string>{"q", "a", "b"}), expand_wordlist(s, {"q", "q", "a"}, 1));
}

TEST(ExpandWordlist, UnresolvableSeeds) {
  set_warnings_enabled(false);
  const EmbeddingStore s({"q", "a"}, {1, 0, 1, 0.1f}, 2);
  EXPECT_EQ((std::vector<std::string>{"q", "nope", "a"}), expand_wordlist(s, {"q", "nope"}, 1));
  EXPECT_THROW(expand_wordlist(s, {"nope"}, 1), ValidationError);
  set_warnings_enabled(true);
}

TEST(ExpandLexicon, ContestedNeighboursAreDropped) {
  // "mid" is the nearest neighbour of both "she" and "he".
  const EmbeddingStore s({"she", "he", "nurse", "pilot", "mid"},
                         {1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, -1, 1, 1, 0}, 3);
  StereotypeLexicon l;
  l.group_a = {"she"};
  l.group_b = {"he"};
  l.concept_a = {"nurse"};
  l.concept_b = {"pilot"};
  const auto e = expand_lexicon(s, l, 1);
  EXPECT_EQ(std::vector<std::string>{"she"}, e.group_a);
  EXPECT_EQ(std::vector<std::string>{"he"}, e.group_b);
  e.validate();
}

TEST(Lexicon, JsonRoundTripAndLinkage) {
  const auto l = parse_lexicon(R"({"name": "g", "group1": ["She"], "group2": ["he"],
      "concept1": ["nurse"], "concept2": ["pilot"],
      "linkage": {"group1": "concept2", "group2": "concept1"}})");
  EXPECT_EQ(std::vector<std::string>{"she"}, l.group_a);
  EXPECT_EQ(std::vector<std::string>{"pilot"}, l.concept_a);
  EXPECT_EQ(std::vector<std::string>{"nurse"}, l.concept_b);
  const auto back = parse_lexicon(lexicon_to_json(l));
  EXPECT_EQ(l.concept_a, back.concept_a);
  EXPECT_EQ(l.group_b, back.group_b);
  EXPECT_THROW(parse_lexicon(R"({"group1": ["a"], "group2": ["a"], "concept1": ["b"], "concept2": ["c"]})"),
               ValidationError);
  EXPECT_THROW(parse_lexicon(R"({"group1": ["a"], "group2": ["d"], "concept1": ["b"], "concept2": ["c"],
      "linkage": {"group1": "concept1", "group2": "concept1"}})"),
               ValidationError);
}

TEST(Lexicon, ShippedLexiconLoads) {
  const auto l = load_lexicon(std::string(EMBIAS_DATA_DIR) + "/lexicons/gender_en.json");
  EXPECT_FALSE(l.group_a.empty());
  EXPECT_FALSE(l.provenance.empty());
}

TEST(AttractRepel, EmptyConstraintsReturnEqualStore) {
  Rng rng(1);
  const auto s = testkit::random_store(rng, 10, 4);
  EXPECT_TRUE(s == attract_repel(s, {}, ARHyper{}));
}

TEST(AttractRepel, OnlyConstraintWordsChange) {
  const auto f = testkit::biased_fixture(4);
  const auto c = build_constraint_pairs(f.lexicon, Direction::kDebias);
  const auto out = attract_repel(f.store, c, ARHyper{});
  std::set<std::string> touched;
  for (const auto* list : {&c.attract, &c.repel}) {
    for (const auto& [a, b] : *list) {
      touched.insert(a);
      touched.insert(b);
    }
  }
  bool any_changed = false;
  for (std::size_t i = 0; i < f.store.size(); ++i) {
    const auto& w = f.store.words()[i];
    const auto before = f.store.row(i);
    const auto after = out.row(i);
    const bool same = std::equal(before.begin(), before.end(), after.begin());
    if (!touched.count(w)) {
      EXPECT_TRUE(same) << w;
    } else {
      any_changed |= !same;
    }
  }
  EXPECT_TRUE(any_changed);
}

TEST(AttractRepel, DeterministicAndDirectional) {
  const auto f = testkit::biased_fixture(2);
  ARHyper h;
  h.seed = 5;
  const auto d1 = attract_repel(f.store, build_constraint_pairs(f.lexicon, Direction::kDebias), h);
  const auto d2 = attract_repel(f.store, build_constraint_pairs(f.lexicon, Direction::kDebias), h);
  EXPECT_TRUE(d1 == d2);
  const auto o = attract_repel(f.store, build_constraint_pairs(f.lexicon, Direction::kOverbias), h);
  const double base = effect_size(f.store, f.test);
  EXPECT_LT(std::abs(effect_size(d1, f.test)), std::abs(base));
  EXPECT_GT(std::abs(effect_size(o, f.test)), std::abs(base));
}

TEST(AttractRepel, HyperValidation) {
  ARHyper h;
  h.learning_rate = 0;
  EXPECT_THROW(h.validate(), ValidationError);
  h = ARHyper{};
  h.batch_size = 0;
  EXPECT_THROW(h.validate(), ValidationError);
  h = ARHyper{};
  h.attract_margin = -1;
  EXPECT_THROW(h.validate(), ValidationError);
}
