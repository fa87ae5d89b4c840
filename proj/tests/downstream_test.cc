#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "embias/downstream.hpp"
#include "embias/errors.hpp"
#include "fixtures.hpp"

using namespace embias;

namespace {

GroupedConfusion two_groups(Confusion a, Confusion b) {
  GroupedConfusion g;
  g[Group::kA] = a;
  g[Group::kB] = b;
  return g;
}

// 1-d store: word "v<i>" has value i/10 - 1.
EmbeddingStore line_store() {
  std::vector<std::string> words;
  std::vector<float> m;
  for (int i = 0; i <= 20; ++i) {
    words.push_back("v" + std::to_string(i));
    m.push_back(static_cast<float>(i) / 10.0f - 1.0f);
  }
  return EmbeddingStore(words, m, 1);
}

// Two Gaussian clusters of words; positive sentences draw from cluster 1.
struct Clusters {
  EmbeddingStore store;
  std::vector<LabeledExample> train, test;
};

Clusters gaussian_clusters(std::uint64_t seed) {
  Rng rng(seed);
  constexpr std::size_t kDim = 6;
  std::vector<std::string> words;
  std::vector<float> m;
  for (int c = 0; c < 2; ++c) {
    for (int i = 0; i < 30; ++i) {
      words.push_back("c" + std::to_string(c) + "_" + std::to_string(i));
      for (std::size_t k = 0; k < kDim; ++k) {
        const double centre = (k == 0) ? (c == 0 ? -1.0 : 1.0) : 0.0;
        m.push_back(static_cast<float>(centre + 0.5 * rng.normal()));
      }
    }
  }
  Clusters out{EmbeddingStore(words, m, kDim), {}, {}};
  for (int i = 0; i < 400; ++i) {
    LabeledExample e;
    e.positive = rng.below(2) == 1;
    e.group = static_cast<Group>(rng.below(3));
    for (int t = 0; t < 4; ++t) {
      e.tokens.push_back("c" + std::to_string(e.positive ? 1 : 0) + "_" + std::to_string(rng.below(30)));
    }
    (i < 250 ? out.train : out.test).push_back(e);
  }
  return out;
}

}  // namespace

TEST(Featurize, MeanOfResolvableTokens) {
  const EmbeddingStore s({"a", "b"}, {1, 0, 0, 1}, 2);
  const auto f = featurize(s, {"a", "b", "zzz"});
  EXPECT_FALSE(f.empty);
  EXPECT_EQ((std::vector<double>{0.5, 0.5}), f.values);
  const auto none = featurize(s, {"zzz"});
  EXPECT_TRUE(none.empty);
  EXPECT_EQ((std::vector<double>{0, 0}), none.values);
}

TEST(Classifier, SeparatesGaussianClusters) {
  const auto c = gaussian_clusters(1);
  ClassifierConfig cfg;
  cfg.seed = 2;
  const auto clf = train_classifier(c.store, c.train, cfg);
  const auto conf = grouped_confusion(clf, c.store, c.test).overall();
  EXPECT_GE(accuracy(conf), 0.95);
}

TEST(Classifier, DeterministicAndLeavesStoreUntouched) {
  const auto c = gaussian_clusters(3);
  const auto before = c.store;
  ClassifierConfig cfg;
  cfg.seed = 4;
  const auto a = train_classifier(c.store, c.train, cfg);
  const auto b = train_classifier(c.store, c.train, cfg);
  EXPECT_EQ(a.weights(), b.weights());
  EXPECT_EQ(a.bias(), b.bias());
  EXPECT_TRUE(before == c.store);
}

TEST(Classifier, SingleClassInputIsAnError) {
  const auto c = gaussian_clusters(5);
  auto train = c.train;
  for (auto& e : train) e.positive = true;
  EXPECT_THROW(train_classifier(c.store, train, {}), ValidationError);
  EXPECT_THROW(train_classifier(c.store, {}, {}), ValidationError);
}

TEST(GroupedConfusion, ConstantPositiveClassifier) {
  const auto s = line_store();
  const Classifier always(std::vector<double>{0.0}, 10.0);
  std::vector<LabeledExample> test;
  for (int i = 0; i < 5; ++i) test.push_back({{"v1"}, i < 3, Group::kA});
  const auto g = grouped_confusion(always, s, test);
  EXPECT_EQ((Confusion{3, 2, 0, 0}), g[Group::kA]);
  EXPECT_EQ(Confusion{}, g[Group::kB]);
}

TEST(GroupedConfusion, PerfectClassifierAndConservation) {
  const auto s = line_store();
  // Positive iff feature > 0.
  const Classifier sign(std::vector<double>{100.0}, 0.0);
  Rng rng(6);
  std::vector<LabeledExample> test;
  std::array<std::uint64_t, 3> sizes{};
  for (int i = 0; i < 60; ++i) {
    const int v = static_cast<int>(rng.below(21));
    if (v == 10) continue;
    const auto g = static_cast<Group>(rng.below(3));
    ++sizes[static_cast<std::size_t>(g)];
    test.push_back({{"v" + std::to_string(v)}, v > 10, g});
  }
  const auto conf = grouped_confusion(sign, s, test);
  for (std::size_t g = 0; g < 3; ++g) {
    EXPECT_EQ(0u, conf.groups[g].fp);
    EXPECT_EQ(0u, conf.groups[g].fn);
    EXPECT_EQ(sizes[g], conf.groups[g].total());
  }
  EXPECT_EQ(test.size(), conf.overall().total());
}

TEST(Gaps, HandArithmetic) {
  const auto p = two_groups({8, 2, 0, 0}, {6, 4, 0, 0});
  EXPECT_NEAR(0.2, precision_gap(p, Group::kA), 1e-12);
  const auto r = two_groups({8, 0, 4, 0}, {6, 0, 6, 0});
  EXPECT_NEAR(0.1667, recall_gap(r, Group::kA), 1e-4);
  const auto same = two_groups({3, 1, 2, 4}, {3, 1, 2, 4});
  EXPECT_EQ(0.0, precision_gap(same, Group::kA));
  EXPECT_EQ(0.0, recall_gap(same, Group::kA));
}

TEST(Gaps, UndefinedMetricsAreErrors) {
  EXPECT_THROW(precision_gap(two_groups({8, 2, 0, 0}, {0, 0, 3, 5}), Group::kA), DegenerateError);
  EXPECT_THROW(recall_gap(two_groups({0, 2, 0, 5}, {6, 0, 6, 0}), Group::kA), DegenerateError);
  EXPECT_THROW(precision_gap(two_groups({1, 1, 1, 1}, {1, 1, 1, 1}), Group::kNeutral), ValidationError);
}

TEST(Gaps, AntisymmetricAndBounded) {
  Rng rng(8);
  for (int i = 0; i < 200; ++i) {
    const auto c = [&] { return Confusion{1 + rng.below(20), 1 + rng.below(20), rng.below(20), rng.below(20)}; };
    const auto g = two_groups(c(), c());
    EXPECT_EQ(precision_gap(g, Group::kA), -precision_gap(g, Group::kB));
    EXPECT_EQ(recall_gap(g, Group::kA), -recall_gap(g, Group::kB));
    EXPECT_LE(std::abs(precision_gap(g, Group::kA)), 1.0);
    EXPECT_LE(std::abs(recall_gap(g, Group::kA)), 1.0);
  }
}

TEST(Gaps, LabelSwapGivesComplementaryRates) {
  const auto s = line_store();
  const Classifier clf(std::vector<double>{3.0}, 0.2);
  Rng rng(10);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<LabeledExample> test;
    for (int i = 0; i < 20; ++i) {
      test.push_back({{"v" + std::to_string(rng.below(21))}, rng.below(2) == 1,
                      rng.below(2) ? Group::kA : Group::kB});
    }
    auto swapped = test;
    for (auto& e : swapped) e.positive = !e.positive;

    // Brute force: false positive rate per group on the original labels.
    double fp[2] = {0, 0}, neg[2] = {0, 0};
    for (const auto& e : test) {
      if (e.positive) continue;
      const auto g = static_cast<std::size_t>(e.group);
      neg[g] += 1;
      fp[g] += clf.predict(s, e.tokens) ? 1 : 0;
    }
    const auto conf = grouped_confusion(clf, s, swapped);
    if (neg[0] == 0 || neg[1] == 0) {
      EXPECT_THROW(recall_gap(conf, Group::kA), DegenerateError);
      continue;
    }
    EXPECT_NEAR(fp[0] / neg[0] - fp[1] / neg[1], recall_gap(conf, Group::kA), 1e-12);
  }
}

TEST(LabeledData, TsvReadAndWrite) {
  std::istringstream in("1\ta\tHello @bob see http://x.io\n0\tneutral\tfine\n\n");
  const auto ex = read_labeled(in);
  ASSERT_EQ(2u, ex.size());
  EXPECT_TRUE(ex[0].positive);
  EXPECT_EQ(Group::kA, ex[0].group);
  EXPECT_EQ((Sentence{"hello", "<user>", "see", "<url>"}), ex[0].tokens);
  EXPECT_EQ(Group::kNeutral, ex[1].group);

  std::ostringstream out;
  write_labeled(ex, out);
  EXPECT_EQ("1\ta\thello <user> see <url>\n0\tneutral\tfine\n", out.str());

  std::istringstream bad_label("2\ta\tx\n");
  EXPECT_THROW(read_labeled(bad_label), ValidationError);
  std::istringstream bad_group("1\tc\tx\n");
  EXPECT_THROW(read_labeled(bad_group), ValidationError);
  std::istringstream short_row("1\ta\n");
  EXPECT_THROW(read_labeled(short_row), ValidationError);
}
