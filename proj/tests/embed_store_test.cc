#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "embias/embed_store.hpp"
#include "embias/errors.hpp"
#include "embias/rng.hpp"
#include "fixtures.hpp"

using namespace embias;
namespace fs = std::filesystem;

namespace {

EmbeddingStore parse_text(const std::string& s) {
  std::istringstream in(s);
  return read_embeddings_text(in);
}

std::string to_text(const EmbeddingStore& s) {
  std::ostringstream out;
  write_embeddings_text(s, out);
  return out.str();
}

EmbeddingStore make(std::vector<std::string> words, std::vector<float> m, std::size_t dim) {
  return EmbeddingStore(std::move(words), std::move(m), dim);
}

fs::path temp_path(const std::string& name) {
  return fs::temp_directory_path() / ("embias_" + std::to_string(::getpid()) + "_" + name);
}

}  // namespace

TEST(LoadEmbeddings, ParsesTextFormat) {
  const auto s = parse_text("2 3\na 1 0 0\nb 0 1 0");
  EXPECT_EQ(2u, s.size());
  EXPECT_EQ(3u, s.dim());
  EXPECT_EQ((std::vector<float>{1, 0, 0}), s.vector("a"));
  EXPECT_EQ((std::vector<float>{0, 1, 0}), s.vector("b"));
}

TEST(LoadEmbeddings, RejectsMalformedInput) {
  EXPECT_THROW(parse_text("1 2\na 1 0 0"), ValidationError);  // dimension mismatch
  EXPECT_THROW(parse_text("1 2\na 1"), ValidationError);
  EXPECT_THROW(parse_text("2 1\na 1\na 2"), ValidationError);  // duplicate
  EXPECT_THROW(parse_text("0 2\n"), ValidationError);
  EXPECT_THROW(parse_text("x y\n"), ValidationError);
  EXPECT_THROW(parse_text("2 1\na 1\n"), ValidationError);  // fewer rows than declared
  EXPECT_THROW(parse_text("1 1\na one\n"), ValidationError);
}

TEST(SaveEmbeddings, CanonicalText) {
  EXPECT_EQ("1 2\na 1 0\n", to_text(make({"a"}, {1, 0}, 2)));
}

TEST(SaveEmbeddings, EmptyStoreIsRejected) {
  EXPECT_THROW(make({}, {}, 2), ValidationError);
  EXPECT_THROW(make({"a"}, {1}, 0), ValidationError);
  EXPECT_THROW(make({"a b"}, {1}, 1), ValidationError);
  EXPECT_THROW(make({""}, {1}, 1), ValidationError);
}

TEST(SaveEmbeddings, TextRoundTripIsByteIdentical) {
  Rng rng(11);
  const auto store = testkit::random_store(rng, 50, 7);
  const auto first = to_text(store);
  const auto reloaded = parse_text(first);
  EXPECT_EQ(first, to_text(reloaded));
  for (std::size_t i = 0; i < store.size(); ++i) {
    for (std::size_t k = 0; k < store.dim(); ++k) {
      EXPECT_NEAR(store.row(i)[k], reloaded.row(i)[k], 1e-6);
    }
  }
}

TEST(SaveEmbeddings, BinaryRoundTripIsExact) {
  Rng rng(12);
  const auto store = testkit::random_store(rng, 50, 9);
  const auto path = temp_path("store.bin");
  save_embeddings(store, path, EmbeddingFormat::kBinary);
  const auto back = load_embeddings(path, EmbeddingFormat::kBinary);
  EXPECT_TRUE(store == back);

  std::ifstream in(path, std::ios::binary);
  char magic[4];
  in.read(magic, 4);
  EXPECT_EQ("EMB1", std::string(magic, 4));
  fs::remove(path);
}

TEST(SaveEmbeddings, NgramSidecarRoundTrip) {
  NgramTable t(5, 2, 2, 3);
  for (std::size_t i = 0; i < t.vectors.size(); ++i) t.vectors[i] = static_cast<float>(i) * 0.5f;
  const auto path = temp_path("ngrams.bin");
  save_ngram_table(t, path);
  const auto back = load_ngram_table(path);
  EXPECT_EQ(t.bucket_count, back.bucket_count);
  EXPECT_EQ(t.ngram_min, back.ngram_min);
  EXPECT_EQ(t.ngram_max, back.ngram_max);
  EXPECT_EQ(t.vectors, back.vectors);
  fs::remove(path);
}

TEST(LoadEmbeddings, MissingFileIsIoError) {
  EXPECT_THROW(load_embeddings("/nonexistent/embias.txt", EmbeddingFormat::kText), IoError);
}

TEST(Cosine, HandExamples) {
  const auto s = make({"x", "y", "p", "q", "u", "v"}, {1, 0, 0, 0, 1, 0, 1, 2, 3, 2, 4, 6, 1, 0, 0, 1, 1, 0}, 3);
  EXPECT_DOUBLE_EQ(0.0, cosine(s, "x", "y"));
  EXPECT_NEAR(1.0, cosine(s, "p", "q"), 1e-15);
  EXPECT_DOUBLE_EQ(1.0, cosine(s, "x", "x"));

  const std::vector<float> a{1, 0}, b{1, 1};
  EXPECT_NEAR(0.70710678, cosine(a, b), 1e-8);
}

TEST(Cosine, ZeroVectorAndOov) {
  const auto s = make({"z", "a"}, {0, 0, 1, 0}, 2);
  EXPECT_THROW(cosine(s, "z", "a"), DegenerateError);
  EXPECT_THROW(cosine(s, "a", "missing"), OovError);
}

TEST(Cosine, SymmetricAndBounded) {
  Rng rng(3);
  const auto s = testkit::random_store(rng, 30, 5);
  for (const auto& a : s.words()) {
    for (const auto& b : s.words()) {
      const double c = cosine(s, a, b);
      EXPECT_EQ(c, cosine(s, b, a));
      EXPECT_LE(std::abs(c), 1.0);
    }
  }
}

TEST(NearestNeighbors, HandExample) {
  const auto s = make({"q", "a", "b"}, {1, 0, 1, 0.01f, 0, 1}, 2);
  const auto nn = nearest_neighbors(s, "q", 1);
  ASSERT_EQ(1u, nn.size());
  EXPECT_EQ("a", nn[0].word);
  EXPECT_NEAR(0.99995, nn[0].cosine, 1e-5);
}

TEST(NearestNeighbors, SizeLimits) {
  Rng rng(5);
  const auto s = testkit::random_store(rng, 10, 4);
  EXPECT_TRUE(nearest_neighbors(s, "w0", 0).empty());
  EXPECT_EQ(9u, nearest_neighbors(s, "w0", 10).size());
  EXPECT_EQ(7u, nearest_neighbors(s, "w0", 10, {"w1", "w2"}).size());
  for (const auto& n : nearest_neighbors(s, "w0", 10, {"w1"})) {
    EXPECT_NE("w0", n.word);
    EXPECT_NE("w1", n.word);
  }
  EXPECT_THROW(nearest_neighbors(s, "nope", 3), OovError);
}

TEST(NearestNeighbors, SortedWithIndexTieBreak) {
  // c and b are identical; b has the lower index.
  const auto s = make({"q", "b", "c", "d"}, {1, 0, 1, 1, 1, 1, 0, 1}, 2);
  const auto nn = nearest_neighbors(s, "q", 3);
  ASSERT_EQ(3u, nn.size());
  EXPECT_EQ("b", nn[0].word);
  EXPECT_EQ("c", nn[1].word);
  EXPECT_EQ("d", nn[2].word);

  Rng rng(8);
  const auto r = testkit::random_store(rng, 40, 6);
  const auto all = nearest_neighbors(r, "w3", 40);
  for (std::size_t i = 1; i < all.size(); ++i) EXPECT_GE(all[i - 1].cosine, all[i].cosine);
}

TEST(EmbeddingStore, SubwordFallbackResolvesUnseenWords) {
  NgramTable t(16, 2, 3, 3);
  for (std::size_t i = 0; i < t.vectors.size(); ++i) t.vectors[i] = 1.0f;
  const auto s = with_subwords(make({"cat"}, {1, 0}, 2), t);
  EXPECT_TRUE(s.resolvable("dog"));
  EXPECT_FALSE(s.contains("dog"));
  EXPECT_EQ((std::vector<float>{1, 0}), s.vector("cat"));  // exact hit wins
  const auto dog = s.vector("dog");                       // 3 n-grams of ones, no word vector
  EXPECT_FLOAT_EQ(0.75f, dog[0]);
  EXPECT_FLOAT_EQ(0.75f, dog[1]);
}
