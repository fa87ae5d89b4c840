#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "embias/bias_mod.hpp"
#include "embias/corpus.hpp"
#include "embias/embed_store.hpp"
#include "embias/rng.hpp"
#include "embias/weat.hpp"

namespace embias::testkit {

// Uniform [-1, 1] components, words "w0".."w{V-1}".
EmbeddingStore random_store(Rng& rng, std::size_t vocab, std::size_t dim);

// Like random_store, but components are 0 or +/-2^-k (k in 0..7). Multiplying
// such a value by any float is exact, so scaled copies of the store carry no
// rounding.
EmbeddingStore dyadic_store(Rng& rng, std::size_t vocab, std::size_t dim);

// `copies` lines of "x y" followed by `copies` lines of "p q".
Corpus planted_corpus(std::size_t copies);

// Synthetic stereotyped space: group terms cluster tightly (cos 0.9), concept
// terms lean toward their linked group by graded amounts, plus filler words.
struct BiasedFixture {
  EmbeddingStore store;
  StereotypeLexicon lexicon;
  WeatTest test;  // X = concept_b, Y = concept_a, A = group_b, B = group_a
  std::vector<std::string> filler;
};

BiasedFixture biased_fixture(std::uint64_t seed);

}  // namespace embias::testkit
