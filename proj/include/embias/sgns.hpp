#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "embias/corpus.hpp"
#include "embias/embed_store.hpp"
#include "embias/rng.hpp"
#include "embias/subword.hpp"

namespace embias {

struct VocabEntry {
  std::string word;
  std::uint64_t count;
  friend bool operator==(const VocabEntry&, const VocabEntry&) = default;
};

// Words with count >= min_count, by descending count then lexicographic.
struct Vocab {
  std::vector<VocabEntry> entries;
  std::uint64_t min_count = 1;
  std::uint64_t total_tokens = 0;  // all corpus tokens, before thresholding

  std::size_t size() const { return entries.size(); }
  std::unordered_map<std::string, std::size_t> index() const;
};

Vocab build_vocab(const Corpus& corpus, std::uint64_t min_count);

struct TrainConfig {
  std::size_t dim = 100;
  std::size_t window = 5;
  std::size_t negatives = 5;
  std::size_t epochs = 5;
  double learning_rate = 0.025;
  double min_learning_rate = 1e-4;
  std::uint64_t min_count = 5;
  bool subword_mode = false;
  int ngram_min = 3;
  int ngram_max = 6;
  std::size_t bucket_count = 2'000'000;
  std::uint64_t seed = 1;
  // >1 enables asynchronous updates; results are then not reproducible.
  std::size_t threads = 1;

  void validate() const;
};

// Draws word ids with probability proportional to count^0.75.
class NegativeSampler {
 public:
  explicit NegativeSampler(std::span<const VocabEntry> entries, double power = 0.75);
  std::size_t sample(Rng& rng) const;
  double probability(std::size_t id) const;
  std::size_t size() const { return cumulative_.size(); }

 private:
  std::vector<double> cumulative_;  // normalized, last element == 1
};

// Raw trained parameters. The published store is derived from `input` (and
// the ngram table in subword mode) by to_store().
struct SgnsModel {
  Vocab vocab;
  std::size_t dim = 0;
  std::vector<float> input;   // |vocab| x dim
  std::vector<float> output;  // |vocab| x dim
  std::optional<NgramTable> ngrams;

  std::span<const float> input_row(std::size_t i) const { return {input.data() + i * dim, dim}; }
  EmbeddingStore to_store() const;
};

SgnsModel train_sgns_model(const Corpus& corpus, const TrainConfig& config);
EmbeddingStore train_skipgram(const Corpus& corpus, const TrainConfig& config);

}  // namespace embias
