#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace embias {

// Hashed character n-gram vectors (fastText-style subword buckets).
struct NgramTable {
  std::size_t bucket_count = 0;
  std::size_t dim = 0;
  int ngram_min = 3;
  int ngram_max = 6;
  std::vector<float> vectors;  // bucket_count x dim, row-major

  NgramTable() = default;
  NgramTable(std::size_t buckets, std::size_t dim, int nmin, int nmax);

  std::span<float> row(std::size_t bucket) {
    return {vectors.data() + bucket * dim, dim};
  }
  std::span<const float> row(std::size_t bucket) const {
    return {vectors.data() + bucket * dim, dim};
  }
};

// 32-bit FNV-1a over the raw UTF-8 bytes.
std::uint32_t fnv1a32(std::string_view bytes);

// Character n-grams of "<word>" for every length in [nmin, nmax], counted in
// UTF-8 code points. Ordered by start position, then length.
std::vector<std::string> char_ngrams(std::string_view word, int nmin, int nmax);

// Bucket ids for the n-grams of `word`, in char_ngrams order.
std::vector<std::size_t> ngram_buckets(std::string_view word, const NgramTable& table);

// (word_vector or 0) + sum of the word's n-gram bucket rows, divided by
// (1 + number of n-grams). Accumulates in double.
std::vector<float> compose_subword(std::string_view word, const NgramTable& table,
                                   std::optional<std::span<const float>> word_vector);

}  // namespace embias
