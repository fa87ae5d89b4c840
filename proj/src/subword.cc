#include "embias/subword.hpp"

#include "embias/errors.hpp"

namespace embias {

NgramTable::NgramTable(std::size_t buckets, std::size_t d, int nmin, int nmax)
    : bucket_count(buckets), dim(d), ngram_min(nmin), ngram_max(nmax),
      vectors(buckets * d, 0.0f) {
  if (buckets == 0) throw ValidationError("ngram table needs at least one bucket");
  if (d == 0) throw ValidationError("ngram table dimension must be positive");
  if (nmin < 1 || nmin > nmax) throw ValidationError("invalid ngram length range");
}

std::uint32_t fnv1a32(std::string_view bytes) {
  std::uint32_t h = 2166136261u;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 16777619u;
  }
  return h;
}

std::vector<std::string> char_ngrams(std::string_view word, int nmin, int nmax) {
  const std::string padded = "<" + std::string(word) + ">";
  // Byte offsets of each code point start, plus the end.
  std::vector<std::size_t> starts;
  for (std::size_t i = 0; i < padded.size(); ++i) {
    if ((static_cast<unsigned char>(padded[i]) & 0xC0) != 0x80) starts.push_back(i);
  }
  starts.push_back(padded.size());
  const std::size_t chars = starts.size() - 1;

  std::vector<std::string> out;
  for (std::size_t i = 0; i < chars; ++i) {
    for (int n = nmin; n <= nmax; ++n) {
      const std::size_t end = i + static_cast<std::size_t>(n);
      if (end > chars) break;
      out.emplace_back(padded.substr(starts[i], starts[end] - starts[i]));
    }
  }
  return out;
}

std::vector<std::size_t> ngram_buckets(std::string_view word, const NgramTable& table) {
  std::vector<std::size_t> ids;
  for (const auto& g : char_ngrams(word, table.ngram_min, table.ngram_max)) {
    ids.push_back(fnv1a32(g) % table.bucket_count);
  }
  return ids;
}

std::vector<float> compose_subword(std::string_view word, const NgramTable& table,
                                   std::optional<std::span<const float>> word_vector) {
  if (word.empty()) throw ValidationError("cannot compose an empty word");
  if (word_vector && word_vector->size() != table.dim) {
    throw ValidationError("word vector dimension does not match ngram table");
  }
  std::vector<double> acc(table.dim, 0.0);
  if (word_vector) {
    for (std::size_t k = 0; k < table.dim; ++k) acc[k] = (*word_vector)[k];
  }
  const auto ids = ngram_buckets(word, table);
  for (auto id : ids) {
    const auto r = table.row(id);
    for (std::size_t k = 0; k < table.dim; ++k) acc[k] += r[k];
  }
  const double parts = 1.0 + static_cast<double>(ids.size());
  std::vector<float> out(table.dim);
  for (std::size_t k = 0; k < table.dim; ++k) out[k] = static_cast<float>(acc[k] / parts);
  return out;
}

}  // namespace embias
