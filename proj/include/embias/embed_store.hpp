#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "embias/subword.hpp"

namespace embias {

enum class EmbeddingFormat { kText, kBinary };

EmbeddingFormat parse_embedding_format(std::string_view name);

// Immutable vocabulary + V x D float matrix, optionally backed by a subword
// table for composing vectors of unseen words.
class EmbeddingStore {
 public:
  EmbeddingStore(std::vector<std::string> words, std::vector<float> matrix, std::size_t dim,
                 std::optional<NgramTable> subwords = std::nullopt);

  std::size_t size() const { return words_.size(); }
  std::size_t dim() const { return dim_; }
  const std::vector<std::string>& words() const { return words_; }
  std::span<const float> matrix() const { return matrix_; }
  const std::optional<NgramTable>& subwords() const { return subwords_; }

  std::optional<std::size_t> index_of(std::string_view word) const;
  bool contains(std::string_view word) const { return index_of(word).has_value(); }

  std::span<const float> row(std::size_t i) const { return {matrix_.data() + i * dim_, dim_}; }
  double row_norm(std::size_t i) const { return norms_[i]; }

  // Exact vocabulary hit, else subword composition when a table is present.
  std::optional<std::vector<float>> resolve(std::string_view word) const;
  bool resolvable(std::string_view word) const;
  // As resolve(), but throws OovError.
  std::vector<float> vector(std::string_view word) const;

  friend bool operator==(const EmbeddingStore& a, const EmbeddingStore& b) {
    return a.dim_ == b.dim_ && a.words_ == b.words_ && a.matrix_ == b.matrix_;
  }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<float> matrix_;
  std::vector<double> norms_;
  std::size_t dim_;
  std::optional<NgramTable> subwords_;
};

double dot(std::span<const float> a, std::span<const float> b);
double norm(std::span<const float> a);
// Cosine of two raw vectors, clamped to [-1, 1]. Throws DegenerateError on a zero vector.
double cosine(std::span<const float> a, std::span<const float> b);
double cosine(const EmbeddingStore& store, std::string_view w1, std::string_view w2);

struct Neighbor {
  std::string word;
  double cosine;
};

// Exact scan. Sorted by descending cosine, ties by vocabulary index. The query
// word, excluded words and zero vectors are never returned.
std::vector<Neighbor> nearest_neighbors(const EmbeddingStore& store, std::string_view word,
                                        std::size_t k,
                                        const std::unordered_set<std::string>& exclude = {});

EmbeddingStore read_embeddings_text(std::istream& in);
void write_embeddings_text(const EmbeddingStore& store, std::ostream& out);
EmbeddingStore read_embeddings_binary(std::istream& in);
void write_embeddings_binary(const EmbeddingStore& store, std::ostream& out);

EmbeddingStore load_embeddings(const std::filesystem::path& path, EmbeddingFormat format);
void save_embeddings(const EmbeddingStore& store, const std::filesystem::path& path,
                     EmbeddingFormat format);

// Sidecar for subword tables: "NGT1", u32 buckets, u32 dim, u32 nmin, u32 nmax,
// buckets x dim f32, all little-endian.
void save_ngram_table(const NgramTable& table, const std::filesystem::path& path);
NgramTable load_ngram_table(const std::filesystem::path& path);

// Same store with a subword table attached.
EmbeddingStore with_subwords(const EmbeddingStore& store, NgramTable table);

}  // namespace embias
