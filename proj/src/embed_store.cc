#include "embias/embed_store.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "embias/errors.hpp"

namespace embias {

namespace {

bool has_space(std::string_view w) {
  return std::any_of(w.begin(), w.end(), [](unsigned char c) { return std::isspace(c); });
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
void put_le(std::ostream& out, T value) {
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
  unsigned char buf[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(buf), sizeof(T))) {
    throw ValidationError("truncated binary file");
  }
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  T value;
  std::memcpy(&value, buf, sizeof(T));
  return value;
}

std::string format_float(float v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", static_cast<double>(v));
  return buf;
}

}  // namespace

EmbeddingFormat parse_embedding_format(std::string_view name) {
  if (name == "text" || name == "txt" || name == "vec") return EmbeddingFormat::kText;
  if (name == "binary" || name == "bin") return EmbeddingFormat::kBinary;
  throw ValidationError("unknown embedding format: " + std::string(name));
}

EmbeddingStore::EmbeddingStore(std::vector<std::string> words, std::vector<float> matrix,
                               std::size_t dim, std::optional<NgramTable> subwords)
    : words_(std::move(words)), matrix_(std::move(matrix)), dim_(dim),
      subwords_(std::move(subwords)) {
  if (dim_ == 0) throw ValidationError("embedding dimension must be positive");
  if (words_.empty()) throw ValidationError("embedding store has zero vocabulary");
  if (matrix_.size() != words_.size() * dim_) {
    throw ValidationError("matrix size does not match vocabulary size x dimension");
  }
  if (subwords_ && subwords_->dim != dim_) {
    throw ValidationError("subword table dimension does not match store dimension");
  }
  index_.reserve(words_.size());
  for (std::size_t i = 0; i < words_.size(); ++i) {
    const auto& w = words_[i];
    if (w.empty() || has_space(w)) throw ValidationError("invalid word at row " + std::to_string(i));
    if (!index_.emplace(w, i).second) throw ValidationError("duplicate word: " + w);
  }
  norms_.resize(words_.size());
  for (std::size_t i = 0; i < words_.size(); ++i) norms_[i] = norm(row(i));
}

std::optional<std::size_t> EmbeddingStore::index_of(std::string_view word) const {
  auto it = index_.find(std::string(word));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::vector<float>> EmbeddingStore::resolve(std::string_view word) const {
  if (auto i = index_of(word)) {
    auto r = row(*i);
    return std::vector<float>(r.begin(), r.end());
  }
  if (subwords_ && !word.empty()) return compose_subword(word, *subwords_, std::nullopt);
  return std::nullopt;
}

bool EmbeddingStore::resolvable(std::string_view word) const {
  return contains(word) || (subwords_.has_value() && !word.empty());
}

std::vector<float> EmbeddingStore::vector(std::string_view word) const {
  auto v = resolve(word);
  if (!v) throw OovError(std::string(word));
  return std::move(*v);
}

double dot(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    s += static_cast<double>(a[k]) * static_cast<double>(b[k]);
  }
  return s;
}

double norm(std::span<const float> a) { return std::sqrt(dot(a, a)); }

double cosine(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw ValidationError("cosine of vectors with different dimensions");
  const double na = norm(a);
  const double nb = norm(b);
  if (na == 0.0 || nb == 0.0) throw DegenerateError("cosine of a zero-norm vector");
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

double cosine(const EmbeddingStore& store, std::string_view w1, std::string_view w2) {
  const auto a = store.vector(w1);
  const auto b = store.vector(w2);
  return cosine(a, b);
}

std::vector<Neighbor> nearest_neighbors(const EmbeddingStore& store, std::string_view word,
                                        std::size_t k,
                                        const std::unordered_set<std::string>& exclude) {
  const auto query = store.vector(word);
  const double qn = norm(query);
  if (qn == 0.0) throw DegenerateError("nearest neighbours of a zero-norm vector: " + std::string(word));
  if (k == 0) return {};

  struct Scored {
    double cos;
    std::size_t index;
  };
  std::vector<Scored> scored;
  scored.reserve(store.size());
  for (std::size_t i = 0; i < store.size(); ++i) {
    const auto& w = store.words()[i];
    if (w == word || exclude.count(w) || store.row_norm(i) == 0.0) continue;
    const double c = std::clamp(dot(query, store.row(i)) / (qn * store.row_norm(i)), -1.0, 1.0);
    scored.push_back({c, i});
  }
  const auto cmp = [](const Scored& a, const Scored& b) {
    return a.cos != b.cos ? a.cos > b.cos : a.index < b.index;
  };
  const std::size_t take = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take), scored.end(), cmp);
  std::vector<Neighbor> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    out.push_back({store.words()[scored[i].index], scored[i].cos});
  }
  return out;
}

EmbeddingStore read_embeddings_text(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("malformed header: empty file");
  const auto head = split_ws(line);
  std::size_t vocab = 0, dim = 0;
  if (head.size() != 2 || !parse_number(head[0], vocab) || !parse_number(head[1], dim)) {
    throw ValidationError("malformed header: expected \"V D\"");
  }
  if (vocab == 0) throw ValidationError("embedding file has zero vocabulary");
  if (dim == 0) throw ValidationError("malformed header: dimension must be positive");

  std::vector<std::string> words;
  std::vector<float> matrix;
  words.reserve(vocab);
  matrix.reserve(vocab * dim);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = split_ws(line);
    if (fields.empty()) continue;
    if (words.size() == vocab) {
      throw ValidationError("more rows than declared in header (line " + std::to_string(line_no) + ")");
    }
    if (fields.size() != dim + 1) {
      throw ValidationError("dimension mismatch on line " + std::to_string(line_no) + ": expected " +
                            std::to_string(dim) + " values, got " + std::to_string(fields.size() - 1));
    }
    words.emplace_back(fields[0]);
    for (std::size_t k = 1; k <= dim; ++k) {
      float v;
      if (!parse_number(fields[k], v)) {
        throw ValidationError("bad number on line " + std::to_string(line_no));
      }
      matrix.push_back(v);
    }
  }
  if (words.size() != vocab) {
    throw ValidationError("expected " + std::to_string(vocab) + " rows, found " + std::to_string(words.size()));
  }
  return EmbeddingStore(std::move(words), std::move(matrix), dim);
}

void write_embeddings_text(const EmbeddingStore& store, std::ostream& out) {
  out << store.size() << ' ' << store.dim() << '\n';
  for (std::size_t i = 0; i < store.size(); ++i) {
    out << store.words()[i];
    for (float v : store.row(i)) out << ' ' << format_float(v);
    out << '\n';
  }
}

EmbeddingStore read_embeddings_binary(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::string_view(magic, 4) != "EMB1") {
    throw ValidationError("malformed header: bad magic");
  }
  const auto vocab = get_le<std::uint32_t>(in);
  const auto dim = get_le<std::uint32_t>(in);
  if (vocab == 0) throw ValidationError("embedding file has zero vocabulary");
  if (dim == 0) throw ValidationError("malformed header: dimension must be positive");
  std::vector<std::string> words;
  std::vector<float> matrix;
  words.reserve(vocab);
  matrix.reserve(static_cast<std::size_t>(vocab) * dim);
  for (std::uint32_t i = 0; i < vocab; ++i) {
    const auto len = get_le<std::uint16_t>(in);
    std::string w(len, '\0');
    if (!in.read(w.data(), len)) throw ValidationError("truncated binary file");
    words.push_back(std::move(w));
    for (std::uint32_t k = 0; k < dim; ++k) matrix.push_back(get_le<float>(in));
  }
  return EmbeddingStore(std::move(words), std::move(matrix), dim);
}

void write_embeddings_binary(const EmbeddingStore& store, std::ostream& out) {
  out.write("EMB1", 4);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(store.size()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(store.dim()));
  for (std::size_t i = 0; i < store.size(); ++i) {
    const auto& w = store.words()[i];
    if (w.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw ValidationError("word too long for binary format: " + w.substr(0, 32));
    }
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(w.size()));
    out.write(w.data(), static_cast<std::streamsize>(w.size()));
    for (float v : store.row(i)) put_le<float>(out, v);
  }
}

EmbeddingStore load_embeddings(const std::filesystem::path& path, EmbeddingFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return format == EmbeddingFormat::kText ? read_embeddings_text(in) : read_embeddings_binary(in);
}

void save_embeddings(const EmbeddingStore& store, const std::filesystem::path& path,
                     EmbeddingFormat format) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  if (format == EmbeddingFormat::kText) {
    write_embeddings_text(store, out);
  } else {
    write_embeddings_binary(store, out);
  }
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

void save_ngram_table(const NgramTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write("NGT1", 4);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(table.bucket_count));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(table.dim));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(table.ngram_min));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(table.ngram_max));
  for (float v : table.vectors) put_le<float>(out, v);
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

NgramTable load_ngram_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::string_view(magic, 4) != "NGT1") {
    throw ValidationError("malformed ngram table header");
  }
  const auto buckets = get_le<std::uint32_t>(in);
  const auto dim = get_le<std::uint32_t>(in);
  const auto nmin = get_le<std::uint32_t>(in);
  const auto nmax = get_le<std::uint32_t>(in);
  NgramTable table(buckets, dim, static_cast<int>(nmin), static_cast<int>(nmax));
  for (auto& v : table.vectors) v = get_le<float>(in);
  return table;
}

EmbeddingStore with_subwords(const EmbeddingStore& store, NgramTable table) {
  auto m = store.matrix();
  return EmbeddingStore(store.words(), std::vector<float>(m.begin(), m.end()), store.dim(),
                        std::move(table));
}

}  // namespace embias
