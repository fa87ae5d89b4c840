#include "embias/corpus.hpp"

#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>

#include "embias/errors.hpp"

namespace embias {

Sentence split_tokens(std::string_view line) {
  Sentence out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

Corpus read_corpus(std::istream& in) {
  Corpus corpus;
  std::string line;
  while (std::getline(in, line)) {
    auto s = split_tokens(line);
    if (!s.empty()) corpus.push_back(std::move(s));
  }
  return corpus;
}

Corpus read_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_corpus(in);
}

std::string join_tokens(const Sentence& sentence) {
  std::string out;
  for (std::size_t i = 0; i < sentence.size(); ++i) {
    if (i) out += ' ';
    out += sentence[i];
  }
  return out;
}

void write_corpus(const Corpus& corpus, std::ostream& out) {
  for (const auto& s : corpus) out << join_tokens(s) << '\n';
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  write_corpus(corpus, out);
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace embias
