#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace embias {

using Sentence = std::vector<std::string>;
using Corpus = std::vector<Sentence>;

// Whitespace tokenization of an already-normalized line.
Sentence split_tokens(std::string_view line);

// One sentence per line; blank lines are skipped.
Corpus read_corpus(std::istream& in);
Corpus read_corpus(const std::filesystem::path& path);
void write_corpus(const Corpus& corpus, std::ostream& out);
void write_corpus(const Corpus& corpus, const std::filesystem::path& path);

std::string join_tokens(const Sentence& sentence);

}  // namespace embias
