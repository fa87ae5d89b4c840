#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "embias/corpus.hpp"
#include "embias/embed_store.hpp"

namespace embias {

// Two identity groups and two concept sets. concept_a is the stereotypical
// partner of group_a, concept_b of group_b.
struct StereotypeLexicon {
  std::string name;
  std::vector<std::string> group_a, group_b;
  std::vector<std::string> concept_a, concept_b;
  std::vector<std::string> provenance;

  void validate() const;  // non-empty, pairwise disjoint, no duplicates
};

// {"name", "provenance": [...], "group1": [...], "group2": [...],
//  "concept1": [...], "concept2": [...],
//  "linkage": {"group1": "concept1" | "concept2", "group2": <the other>}}
StereotypeLexicon parse_lexicon(std::string_view json_text);
StereotypeLexicon load_lexicon(const std::filesystem::path& path);
std::string lexicon_to_json(const StereotypeLexicon& lexicon);

// Seeds plus up to k nearest neighbours of each seed, excluding all seeds,
// deduplicated. Seeds first (input order), then neighbours in discovery order.
std::vector<std::string> expand_wordlist(const EmbeddingStore& store, const std::vector<std::string>& seeds,
                                         std::size_t k);

// Expands all four sets against one exclusion set (every seed of every set).
// A neighbour reached from more than one set is dropped from all of them.
StereotypeLexicon expand_lexicon(const EmbeddingStore& store, const StereotypeLexicon& lexicon,
                                 std::size_t k);

enum class StereotypeTag { kPro, kAnti, kNeutral, kMixed };
std::string_view to_string(StereotypeTag tag);
StereotypeTag parse_stereotype_tag(std::string_view name);

struct TaggedSentence {
  StereotypeTag tag;
  Sentence tokens;
};
using TaggedCorpus = std::vector<TaggedSentence>;

TaggedCorpus tag_sentences(const Corpus& corpus, const StereotypeLexicon& lexicon);

// One sentence per line: "<TAG>\t<tokens>".
void write_tagged(const TaggedCorpus& tagged, std::ostream& out);
TaggedCorpus read_tagged(std::istream& in);

enum class Direction { kDebias, kOverbias };
std::string_view to_string(Direction d);
Direction parse_direction(std::string_view name);

struct BalanceOptions {
  Direction direction = Direction::kDebias;
  double budget = 0.05;    // max removed fraction of the corpus, in (0, 0.05]
  double strength = 1.0;   // fraction of the target removal, in [0, 1]
  std::uint64_t seed = 0;
};

struct BalanceResult {
  Corpus corpus;                     // subsequence of the input
  std::vector<std::size_t> removed;  // input indices, ascending
  std::size_t pro_before = 0, anti_before = 0;
  std::size_t pro_after = 0, anti_after = 0;
};

// Number of sentences balance_corpus would remove.
std::size_t balance_removal_count(std::size_t total, std::size_t pro, std::size_t anti,
                                  const BalanceOptions& opts);

// Debias removes PRO sentences toward PRO == ANTI; overbias removes ANTI
// sentences toward ANTI == 0. Never more than floor(budget * N).
BalanceResult balance_corpus(const TaggedCorpus& tagged, const BalanceOptions& opts);

using WordPair = std::pair<std::string, std::string>;

struct ConstraintSet {
  std::vector<WordPair> attract;
  std::vector<WordPair> repel;

  bool empty() const { return attract.empty() && repel.empty(); }
  void validate() const;  // no self-pairs, no pair in both lists
};

// Debias: attract = anti-stereotypical pairs, repel = pro-stereotypical pairs.
// Overbias swaps the two.
ConstraintSet build_constraint_pairs(const StereotypeLexicon& lexicon, Direction direction);

struct ARHyper {
  double attract_margin = 0.6;
  double repel_margin = 0.0;
  double reg_strength = 1e-9;
  double learning_rate = 0.05;
  std::size_t epochs = 5;
  std::size_t batch_size = 50;
  std::uint64_t seed = 0;

  void validate() const;
};

// Attract-Repel specialisation. Returns a new store; only words that appear in
// a resolvable constraint pair are modified.
EmbeddingStore attract_repel(const EmbeddingStore& store, const ConstraintSet& constraints,
                             const ARHyper& hyper);

}  // namespace embias
