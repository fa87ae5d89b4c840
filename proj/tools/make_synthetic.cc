// Writes the bundled synthetic experiment: a corpus with a planted
// gender/career stereotype, labeled downstream data, a WEAT test, a lexicon
// and an experiment config.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "embias/rng.hpp"

namespace fs = std::filesystem;
using embias::Rng;

namespace {

const std::vector<std::string> kFemale{"she", "her", "woman", "mother", "girl", "sister", "daughter", "wife"};
const std::vector<std::string> kMale{"he", "him", "man", "father", "boy", "brother", "son", "husband"};
const std::vector<std::string> kFamily{"home",     "family",  "children", "kitchen",
                                       "parents",  "wedding", "cooking",  "nursery"};
const std::vector<std::string> kCareer{"career",     "salary",  "office",     "business",
                                       "executive",  "manager", "profession", "corporation"};
const std::vector<std::string> kAbusive{"awful", "hate", "stupid", "useless", "pathetic", "disgusting", "idiot",
                                        "trash"};
const std::vector<std::string> kFiller{
    "the",    "a",      "was",    "is",     "went",   "saw",    "today",  "yesterday", "very",   "quite",
    "talked", "about",  "with",   "from",   "into",   "over",   "under",  "after",     "before", "because",
    "tree",   "river",  "blue",   "stone",  "cloud",  "music",  "bread",  "window",    "street", "garden",
    "train",  "city",   "winter", "summer", "coffee", "paper",  "phone",  "table",     "chair",  "light",
    "green",  "red",    "small",  "large",  "old",    "new",    "quick",  "slow",      "happy",  "tired",
    "ran",    "walked", "said",   "read",   "wrote",  "found",  "lost",   "called",    "asked",  "left",
    "book",   "song",   "movie",  "game",   "road",   "bridge", "field",  "market",    "shop",   "park",
    "dog",    "cat",    "bird",   "horse",  "fish",   "apple",  "orange", "sugar",     "salt",   "water",
    "night",  "morning", "week",  "year",   "hour",   "minute", "story",  "picture",   "letter", "idea"};

const std::string& pick(Rng& rng, const std::vector<std::string>& v) { return v[rng.below(v.size())]; }

// `n` distinct words from each of `a` and `b`.
std::vector<std::string> pick_pairs(Rng& rng, const std::vector<std::string>& a, const std::vector<std::string>& b,
                                    std::size_t n) {
  std::vector<std::string> out;
  for (const auto* v : {&a, &b}) {
    auto pool = *v;
    rng.shuffle(pool);
    out.insert(out.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n));
  }
  return out;
}

// Filler tokens with the given words inserted at random positions.
std::string sentence(Rng& rng, std::vector<std::string> words, std::size_t len) {
  std::vector<std::string> out;
  while (out.size() + words.size() < len) out.push_back(pick(rng, kFiller));
  for (auto& w : words) out.insert(out.begin() + static_cast<std::ptrdiff_t>(rng.below(out.size() + 1)), w);
  std::string s;
  for (const auto& w : out) s += (s.empty() ? "" : " ") + w;
  return s;
}

void write_lines(const fs::path& p, const std::vector<std::string>& lines) {
  std::ofstream out(p, std::ios::trunc | std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  for (const auto& l : lines) out << l << '\n';
}

void write_json(const fs::path& p, const nlohmann::ordered_json& j) {
  std::ofstream out(p, std::ios::trunc | std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << j.dump(2) << '\n';
}

// label \t group \t text. Abusive words make a sentence positive; a fraction
// of labels is flipped, more often for group b.
std::vector<std::string> labeled(Rng& rng, std::size_t n) {
  std::vector<std::string> rows;
  for (std::size_t i = 0; i < n; ++i) {
    const double g = rng.uniform();
    const std::string group = g < 0.4 ? "a" : g < 0.8 ? "b" : "neutral";
    std::vector<std::string> words;
    if (group == "a") words.push_back(pick(rng, kFemale));
    if (group == "b") words.push_back(pick(rng, kMale));
    if (rng.uniform() < 0.3) words.push_back(pick(rng, rng.uniform() < 0.5 ? kFamily : kCareer));
    bool positive = rng.uniform() < 0.45;
    if (positive) {
      words.push_back(pick(rng, kAbusive));
      if (rng.uniform() < 0.3) words.push_back(pick(rng, kAbusive));
    }
    const double flip = group == "b" ? 0.15 : 0.05;
    if (rng.uniform() < flip) positive = !positive;
    rows.push_back(std::string(positive ? "1" : "0") + "\t" + group + "\t" +
                   sentence(rng, words, 6 + rng.below(5)));
  }
  return rows;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generate the synthetic bias experiment"};
  fs::path out = "data/synthetic";
  std::uint64_t seed = 20240601;
  std::size_t sentences = 4000, pro = 300, anti = 200;
  double mention_rate = 0.05;
  std::size_t per_side = 2;
  app.add_option("--out", out, "Output directory");
  app.add_option("--seed", seed, "Generator seed");
  app.add_option("--sentences", sentences, "Corpus size");
  app.add_option("--pro", pro, "Pro-stereotypical sentences");
  app.add_option("--anti", anti, "Anti-stereotypical sentences");
  app.add_option("--mention-rate", mention_rate, "Share of other sentences with a lone group (and, separately, concept) word");
  app.add_option("--per-side", per_side, "Group and concept words in each stereotyped sentence")
      ->check(CLI::Range(1, 4));
  CLI11_PARSE(app, argc, argv);

  try {
    if (pro + anti > sentences) throw std::runtime_error("--pro + --anti exceeds --sentences");
    fs::create_directories(out);
    Rng rng(seed);

    std::vector<std::string> corpus;
    const auto len = [&] { return 6 + rng.below(5); };
    for (std::size_t i = 0; i < pro; ++i) {
      const bool f = rng.uniform() < 0.5;
      corpus.push_back(sentence(rng, pick_pairs(rng, f ? kFemale : kMale, f ? kFamily : kCareer, per_side), len()));
    }
    for (std::size_t i = 0; i < anti; ++i) {
      const bool f = rng.uniform() < 0.5;
      corpus.push_back(sentence(rng, pick_pairs(rng, f ? kFemale : kMale, f ? kCareer : kFamily, per_side), len()));
    }
    const std::size_t rest = sentences - pro - anti;
    for (std::size_t i = 0; i < rest; ++i) {
      std::vector<std::string> words;
      const double kind = rng.uniform();
      if (kind < mention_rate) {
        words.push_back(pick(rng, rng.uniform() < 0.5 ? kFemale : kMale));
      } else if (kind < 2 * mention_rate) {
        words.push_back(pick(rng, rng.uniform() < 0.5 ? kFamily : kCareer));
      } else if (kind < 2 * mention_rate + 0.25) {
        words.push_back(pick(rng, kAbusive));
        words.push_back(pick(rng, kAbusive));
      }
      corpus.push_back(sentence(rng, words, len()));
    }
    rng.shuffle(corpus);
    write_lines(out / "corpus.txt", corpus);
    write_lines(out / "train.tsv", labeled(rng, 600));
    write_lines(out / "test.tsv", labeled(rng, 400));

    write_json(out / "weat_synthetic.json", {{"name", "synthetic_career_family"},
                                             {"language", "en"},
                                             {"X", kCareer},
                                             {"Y", kFamily},
                                             {"A", kMale},
                                             {"B", kFemale}});
    write_json(out / "lexicon.json", {{"name", "synthetic_gender"},
                                      {"provenance", {"synthetic_career_family"}},
                                      {"group1", kFemale},
                                      {"group2", kMale},
                                      {"concept1", kFamily},
                                      {"concept2", kCareer},
                                      {"linkage", {{"group1", "concept1"}, {"group2", "concept2"}}}});
    write_json(out / "config.json",
               {{"seed", 7},
                {"output_dir", "out"},
                {"embedding",
                 {{"corpus", "corpus.txt"},
                  {"train", {{"dim", 32}, {"window", 5}, {"negatives", 5}, {"epochs", 5}, {"min_count", 5}}}}},
                {"weat_tests", {"weat_synthetic.json"}},
                {"lexicon", "lexicon.json"},
                {"expand_k", 2},
                {"methods", {"preprocessing", "postprocessing"}},
                {"directions", {"debias", "overbias"}},
                {"strengths", {0.5, 1.0}},
                {"balance_budget", 0.05},
                {"downstream", {{"train", "train.tsv"}, {"test", "test.tsv"}, {"reference_group", "a"}}},
                {"correlation_permutations", 2000}});
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
