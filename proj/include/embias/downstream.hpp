#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "embias/corpus.hpp"
#include "embias/embed_store.hpp"

namespace embias {

enum class Group { kA = 0, kB = 1, kNeutral = 2 };
std::string_view to_string(Group g);
Group parse_group(std::string_view name);

struct LabeledExample {
  Sentence tokens;
  bool positive = false;
  Group group = Group::kNeutral;
};

// TSV: label (0/1) \t group (a/b/neutral) \t text. Text is run through tokenize().
std::vector<LabeledExample> read_labeled(std::istream& in);
std::vector<LabeledExample> load_labeled(const std::filesystem::path& path);
void write_labeled(const std::vector<LabeledExample>& examples, std::ostream& out);

struct Features {
  std::vector<double> values;
  bool empty = false;  // no token resolved; values are all zero
};

// Mean of the resolvable token vectors.
Features featurize(const EmbeddingStore& store, const Sentence& tokens);

struct ClassifierConfig {
  double learning_rate = 0.1;
  std::size_t epochs = 20;
  double l2 = 1e-4;
  std::uint64_t seed = 0;
};

// Logistic regression over mean-pooled frozen embeddings.
class Classifier {
 public:
  Classifier(std::vector<double> weights, double bias) : weights_(std::move(weights)), bias_(bias) {}

  double probability(std::span<const double> features) const;
  double probability(const EmbeddingStore& store, const Sentence& tokens) const;
  bool predict(const EmbeddingStore& store, const Sentence& tokens) const {
    return probability(store, tokens) >= 0.5;
  }

  const std::vector<double>& weights() const { return weights_; }
  double bias() const { return bias_; }

 private:
  std::vector<double> weights_;
  double bias_;
};

Classifier train_classifier(const EmbeddingStore& store, const std::vector<LabeledExample>& train,
                            const ClassifierConfig& config);

struct Confusion {
  std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;

  std::uint64_t total() const { return tp + fp + fn + tn; }
  Confusion& operator+=(const Confusion& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    tn += o.tn;
    return *this;
  }
  friend bool operator==(const Confusion&, const Confusion&) = default;
};

// Indexed by Group.
struct GroupedConfusion {
  std::array<Confusion, 3> groups{};

  Confusion& operator[](Group g) { return groups[static_cast<std::size_t>(g)]; }
  const Confusion& operator[](Group g) const { return groups[static_cast<std::size_t>(g)]; }
  Confusion overall() const;
};

// Predictions at threshold 0.5.
GroupedConfusion grouped_confusion(const Classifier& clf, const EmbeddingStore& store,
                                   const std::vector<LabeledExample>& test);

// Throw DegenerateError when undefined (no predicted / no actual positives).
double precision(const Confusion& c);
double recall(const Confusion& c);
double accuracy(const Confusion& c);
double f1(const Confusion& c);

// metric(reference) - metric(other), reference is kA or kB.
double precision_gap(const GroupedConfusion& conf, Group reference);
double recall_gap(const GroupedConfusion& conf, Group reference);

}  // namespace embias
