#include "embias/downstream.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>

#include "embias/errors.hpp"
#include "embias/rng.hpp"
#include "embias/text.hpp"

namespace embias {

std::string_view to_string(Group g) {
  switch (g) {
    case Group::kA: return "a";
    case Group::kB: return "b";
    case Group::kNeutral: return "neutral";
  }
  return "neutral";
}

Group parse_group(std::string_view name) {
  if (name == "a") return Group::kA;
  if (name == "b") return Group::kB;
  if (name == "neutral") return Group::kNeutral;
  throw ValidationError("unknown group tag: " + std::string(name));
}

std::vector<LabeledExample> read_labeled(std::istream& in) {
  std::vector<LabeledExample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) {
      throw ValidationError("labeled data line " + std::to_string(line_no) + ": expected 3 tab-separated columns");
    }
    const std::string_view v(line);
    const auto label = v.substr(0, t1);
    if (label != "0" && label != "1") {
      throw ValidationError("labeled data line " + std::to_string(line_no) + ": label must be 0 or 1");
    }
    LabeledExample ex;
    ex.positive = label == "1";
    ex.group = parse_group(v.substr(t1 + 1, t2 - t1 - 1));
    ex.tokens = tokenize(v.substr(t2 + 1));
    if (ex.tokens.empty()) {
      throw ValidationError("labeled data line " + std::to_string(line_no) + ": empty text");
    }
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<LabeledExample> load_labeled(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_labeled(in);
}

void write_labeled(const std::vector<LabeledExample>& examples, std::ostream& out) {
  for (const auto& ex : examples) {
    out << (ex.positive ? '1' : '0') << '\t' << to_string(ex.group) << '\t' << join_tokens(ex.tokens) << '\n';
  }
}

Features featurize(const EmbeddingStore& store, const Sentence& tokens) {
  Features f;
  f.values.assign(store.dim(), 0.0);
  std::size_t hits = 0;
  for (const auto& t : tokens) {
    const auto v = store.resolve(t);
    if (!v) continue;
    for (std::size_t k = 0; k < store.dim(); ++k) f.values[k] += (*v)[k];
    ++hits;
  }
  if (hits == 0) {
    f.empty = true;
    return f;
  }
  for (auto& x : f.values) x /= static_cast<double>(hits);
  return f;
}

double Classifier::probability(std::span<const double> features) const {
  double z = bias_;
  for (std::size_t k = 0; k < weights_.size(); ++k) z += weights_[k] * features[k];
  return 1.0 / (1.0 + std::exp(-z));
}

double Classifier::probability(const EmbeddingStore& store, const Sentence& tokens) const {
  return probability(featurize(store, tokens).values);
}

Classifier train_classifier(const EmbeddingStore& store, const std::vector<LabeledExample>& train,
                            const ClassifierConfig& config) {
  bool has_pos = false, has_neg = false;
  for (const auto& ex : train) (ex.positive ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg) throw ValidationError("training set must contain both labels");
  if (!(config.learning_rate > 0.0)) throw ValidationError("classifier learning rate must be > 0");
  if (config.l2 < 0.0) throw ValidationError("classifier l2 must be >= 0");

  std::vector<std::vector<double>> feats;
  feats.reserve(train.size());
  for (const auto& ex : train) feats.push_back(featurize(store, ex.tokens).values);

  std::vector<double> w(store.dim(), 0.0);
  double b = 0.0;
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(config.seed);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    for (auto i : order) {
      const auto& x = feats[i];
      double z = b;
      for (std::size_t k = 0; k < w.size(); ++k) z += w[k] * x[k];
      const double p = 1.0 / (1.0 + std::exp(-z));
      const double err = p - (train[i].positive ? 1.0 : 0.0);
      for (std::size_t k = 0; k < w.size(); ++k) {
        w[k] -= config.learning_rate * (err * x[k] + config.l2 * w[k]);
      }
      b -= config.learning_rate * err;
    }
  }
  return Classifier(std::move(w), b);
}

Confusion GroupedConfusion::overall() const {
  Confusion c;
  for (const auto& g : groups) c += g;
  return c;
}

GroupedConfusion grouped_confusion(const Classifier& clf, const EmbeddingStore& store,
                                   const std::vector<LabeledExample>& test) {
  GroupedConfusion out;
  for (const auto& ex : test) {
    const bool pred = clf.predict(store, ex.tokens);
    auto& c = out[ex.group];
    if (pred && ex.positive) ++c.tp;
    else if (pred && !ex.positive) ++c.fp;
    else if (!pred && ex.positive) ++c.fn;
    else ++c.tn;
  }
  return out;
}

double precision(const Confusion& c) {
  if (c.tp + c.fp == 0) throw DegenerateError("precision undefined: no predicted positives");
  return static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
}

double recall(const Confusion& c) {
  if (c.tp + c.fn == 0) throw DegenerateError("recall undefined: no actual positives");
  return static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
}

double accuracy(const Confusion& c) {
  if (c.total() == 0) throw DegenerateError("accuracy undefined: no examples");
  return static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
}

double f1(const Confusion& c) {
  if (2 * c.tp + c.fp + c.fn == 0) throw DegenerateError("F1 undefined: no positives");
  return 2.0 * static_cast<double>(c.tp) / static_cast<double>(2 * c.tp + c.fp + c.fn);
}

namespace {

Group other_group(Group reference) {
  if (reference == Group::kNeutral) throw ValidationError("reference group must be a or b");
  return reference == Group::kA ? Group::kB : Group::kA;
}

}  // namespace

double precision_gap(const GroupedConfusion& conf, Group reference) {
  const Group other = other_group(reference);
  return precision(conf[reference]) - precision(conf[other]);
}

double recall_gap(const GroupedConfusion& conf, Group reference) {
  const Group other = other_group(reference);
  return recall(conf[reference]) - recall(conf[other]);
}

}  // namespace embias
