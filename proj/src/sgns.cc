#include "embias/sgns.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <thread>

#include "embias/errors.hpp"

namespace embias {

std::unordered_map<std::string, std::size_t> Vocab::index() const {
  std::unordered_map<std::string, std::size_t> idx;
  idx.reserve(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) idx.emplace(entries[i].word, i);
  return idx;
}

Vocab build_vocab(const Corpus& corpus, std::uint64_t min_count) {
  std::map<std::string, std::uint64_t> counts;
  std::uint64_t total = 0;
  for (const auto& s : corpus) {
    for (const auto& w : s) {
      ++counts[w];
      ++total;
    }
  }
  if (total == 0) throw ValidationError("empty corpus");

  Vocab vocab;
  vocab.min_count = min_count;
  vocab.total_tokens = total;
  for (auto& [w, c] : counts) {
    if (c >= min_count) vocab.entries.push_back({w, c});
  }
  if (vocab.entries.empty()) {
    throw ValidationError("no word reaches min_count " + std::to_string(min_count));
  }
  // std::map iteration is already lexicographic, so a stable sort by count
  // leaves ties in lexicographic order.
  std::stable_sort(vocab.entries.begin(), vocab.entries.end(),
                   [](const VocabEntry& a, const VocabEntry& b) { return a.count > b.count; });
  return vocab;
}

void TrainConfig::validate() const {
  if (dim == 0) throw ValidationError("dim must be >= 1");
  if (window == 0) throw ValidationError("window must be >= 1");
  if (negatives == 0) throw ValidationError("negatives must be >= 1");
  if (!(learning_rate > 0.0)) throw ValidationError("learning_rate must be > 0");
  if (threads == 0) throw ValidationError("threads must be >= 1");
  if (subword_mode) {
    if (ngram_min < 1 || ngram_min > ngram_max) {
      throw ValidationError("ngram_min must be in [1, ngram_max]");
    }
    if (bucket_count == 0) throw ValidationError("bucket_count must be >= 1");
  }
}

NegativeSampler::NegativeSampler(std::span<const VocabEntry> entries, double power) {
  if (entries.empty()) throw ValidationError("negative sampler needs a non-empty vocabulary");
  cumulative_.reserve(entries.size());
  double acc = 0.0;
  for (const auto& e : entries) {
    acc += std::pow(static_cast<double>(e.count), power);
    cumulative_.push_back(acc);
  }
  for (auto& c : cumulative_) c /= acc;
  cumulative_.back() = 1.0;
}

std::size_t NegativeSampler::sample(Rng& rng) const {
  const double u = rng.uniform();
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()),
                               cumulative_.size() - 1);
}

double NegativeSampler::probability(std::size_t id) const {
  return id == 0 ? cumulative_[0] : cumulative_[id] - cumulative_[id - 1];
}

EmbeddingStore SgnsModel::to_store() const {
  std::vector<std::string> words;
  words.reserve(vocab.size());
  std::vector<float> matrix;
  matrix.reserve(vocab.size() * dim);
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    words.push_back(vocab.entries[i].word);
    if (ngrams) {
      const auto v = compose_subword(vocab.entries[i].word, *ngrams, input_row(i));
      matrix.insert(matrix.end(), v.begin(), v.end());
    } else {
      const auto r = input_row(i);
      matrix.insert(matrix.end(), r.begin(), r.end());
    }
  }
  return EmbeddingStore(std::move(words), std::move(matrix), dim, ngrams);
}

namespace {

// Parameter access goes through relaxed atomics so that multi-threaded
// training is racy in the asynchronous-SGD sense but not undefined behaviour.
inline float load(const float& x) {
  return std::atomic_ref<float>(const_cast<float&>(x)).load(std::memory_order_relaxed);
}
inline void add(float& x, double delta) {
  std::atomic_ref<float> r(x);
  r.store(static_cast<float>(r.load(std::memory_order_relaxed) + delta), std::memory_order_relaxed);
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct Trainer {
  const TrainConfig& cfg;
  SgnsModel& model;
  const NegativeSampler& sampler;
  const std::vector<std::vector<std::size_t>>& sentences;
  const std::vector<std::vector<std::size_t>>& buckets;  // per vocab word, subword mode only
  std::uint64_t total_work;
  std::atomic<std::uint64_t>& processed;

  double current_lr() const {
    const double p = std::min(1.0, static_cast<double>(processed.load(std::memory_order_relaxed)) /
                                       static_cast<double>(std::max<std::uint64_t>(total_work, 1)));
    const double floor_lr = std::min(cfg.min_learning_rate, cfg.learning_rate);
    return cfg.learning_rate * (1.0 - p) + floor_lr * p;
  }

  void run(std::size_t begin, std::size_t end, std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t d = model.dim;
    std::vector<double> hidden(d), grad(d);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
      for (std::size_t s = begin; s < end; ++s) {
        const auto& ids = sentences[s];
        const double lr = current_lr();
        for (std::size_t i = 0; i < ids.size(); ++i) {
          const std::size_t center = ids[i];
          const std::size_t span = 1 + static_cast<std::size_t>(rng.below(cfg.window));
          const std::size_t lo = i >= span ? i - span : 0;
          const std::size_t hi = std::min(ids.size() - 1, i + span);
          for (std::size_t j = lo; j <= hi; ++j) {
            if (j == i) continue;
            compute_hidden(center, hidden);
            std::fill(grad.begin(), grad.end(), 0.0);
            update_target(ids[j], 1.0, hidden, grad, lr);
            for (std::size_t n = 0; n < cfg.negatives; ++n) {
              const std::size_t neg = sampler.sample(rng);
              if (neg == ids[j] || neg == center) continue;
              update_target(neg, 0.0, hidden, grad, lr);
            }
            apply_input_grad(center, grad);
          }
        }
        processed.fetch_add(ids.size(), std::memory_order_relaxed);
      }
    }
  }

  void compute_hidden(std::size_t word, std::vector<double>& hidden) const {
    const std::size_t d = model.dim;
    const float* row = model.input.data() + word * d;
    for (std::size_t k = 0; k < d; ++k) hidden[k] = load(row[k]);
    if (!model.ngrams) return;
    const auto& ids = buckets[word];
    for (auto b : ids) {
      const float* br = model.ngrams->vectors.data() + b * d;
      for (std::size_t k = 0; k < d; ++k) hidden[k] += load(br[k]);
    }
    const double parts = 1.0 + static_cast<double>(ids.size());
    for (auto& h : hidden) h /= parts;
  }

  void update_target(std::size_t target, double label, const std::vector<double>& hidden,
                     std::vector<double>& grad, double lr) {
    const std::size_t d = model.dim;
    float* out = model.output.data() + target * d;
    double score = 0.0;
    for (std::size_t k = 0; k < d; ++k) score += hidden[k] * load(out[k]);
    const double g = lr * (label - sigmoid(score));
    for (std::size_t k = 0; k < d; ++k) grad[k] += g * load(out[k]);
    for (std::size_t k = 0; k < d; ++k) add(out[k], g * hidden[k]);
  }

  void apply_input_grad(std::size_t word, const std::vector<double>& grad) {
    const std::size_t d = model.dim;
    float* row = model.input.data() + word * d;
    if (!model.ngrams) {
      for (std::size_t k = 0; k < d; ++k) add(row[k], grad[k]);
      return;
    }
    const auto& ids = buckets[word];
    const double scale = 1.0 / (1.0 + static_cast<double>(ids.size()));
    for (std::size_t k = 0; k < d; ++k) add(row[k], grad[k] * scale);
    for (auto b : ids) {
      float* br = model.ngrams->vectors.data() + b * d;
      for (std::size_t k = 0; k < d; ++k) add(br[k], grad[k] * scale);
    }
  }
};

}  // namespace

SgnsModel train_sgns_model(const Corpus& corpus, const TrainConfig& config) {
  config.validate();
  SgnsModel model;
  model.vocab = build_vocab(corpus, config.min_count);
  model.dim = config.dim;
  const std::size_t v = model.vocab.size();
  const std::size_t d = config.dim;

  Rng init(derive_seed(config.seed, "init"));
  const double half = 0.5 / static_cast<double>(d);
  model.input.resize(v * d);
  for (auto& x : model.input) x = static_cast<float>(init.uniform(-half, half));
  model.output.assign(v * d, 0.0f);

  std::vector<std::vector<std::size_t>> buckets;
  if (config.subword_mode) {
    model.ngrams.emplace(config.bucket_count, d, config.ngram_min, config.ngram_max);
    for (auto& x : model.ngrams->vectors) x = static_cast<float>(init.uniform(-half, half));
    buckets.reserve(v);
    for (const auto& e : model.vocab.entries) buckets.push_back(ngram_buckets(e.word, *model.ngrams));
  }

  const auto index = model.vocab.index();
  std::vector<std::vector<std::size_t>> sentences;
  std::uint64_t tokens = 0;
  for (const auto& s : corpus) {
    std::vector<std::size_t> ids;
    for (const auto& w : s) {
      if (auto it = index.find(w); it != index.end()) ids.push_back(it->second);
    }
    if (ids.size() < 2) continue;
    tokens += ids.size();
    sentences.push_back(std::move(ids));
  }

  NegativeSampler sampler(model.vocab.entries);
  std::atomic<std::uint64_t> processed{0};
  Trainer trainer{config, model, sampler, sentences, buckets, tokens * config.epochs, processed};

  if (config.threads == 1) {
    trainer.run(0, sentences.size(), derive_seed(config.seed, "train/0"));
  } else {
    std::vector<std::thread> pool;
    const std::size_t n = sentences.size();
    for (std::size_t t = 0; t < config.threads; ++t) {
      const std::size_t b = n * t / config.threads;
      const std::size_t e = n * (t + 1) / config.threads;
      pool.emplace_back([&trainer, b, e, t, &config] {
        trainer.run(b, e, derive_seed(config.seed, "train/" + std::to_string(t)));
      });
    }
    for (auto& th : pool) th.join();
  }
  return model;
}

EmbeddingStore train_skipgram(const Corpus& corpus, const TrainConfig& config) {
  return train_sgns_model(corpus, config).to_store();
}

}  // namespace embias
