#include "fixtures.hpp"

#include <algorithm>
#include <cmath>

namespace embias::testkit {

EmbeddingStore random_store(Rng& rng, std::size_t vocab, std::size_t dim) {
  std::vector<std::string> words;
  std::vector<float> m;
  for (std::size_t i = 0; i < vocab; ++i) {
    words.push_back("w" + std::to_string(i));
    for (std::size_t k = 0; k < dim; ++k) m.push_back(static_cast<float>(rng.uniform(-1.0, 1.0)));
  }
  return EmbeddingStore(std::move(words), std::move(m), dim);
}

EmbeddingStore dyadic_store(Rng& rng, std::size_t vocab, std::size_t dim) {
  std::vector<std::string> words;
  std::vector<float> m;
  for (std::size_t i = 0; i < vocab; ++i) {
    words.push_back("w" + std::to_string(i));
    for (std::size_t k = 0; k < dim; ++k) {
      const auto pick = rng.below(17);
      if (pick == 16) {
        m.push_back(0.0f);
        continue;
      }
      const float sign = (pick & 1) ? -1.0f : 1.0f;
      m.push_back(sign * std::ldexp(1.0f, -static_cast<int>(pick / 2)));
    }
  }
  return EmbeddingStore(std::move(words), std::move(m), dim);
}

Corpus planted_corpus(std::size_t copies) {
  Corpus c;
  for (std::size_t i = 0; i < copies; ++i) c.push_back({"x", "y"});
  for (std::size_t i = 0; i < copies; ++i) c.push_back({"p", "q"});
  return c;
}

namespace {

// Random orthonormal vectors via Gram-Schmidt on Gaussian draws.
std::vector<std::vector<double>> orthonormal(Rng& rng, std::size_t count, std::size_t dim) {
  std::vector<std::vector<double>> basis;
  while (basis.size() < count) {
    std::vector<double> v(dim);
    for (auto& x : v) x = rng.normal();
    for (const auto& b : basis) {
      double d = 0;
      for (std::size_t k = 0; k < dim; ++k) d += v[k] * b[k];
      for (std::size_t k = 0; k < dim; ++k) v[k] -= d * b[k];
    }
    double n = 0;
    for (double x : v) n += x * x;
    n = std::sqrt(n);
    if (n < 1e-6) continue;
    for (auto& x : v) x /= n;
    basis.push_back(std::move(v));
  }
  return basis;
}

}  // namespace

BiasedFixture biased_fixture(std::uint64_t seed) {
  Rng rng(seed);
  const std::vector<std::string> group_a{"she", "her", "woman", "mother", "girl", "sister"};
  const std::vector<std::string> group_b{"he", "him", "man", "father", "boy", "brother"};
  const std::vector<std::string> concept_a{"home", "family", "children", "kitchen", "parents", "wedding"};
  const std::vector<std::string> concept_b{"career", "salary", "office", "business", "executive", "management"};
  const std::vector<std::string> filler{"tree", "river", "blue", "stone", "cloud", "music", "bread", "window"};

  constexpr std::size_t dim = 48;
  const std::size_t nwords = group_a.size() * 4 + filler.size();
  const auto basis = orthonormal(rng, 3 + nwords, dim);
  const auto& cluster_a = basis[0];
  const auto& cluster_b = basis[1];
  const auto& global = basis[2];

  std::vector<std::string> words;
  std::vector<float> m;
  std::size_t unique = 3;
  const auto emit = [&](const std::string& w, const std::vector<double>& own_cluster, double own_w,
                        const std::vector<double>& other_cluster, double other_w) {
    const double g = std::sqrt(0.1);
    const double u = std::sqrt(std::max(0.0, 1.0 - own_w * own_w - other_w * other_w - 0.1));
    const auto& own = basis[unique++];
    words.push_back(w);
    for (std::size_t k = 0; k < dim; ++k) {
      m.push_back(static_cast<float>(g * global[k] + u * own[k] + own_w * own_cluster[k] +
                                     other_w * other_cluster[k]));
    }
  };
  const auto spaced = [&](double lo, double hi) {
    std::vector<double> v;
    for (std::size_t i = 0; i < 6; ++i) v.push_back(lo + (hi - lo) * static_cast<double>(i) / 5.0);
    rng.shuffle(v);
    return v;
  };
  const double full = std::sqrt(0.8);
  for (const auto& w : group_a) emit(w, cluster_a, full, cluster_b, 0.0);
  for (const auto& w : group_b) emit(w, cluster_b, full, cluster_a, 0.0);
  // Concept words lean toward their linked group by varying amounts, with
  // some pull toward the other group, so the two association samples overlap.
  const auto emit_concepts = [&](const std::vector<std::string>& ws, const std::vector<double>& own_cluster,
                                 const std::vector<double>& other_cluster) {
    const auto own_w = spaced(0.1, 0.9);
    const auto other_w = spaced(0.0, 0.6);
    for (std::size_t i = 0; i < ws.size(); ++i) {
      double a = own_w[i], b = other_w[i];
      const double len = std::hypot(a, b);
      if (len > 0.9) {
        a *= 0.9 / len;
        b *= 0.9 / len;
      }
      emit(ws[i], own_cluster, a, other_cluster, b);
    }
  };
  emit_concepts(concept_a, cluster_a, cluster_b);
  emit_concepts(concept_b, cluster_b, cluster_a);
  const std::vector<double> none(dim, 0.0);
  for (const auto& w : filler) emit(w, none, 0.0, none, 0.0);

  BiasedFixture f{EmbeddingStore(std::move(words), std::move(m), dim), {}, {}, filler};
  f.lexicon.name = "fixture";
  f.lexicon.group_a = group_a;
  f.lexicon.group_b = group_b;
  f.lexicon.concept_a = concept_a;
  f.lexicon.concept_b = concept_b;
  f.test.name = "fixture";
  f.test.X = concept_b;
  f.test.Y = concept_a;
  f.test.A = group_b;
  f.test.B = group_a;
  return f;
}

}  // namespace embias::testkit
