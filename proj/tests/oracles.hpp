#pragma once

// Straightforward reference implementations, written independently of the
// library code paths they check.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "embias/embed_store.hpp"
#include "embias/weat.hpp"

namespace embias::testkit {

struct BruteWeat {
  double statistic;
  double effect_size;
  std::vector<double> x, y;  // per-word associations
};

// Double loops over word pairs, all words assumed in vocabulary.
BruteWeat brute_weat(const EmbeddingStore& store, const WeatTest& test);

// Enumerates every equal-size split of x u y by bitmask.
double brute_permutation_p(const std::vector<double>& x, const std::vector<double>& y);

// Single-pass textbook formula.
double closed_form_pearson(std::span<const double> xs, std::span<const double> ys);

}  // namespace embias::testkit
