#pragma once

#include <cstdint>
#include <span>

namespace embias {

// Two-pass Pearson correlation. Requires equal lengths >= 3 and nonzero
// variance in both inputs; the result is clamped to [-1, 1].
double pearson_r(std::span<const double> xs, std::span<const double> ys);

struct PearsonResult {
  double r;
  double p_value;  // two-sided, permutation based
  std::uint64_t permutations;
};

// p = (1 + #{|r_perm| >= |r|}) / (1 + permutations), shuffling ys.
PearsonResult pearson(std::span<const double> xs, std::span<const double> ys,
                      std::uint64_t permutations = 10'000, std::uint64_t seed = 0);

}  // namespace embias
