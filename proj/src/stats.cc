#include "embias/stats.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "embias/errors.hpp"
#include "embias/rng.hpp"

namespace embias {

double pearson_r(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) {
    throw ValidationError("pearson: length mismatch (" + std::to_string(xs.size()) + " vs " +
                          std::to_string(ys.size()) + ")");
  }
  if (xs.size() < 3) throw ValidationError("pearson: need at least 3 points");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw DegenerateError("pearson: zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

PearsonResult pearson(std::span<const double> xs, std::span<const double> ys,
                      std::uint64_t permutations, std::uint64_t seed) {
  const double r = pearson_r(xs, ys);
  std::vector<double> shuffled(ys.begin(), ys.end());
  Rng rng(seed);
  std::uint64_t extreme = 0;
  const double bar = std::abs(r) - 1e-12;
  for (std::uint64_t t = 0; t < permutations; ++t) {
    rng.shuffle(shuffled);
    if (std::abs(pearson_r(xs, shuffled)) >= bar) ++extreme;
  }
  const double p = static_cast<double>(1 + extreme) / static_cast<double>(1 + permutations);
  return {r, p, permutations};
}

}  // namespace embias
