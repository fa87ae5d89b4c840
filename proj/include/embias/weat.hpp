#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "embias/embed_store.hpp"

namespace embias {

// Two target wordlists (X, Y) and two attribute wordlists (A, B).
struct WeatTest {
  std::string name;
  std::string language = "en";
  std::vector<std::string> X, Y, A, B;

  // |X| == |Y|; required for the permutation test.
  bool balanced() const { return X.size() == Y.size(); }
  // Non-empty lists, no word shared by A and B or by X and Y, no duplicates.
  void validate() const;
};

// JSON document: {"name", "language", "X": [...], "Y": [...], "A": [...], "B": [...]}.
// Words are NFC-normalized and lowercased on load.
WeatTest parse_weat_test(std::string_view json_text);
WeatTest load_weat_test(const std::filesystem::path& path);
std::string weat_test_to_json(const WeatTest& test);

enum class OovPolicy {
  kDrop,    // skip unresolvable words and report coverage
  kStrict,  // any unresolvable word is an error
};

OovPolicy parse_oov_policy(std::string_view name);

// s(w, A, B) = mean_a cos(w, a) - mean_b cos(w, b) over resolvable A/B words.
double association(const EmbeddingStore& store, std::string_view word,
                   const std::vector<std::string>& A, const std::vector<std::string>& B);

// Per-word associations of the resolved target words, plus bookkeeping.
struct WeatAssociations {
  std::vector<double> x;  // s(x, A, B) for each resolved x, in list order
  std::vector<double> y;
  double coverage_x = 1, coverage_y = 1, coverage_a = 1, coverage_b = 1;
  std::vector<std::string> dropped;
};

WeatAssociations compute_associations(const EmbeddingStore& store, const WeatTest& test,
                                      OovPolicy policy = OovPolicy::kDrop);

// sum_x s(x,A,B) - sum_y s(y,A,B)
double test_statistic(const WeatAssociations& assoc);
double test_statistic(const EmbeddingStore& store, const WeatTest& test,
                      OovPolicy policy = OovPolicy::kDrop);

// (mean_x s - mean_y s) / sample-stddev over X u Y. Throws DegenerateError
// when the pooled associations have zero spread.
double effect_size(const WeatAssociations& assoc);
double effect_size(const EmbeddingStore& store, const WeatTest& test,
                   OovPolicy policy = OovPolicy::kDrop);

struct PermutationOptions {
  std::uint64_t max_permutations = 100'000;  // exact enumeration limit on C(2n, n)
  std::uint64_t monte_carlo_samples = 10'000;
  std::uint64_t seed = 0;
};

// Absolute slack when comparing a permuted statistic against the observed one,
// so that partitions equal up to summation order count as ties.
inline constexpr double kPermutationTieTolerance = 1e-12;

struct PermutationResult {
  double p_value;
  bool exact;
  std::uint64_t permutations;
};

// One-sided: fraction of equal-size splits of X u Y whose statistic is
// >= the observed one. Exact when C(2n, n) <= max_permutations.
PermutationResult permutation_test(const WeatAssociations& assoc, const PermutationOptions& opts = {});
double permutation_pvalue(const EmbeddingStore& store, const WeatTest& test,
                          const PermutationOptions& opts = {},
                          OovPolicy policy = OovPolicy::kDrop);

// C(n, k), saturating at `cap` + 1.
std::uint64_t binomial_capped(std::uint64_t n, std::uint64_t k, std::uint64_t cap);

struct WeatResult {
  std::string test_name;
  bool ok = false;
  std::string error;  // set when !ok
  double statistic = 0;
  double effect_size = 0;
  std::optional<double> p_value;  // absent when resolved |X| != |Y|
  bool p_exact = false;
  double coverage_x = 0, coverage_y = 0, coverage_a = 0, coverage_b = 0;
  std::vector<std::string> dropped_words;
};

struct WeatSuiteOptions {
  OovPolicy policy = OovPolicy::kDrop;
  PermutationOptions permutation;
};

// One result per test, in input order. Errors are captured per test.
std::vector<WeatResult> run_weat_suite(const EmbeddingStore& store, const std::vector<WeatTest>& tests,
                                       const WeatSuiteOptions& opts = {});

}  // namespace embias
