#include "embias/weat.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "embias/errors.hpp"
#include "embias/rng.hpp"
#include "embias/text.hpp"

namespace embias {

namespace {

using nlohmann::json;

std::vector<std::string> read_list(const json& doc, const char* key) {
  if (!doc.contains(key) || !doc[key].is_array()) {
    throw ValidationError(std::string("wordlist file needs an array field \"") + key + "\"");
  }
  std::vector<std::string> out;
  for (const auto& item : doc[key]) {
    if (!item.is_string()) throw ValidationError(std::string("non-string entry in list ") + key);
    auto w = normalize_text(item.get<std::string>());
    if (w.empty()) throw ValidationError(std::string("empty word in list ") + key);
    out.push_back(std::move(w));
  }
  return out;
}

void check_disjoint(const std::vector<std::string>& a, const std::vector<std::string>& b,
                    const char* name) {
  const std::set<std::string> sa(a.begin(), a.end());
  for (const auto& w : b) {
    if (sa.count(w)) throw ValidationError(std::string("word \"") + w + "\" appears in both " + name);
  }
}

void check_unique(const std::vector<std::string>& v, const char* name) {
  const std::set<std::string> s(v.begin(), v.end());
  if (s.size() != v.size()) throw ValidationError(std::string("duplicate word in list ") + name);
}

// Resolved vectors of one list, with norms.
struct ResolvedList {
  std::vector<std::vector<float>> vectors;
  std::vector<double> norms;
  std::size_t requested = 0;

  double coverage() const {
    return requested == 0 ? 0.0 : static_cast<double>(vectors.size()) / static_cast<double>(requested);
  }
};

ResolvedList resolve_list(const EmbeddingStore& store, const std::vector<std::string>& words,
                          OovPolicy policy, std::vector<std::string>* dropped) {
  ResolvedList out;
  out.requested = words.size();
  for (const auto& w : words) {
    auto v = store.resolve(w);
    const double n = v ? norm(*v) : 0.0;
    if (!v || n == 0.0) {
      if (policy == OovPolicy::kStrict) throw OovError(w);
      if (dropped) dropped->push_back(w);
      continue;
    }
    out.vectors.push_back(std::move(*v));
    out.norms.push_back(n);
  }
  return out;
}

double mean_cosine(std::span<const float> w, double wn, const ResolvedList& list) {
  double sum = 0.0;
  for (std::size_t i = 0; i < list.vectors.size(); ++i) {
    sum += std::clamp(dot(w, list.vectors[i]) / (wn * list.norms[i]), -1.0, 1.0);
  }
  return sum / static_cast<double>(list.vectors.size());
}

double assoc_of(std::span<const float> w, double wn, const ResolvedList& a, const ResolvedList& b) {
  return mean_cosine(w, wn, a) - mean_cosine(w, wn, b);
}

}  // namespace

void WeatTest::validate() const {
  if (name.empty()) throw ValidationError("WEAT test needs a name");
  if (X.empty() || Y.empty() || A.empty() || B.empty()) {
    throw ValidationError("WEAT test " + name + ": all four wordlists must be non-empty");
  }
  check_unique(X, "X");
  check_unique(Y, "Y");
  check_unique(A, "A");
  check_unique(B, "B");
  check_disjoint(X, Y, "X and Y");
  check_disjoint(A, B, "A and B");
}

WeatTest parse_weat_test(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("wordlist file is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ValidationError("wordlist file must be a JSON object");
  WeatTest t;
  if (!doc.contains("name") || !doc["name"].is_string()) {
    throw ValidationError("wordlist file needs a string field \"name\"");
  }
  t.name = doc["name"].get<std::string>();
  if (doc.contains("language")) t.language = doc["language"].get<std::string>();
  t.X = read_list(doc, "X");
  t.Y = read_list(doc, "Y");
  t.A = read_list(doc, "A");
  t.B = read_list(doc, "B");
  t.validate();
  return t;
}

WeatTest load_weat_test(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_weat_test(ss.str());
}

std::string weat_test_to_json(const WeatTest& test) {
  json doc = json::object();
  doc["name"] = test.name;
  doc["language"] = test.language;
  doc["X"] = test.X;
  doc["Y"] = test.Y;
  doc["A"] = test.A;
  doc["B"] = test.B;
  return doc.dump(2) + "\n";
}

OovPolicy parse_oov_policy(std::string_view name) {
  if (name == "drop") return OovPolicy::kDrop;
  if (name == "strict") return OovPolicy::kStrict;
  throw ValidationError("unknown OOV policy: " + std::string(name));
}

double association(const EmbeddingStore& store, std::string_view word,
                   const std::vector<std::string>& A, const std::vector<std::string>& B) {
  const auto w = store.vector(word);
  const double wn = norm(w);
  if (wn == 0.0) throw DegenerateError("zero vector for word " + std::string(word));
  const auto a = resolve_list(store, A, OovPolicy::kDrop, nullptr);
  const auto b = resolve_list(store, B, OovPolicy::kDrop, nullptr);
  if (a.vectors.empty()) throw ValidationError("attribute list A has no resolvable words");
  if (b.vectors.empty()) throw ValidationError("attribute list B has no resolvable words");
  return assoc_of(w, wn, a, b);
}

WeatAssociations compute_associations(const EmbeddingStore& store, const WeatTest& test,
                                      OovPolicy policy) {
  WeatAssociations out;
  const auto x = resolve_list(store, test.X, policy, &out.dropped);
  const auto y = resolve_list(store, test.Y, policy, &out.dropped);
  const auto a = resolve_list(store, test.A, policy, &out.dropped);
  const auto b = resolve_list(store, test.B, policy, &out.dropped);
  out.coverage_x = x.coverage();
  out.coverage_y = y.coverage();
  out.coverage_a = a.coverage();
  out.coverage_b = b.coverage();
  const std::pair<const ResolvedList*, const char*> lists[] = {{&x, "X"}, {&y, "Y"}, {&a, "A"}, {&b, "B"}};
  for (const auto& [list, label] : lists) {
    if (list->vectors.empty()) {
      throw ValidationError("WEAT test " + test.name + ": list " + label + " has no resolvable words");
    }
  }
  for (std::size_t i = 0; i < x.vectors.size(); ++i) out.x.push_back(assoc_of(x.vectors[i], x.norms[i], a, b));
  for (std::size_t i = 0; i < y.vectors.size(); ++i) out.y.push_back(assoc_of(y.vectors[i], y.norms[i], a, b));
  return out;
}

double test_statistic(const WeatAssociations& assoc) {
  const double sx = std::accumulate(assoc.x.begin(), assoc.x.end(), 0.0);
  const double sy = std::accumulate(assoc.y.begin(), assoc.y.end(), 0.0);
  return sx - sy;
}

double test_statistic(const EmbeddingStore& store, const WeatTest& test, OovPolicy policy) {
  return test_statistic(compute_associations(store, test, policy));
}

double effect_size(const WeatAssociations& assoc) {
  const std::size_t nx = assoc.x.size(), ny = assoc.y.size();
  const std::size_t n = nx + ny;
  if (nx == 0 || ny == 0) throw ValidationError("effect size needs resolved X and Y words");
  const double mx = std::accumulate(assoc.x.begin(), assoc.x.end(), 0.0) / static_cast<double>(nx);
  const double my = std::accumulate(assoc.y.begin(), assoc.y.end(), 0.0) / static_cast<double>(ny);
  // Pooled values in sorted order, so the spread does not depend on which
  // list is X.
  std::vector<double> pooled(assoc.x);
  pooled.insert(pooled.end(), assoc.y.begin(), assoc.y.end());
  std::sort(pooled.begin(), pooled.end());
  const double mean = std::accumulate(pooled.begin(), pooled.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double v : pooled) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (!(sd > 1e-12)) throw DegenerateError("degenerate WEAT test: all associations are equal");
  return (mx - my) / sd;
}

double effect_size(const EmbeddingStore& store, const WeatTest& test, OovPolicy policy) {
  return effect_size(compute_associations(store, test, policy));
}

std::uint64_t binomial_capped(std::uint64_t n, std::uint64_t k, std::uint64_t cap) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  // Multiplicative formula; every prefix product is itself a binomial coefficient.
  unsigned __int128 c = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    c = c * (n - k + i) / i;
    if (c > cap) return cap + 1;
  }
  return static_cast<std::uint64_t>(c);
}

PermutationResult permutation_test(const WeatAssociations& assoc, const PermutationOptions& opts) {
  const std::size_t n = assoc.x.size();
  if (n == 0 || assoc.y.size() != n) {
    throw ValidationError("permutation test requires |X| == |Y| after OOV drops (got " +
                          std::to_string(assoc.x.size()) + " vs " + std::to_string(assoc.y.size()) + ")");
  }
  std::vector<double> pooled(assoc.x);
  pooled.insert(pooled.end(), assoc.y.begin(), assoc.y.end());
  const std::size_t m = pooled.size();
  double total = 0.0;
  for (double v : pooled) total += v;

  // Statistic of a split given the sum over its X side: sum_X - (total - sum_X).
  const auto split_stat = [total](double x_sum) { return 2.0 * x_sum - total; };
  double observed_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) observed_sum += pooled[i];
  const double threshold = split_stat(observed_sum) - kPermutationTieTolerance;

  const std::uint64_t splits = binomial_capped(m, n, opts.max_permutations);
  if (splits <= opts.max_permutations) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::uint64_t hits = 0, count = 0;
    while (true) {
      double s = 0.0;
      for (auto i : idx) s += pooled[i];
      if (split_stat(s) >= threshold) ++hits;
      ++count;
      std::size_t pos = n;
      while (pos > 0 && idx[pos - 1] == m - n + pos - 1) --pos;
      if (pos == 0) break;
      ++idx[pos - 1];
      for (std::size_t j = pos; j < n; ++j) idx[j] = idx[j - 1] + 1;
    }
    return {static_cast<double>(hits) / static_cast<double>(count), true, count};
  }

  if (opts.monte_carlo_samples == 0) throw ValidationError("monte_carlo_samples must be positive");
  Rng rng(opts.seed);
  std::vector<std::size_t> perm(m);
  std::iota(perm.begin(), perm.end(), 0);
  std::uint64_t hits = 0;
  for (std::uint64_t t = 0; t < opts.monte_carlo_samples; ++t) {
    // Partial Fisher-Yates: the first n slots are a uniform random n-subset.
    for (std::size_t i = 0; i < n; ++i) std::swap(perm[i], perm[i + rng.below(m - i)]);
    std::vector<std::size_t> chosen(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n));
    std::sort(chosen.begin(), chosen.end());
    double s = 0.0;
    for (auto i : chosen) s += pooled[i];
    if (split_stat(s) >= threshold) ++hits;
  }
  return {static_cast<double>(hits) / static_cast<double>(opts.monte_carlo_samples), false,
          opts.monte_carlo_samples};
}

double permutation_pvalue(const EmbeddingStore& store, const WeatTest& test,
                          const PermutationOptions& opts, OovPolicy policy) {
  if (!test.balanced()) throw ValidationError("permutation test requires |X| == |Y|");
  return permutation_test(compute_associations(store, test, policy), opts).p_value;
}

std::vector<WeatResult> run_weat_suite(const EmbeddingStore& store, const std::vector<WeatTest>& tests,
                                       const WeatSuiteOptions& opts) {
  std::vector<WeatResult> results;
  results.reserve(tests.size());
  for (const auto& test : tests) {
    WeatResult r;
    r.test_name = test.name;
    try {
      const auto assoc = compute_associations(store, test, opts.policy);
      r.dropped_words = assoc.dropped;
      r.coverage_x = assoc.coverage_x;
      r.coverage_y = assoc.coverage_y;
      r.coverage_a = assoc.coverage_a;
      r.coverage_b = assoc.coverage_b;
      r.statistic = test_statistic(assoc);
      r.effect_size = effect_size(assoc);
      if (assoc.x.size() == assoc.y.size()) {
        PermutationOptions popts = opts.permutation;
        popts.seed = derive_seed(opts.permutation.seed, test.name);
        const auto p = permutation_test(assoc, popts);
        r.p_value = p.p_value;
        r.p_exact = p.exact;
      }
      r.ok = true;
    } catch (const std::exception& e) {
      r.ok = false;
      r.error = e.what();
    }
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace embias
