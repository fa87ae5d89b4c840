#include "embias/bias_mod.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "embias/errors.hpp"
#include "embias/log.hpp"
#include "embias/rng.hpp"
#include "embias/text.hpp"

namespace embias {

namespace {

using nlohmann::json;

std::vector<std::string> read_terms(const json& doc, const char* key) {
  if (!doc.contains(key) || !doc[key].is_array()) {
    throw ValidationError(std::string("lexicon needs an array field \"") + key + "\"");
  }
  std::vector<std::string> out;
  for (const auto& item : doc[key]) {
    if (!item.is_string()) throw ValidationError(std::string("non-string entry in ") + key);
    auto w = normalize_text(item.get<std::string>());
    if (w.empty()) throw ValidationError(std::string("empty term in ") + key);
    out.push_back(std::move(w));
  }
  return out;
}

}  // namespace

void StereotypeLexicon::validate() const {
  const std::pair<const std::vector<std::string>*, const char*> sets[] = {
      {&group_a, "group1"}, {&group_b, "group2"}, {&concept_a, "concept1"}, {&concept_b, "concept2"}};
  std::unordered_map<std::string, const char*> owner;
  for (const auto& [set, label] : sets) {
    if (set->empty()) throw ValidationError(std::string("lexicon set ") + label + " is empty");
    for (const auto& w : *set) {
      auto [it, inserted] = owner.emplace(w, label);
      if (!inserted) {
        throw ValidationError("lexicon term \"" + w + "\" appears in " + it->second + " and " + label);
      }
    }
  }
}

StereotypeLexicon parse_lexicon(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("lexicon is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ValidationError("lexicon must be a JSON object");
  StereotypeLexicon lex;
  lex.name = doc.value("name", std::string("lexicon"));
  if (doc.contains("provenance")) lex.provenance = doc["provenance"].get<std::vector<std::string>>();
  auto g1 = read_terms(doc, "group1");
  auto g2 = read_terms(doc, "group2");
  auto c1 = read_terms(doc, "concept1");
  auto c2 = read_terms(doc, "concept2");

  std::string link1 = "concept1", link2 = "concept2";
  if (doc.contains("linkage")) {
    const auto& l = doc["linkage"];
    link1 = l.value("group1", std::string());
    link2 = l.value("group2", std::string());
  }
  const bool straight = link1 == "concept1" && link2 == "concept2";
  const bool crossed = link1 == "concept2" && link2 == "concept1";
  if (!straight && !crossed) {
    throw ValidationError("lexicon linkage must map group1 and group2 to distinct concept sets");
  }
  lex.group_a = std::move(g1);
  lex.group_b = std::move(g2);
  lex.concept_a = straight ? std::move(c1) : std::move(c2);
  lex.concept_b = straight ? std::move(c2) : std::move(c1);
  lex.validate();
  return lex;
}

StereotypeLexicon load_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_lexicon(ss.str());
}

std::string lexicon_to_json(const StereotypeLexicon& lexicon) {
  json doc = json::object();
  doc["name"] = lexicon.name;
  doc["provenance"] = lexicon.provenance;
  doc["group1"] = lexicon.group_a;
  doc["group2"] = lexicon.group_b;
  doc["concept1"] = lexicon.concept_a;
  doc["concept2"] = lexicon.concept_b;
  doc["linkage"] = {{"group1", "concept1"}, {"group2", "concept2"}};
  return doc.dump(2) + "\n";
}

namespace {

std::vector<std::string> expand_excluding(const EmbeddingStore& store, const std::vector<std::string>& seeds,
                                          std::size_t k, const std::unordered_set<std::string>& exclude,
                                          std::size_t& resolved) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& s : seeds) {
    if (seen.insert(s).second) out.push_back(s);
  }
  resolved = 0;
  for (const auto& s : seeds) {
    if (!store.resolvable(s)) {
      warn("expand_wordlist: skipping unresolvable seed \"" + s + "\"");
      continue;
    }
    ++resolved;
    for (const auto& nb : nearest_neighbors(store, s, k, exclude)) {
      if (seen.insert(nb.word).second) out.push_back(nb.word);
    }
  }
  return out;
}

}  // namespace

std::vector<std::string> expand_wordlist(const EmbeddingStore& store, const std::vector<std::string>& seeds,
                                         std::size_t k) {
  const std::unordered_set<std::string> exclude(seeds.begin(), seeds.end());
  std::size_t resolved = 0;
  auto out = expand_excluding(store, seeds, k, exclude, resolved);
  if (resolved == 0) throw ValidationError("expand_wordlist: no seed word is resolvable");
  return out;
}

StereotypeLexicon expand_lexicon(const EmbeddingStore& store, const StereotypeLexicon& lexicon,
                                 std::size_t k) {
  lexicon.validate();
  std::unordered_set<std::string> all_seeds;
  for (const auto* set : {&lexicon.group_a, &lexicon.group_b, &lexicon.concept_a, &lexicon.concept_b}) {
    all_seeds.insert(set->begin(), set->end());
  }
  std::vector<std::string>* parts[4];
  StereotypeLexicon out = lexicon;
  parts[0] = &out.group_a;
  parts[1] = &out.group_b;
  parts[2] = &out.concept_a;
  parts[3] = &out.concept_b;

  std::map<std::string, int> claims;
  for (auto* part : parts) {
    std::size_t resolved = 0;
    *part = expand_excluding(store, *part, k, all_seeds, resolved);
    if (resolved == 0) throw ValidationError("expand_lexicon: a lexicon set has no resolvable seed");
    for (const auto& w : *part) {
      if (!all_seeds.count(w)) ++claims[w];
    }
  }
  for (auto* part : parts) {
    std::erase_if(*part, [&](const std::string& w) { return !all_seeds.count(w) && claims[w] > 1; });
  }
  return out;
}

std::string_view to_string(StereotypeTag tag) {
  switch (tag) {
    case StereotypeTag::kPro: return "PRO";
    case StereotypeTag::kAnti: return "ANTI";
    case StereotypeTag::kNeutral: return "NEUTRAL";
    case StereotypeTag::kMixed: return "MIXED";
  }
  return "NEUTRAL";
}

StereotypeTag parse_stereotype_tag(std::string_view name) {
  if (name == "PRO") return StereotypeTag::kPro;
  if (name == "ANTI") return StereotypeTag::kAnti;
  if (name == "NEUTRAL") return StereotypeTag::kNeutral;
  if (name == "MIXED") return StereotypeTag::kMixed;
  throw ValidationError("unknown stereotype tag: " + std::string(name));
}

TaggedCorpus tag_sentences(const Corpus& corpus, const StereotypeLexicon& lexicon) {
  lexicon.validate();
  enum Role : unsigned { kGroupA = 1, kGroupB = 2, kConceptA = 4, kConceptB = 8 };
  std::unordered_map<std::string, unsigned> role;
  for (const auto& w : lexicon.group_a) role[w] |= kGroupA;
  for (const auto& w : lexicon.group_b) role[w] |= kGroupB;
  for (const auto& w : lexicon.concept_a) role[w] |= kConceptA;
  for (const auto& w : lexicon.concept_b) role[w] |= kConceptB;

  TaggedCorpus out;
  out.reserve(corpus.size());
  for (const auto& s : corpus) {
    unsigned seen = 0;
    for (const auto& w : s) {
      if (auto it = role.find(w); it != role.end()) seen |= it->second;
    }
    const bool pro = ((seen & kGroupA) && (seen & kConceptA)) || ((seen & kGroupB) && (seen & kConceptB));
    const bool anti = ((seen & kGroupA) && (seen & kConceptB)) || ((seen & kGroupB) && (seen & kConceptA));
    StereotypeTag tag = StereotypeTag::kNeutral;
    if (pro && anti) {
      tag = StereotypeTag::kMixed;
    } else if (pro) {
      tag = StereotypeTag::kPro;
    } else if (anti) {
      tag = StereotypeTag::kAnti;
    }
    out.push_back({tag, s});
  }
  return out;
}

void write_tagged(const TaggedCorpus& tagged, std::ostream& out) {
  for (const auto& t : tagged) out << to_string(t.tag) << '\t' << join_tokens(t.tokens) << '\n';
}

TaggedCorpus read_tagged(std::istream& in) {
  TaggedCorpus out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw ValidationError("tagged corpus line " + std::to_string(line_no) + " has no tab");
    }
    out.push_back({parse_stereotype_tag(std::string_view(line).substr(0, tab)),
                   split_tokens(std::string_view(line).substr(tab + 1))});
  }
  return out;
}

std::string_view to_string(Direction d) { return d == Direction::kDebias ? "debias" : "overbias"; }

Direction parse_direction(std::string_view name) {
  if (name == "debias") return Direction::kDebias;
  if (name == "overbias") return Direction::kOverbias;
  throw ValidationError("unknown direction: " + std::string(name));
}

std::size_t balance_removal_count(std::size_t total, std::size_t pro, std::size_t anti,
                                  const BalanceOptions& opts) {
  if (!(opts.budget > 0.0 && opts.budget <= 0.05)) {
    throw ValidationError("balance budget must be in (0, 0.05]");
  }
  if (!(opts.strength >= 0.0 && opts.strength <= 1.0)) {
    throw ValidationError("balance strength must be in [0, 1]");
  }
  const std::size_t target = opts.direction == Direction::kDebias ? (pro > anti ? pro - anti : 0) : anti;
  // Small slack so that e.g. 0.3 * 40 floors to 12, not 11.
  const auto wanted = static_cast<std::size_t>(std::floor(opts.strength * static_cast<double>(target) + 1e-9));
  const auto cap = static_cast<std::size_t>(std::floor(opts.budget * static_cast<double>(total) + 1e-9));
  return std::min(wanted, cap);
}

BalanceResult balance_corpus(const TaggedCorpus& tagged, const BalanceOptions& opts) {
  BalanceResult res;
  std::vector<std::size_t> pro_idx, anti_idx;
  for (std::size_t i = 0; i < tagged.size(); ++i) {
    if (tagged[i].tag == StereotypeTag::kPro) pro_idx.push_back(i);
    if (tagged[i].tag == StereotypeTag::kAnti) anti_idx.push_back(i);
  }
  res.pro_before = pro_idx.size();
  res.anti_before = anti_idx.size();
  const std::size_t count = balance_removal_count(tagged.size(), pro_idx.size(), anti_idx.size(), opts);

  auto& source = opts.direction == Direction::kDebias ? pro_idx : anti_idx;
  if (source.empty() && opts.strength > 0.0) {
    warn(std::string("balance_corpus: no ") + (opts.direction == Direction::kDebias ? "PRO" : "ANTI") +
         " sentences to remove; corpus unchanged");
  }

  Rng rng(opts.seed);
  for (std::size_t i = 0; i < count; ++i) {
    std::swap(source[i], source[i + rng.below(source.size() - i)]);
  }
  res.removed.assign(source.begin(), source.begin() + static_cast<std::ptrdiff_t>(count));
  std::sort(res.removed.begin(), res.removed.end());

  std::size_t r = 0;
  res.corpus.reserve(tagged.size() - count);
  for (std::size_t i = 0; i < tagged.size(); ++i) {
    if (r < res.removed.size() && res.removed[r] == i) {
      ++r;
      continue;
    }
    res.corpus.push_back(tagged[i].tokens);
  }
  res.pro_after = res.pro_before - (opts.direction == Direction::kDebias ? count : 0);
  res.anti_after = res.anti_before - (opts.direction == Direction::kOverbias ? count : 0);
  return res;
}

void ConstraintSet::validate() const {
  std::set<WordPair> seen;
  const auto key = [](const WordPair& p) { return p.first < p.second ? p : WordPair{p.second, p.first}; };
  for (const auto& p : attract) {
    if (p.first == p.second) throw ValidationError("self-pair in attract constraints: " + p.first);
    seen.insert(key(p));
  }
  for (const auto& p : repel) {
    if (p.first == p.second) throw ValidationError("self-pair in repel constraints: " + p.first);
    if (seen.count(key(p))) {
      throw ValidationError("pair (" + p.first + ", " + p.second + ") is both attract and repel");
    }
  }
}

ConstraintSet build_constraint_pairs(const StereotypeLexicon& lexicon, Direction direction) {
  lexicon.validate();
  std::vector<WordPair> pro, anti;
  for (const auto& g : lexicon.group_a) {
    for (const auto& c : lexicon.concept_a) pro.emplace_back(g, c);
    for (const auto& c : lexicon.concept_b) anti.emplace_back(g, c);
  }
  for (const auto& g : lexicon.group_b) {
    for (const auto& c : lexicon.concept_b) pro.emplace_back(g, c);
    for (const auto& c : lexicon.concept_a) anti.emplace_back(g, c);
  }
  ConstraintSet out;
  if (direction == Direction::kDebias) {
    out.attract = std::move(anti);
    out.repel = std::move(pro);
  } else {
    out.attract = std::move(pro);
    out.repel = std::move(anti);
  }
  return out;
}

void ARHyper::validate() const {
  if (attract_margin < 0.0 || repel_margin < 0.0) throw ValidationError("margins must be >= 0");
  if (reg_strength < 0.0) throw ValidationError("regularisation strength must be >= 0");
  if (!(learning_rate > 0.0)) throw ValidationError("learning rate must be > 0");
  if (batch_size == 0) throw ValidationError("batch size must be >= 1");
}

namespace {

using Vec = std::vector<double>;

struct ArState {
  std::vector<Vec> current;
  std::vector<Vec> original;
  std::vector<Vec> grad;

  double nrm(std::size_t i) const {
    double s = 0.0;
    for (double v : current[i]) s += v * v;
    return std::sqrt(s);
  }

  double cos(std::size_t a, std::size_t b) const {
    double d = 0.0;
    for (std::size_t k = 0; k < current[a].size(); ++k) d += current[a][k] * current[b][k];
    const double n = nrm(a) * nrm(b);
    return n == 0.0 ? 0.0 : d / n;
  }

  // grad[a] += sign * d cos(a, b) / da, and symmetrically for b.
  void add_cos_grad(std::size_t a, std::size_t b, double sign) {
    const double na = nrm(a), nb = nrm(b);
    if (na == 0.0 || nb == 0.0) return;
    const double c = cos(a, b);
    const auto& va = current[a];
    const auto& vb = current[b];
    for (std::size_t k = 0; k < va.size(); ++k) {
      grad[a][k] += sign * (vb[k] / (na * nb) - c * va[k] / (na * na));
      grad[b][k] += sign * (va[k] / (na * nb) - c * vb[k] / (nb * nb));
    }
  }
};

using IdPair = std::pair<std::size_t, std::size_t>;

// Closest (attract) or farthest (repel) in-batch word to `w`, other than the pair.
std::optional<std::size_t> batch_negative(const ArState& st, const std::vector<std::size_t>& batch_words,
                                          std::size_t w, std::size_t partner, bool closest) {
  std::optional<std::size_t> best;
  double best_cos = 0.0;
  for (auto c : batch_words) {
    if (c == w || c == partner) continue;
    const double v = st.cos(w, c);
    if (!best || (closest ? v > best_cos : v < best_cos)) {
      best = c;
      best_cos = v;
    }
  }
  return best;
}

void run_batch(ArState& st, const std::vector<IdPair>& batch, bool attract, const ARHyper& h) {
  std::vector<std::size_t> words;
  for (const auto& [l, r] : batch) {
    words.push_back(l);
    words.push_back(r);
  }
  std::sort(words.begin(), words.end());
  words.erase(std::unique(words.begin(), words.end()), words.end());
  for (auto w : words) std::fill(st.grad[w].begin(), st.grad[w].end(), 0.0);

  for (const auto& [l, r] : batch) {
    const double pair_cos = st.cos(l, r);
    for (const auto& [w, partner] : {IdPair{l, r}, IdPair{r, l}}) {
      const auto neg = batch_negative(st, words, w, partner, attract);
      const double neg_cos = neg ? st.cos(w, *neg) : 0.0;
      if (attract) {
        // max(0, margin + cos(w, neg) - cos(l, r))
        if (h.attract_margin + neg_cos - pair_cos > 0.0) {
          if (neg) st.add_cos_grad(w, *neg, 1.0);
          st.add_cos_grad(l, r, -1.0);
        }
      } else {
        // max(0, margin + cos(l, r) - cos(w, neg))
        if (h.repel_margin + pair_cos - neg_cos > 0.0) {
          st.add_cos_grad(l, r, 1.0);
          if (neg) st.add_cos_grad(w, *neg, -1.0);
        }
      }
    }
  }
  // Batch cost is the mean over its pairs.
  const double step = h.learning_rate / static_cast<double>(batch.size());
  for (auto w : words) {
    for (std::size_t k = 0; k < st.current[w].size(); ++k) {
      st.grad[w][k] += 2.0 * h.reg_strength * (st.current[w][k] - st.original[w][k]);
      st.current[w][k] -= step * st.grad[w][k];
    }
  }
}

}  // namespace

EmbeddingStore attract_repel(const EmbeddingStore& store, const ConstraintSet& constraints,
                             const ARHyper& hyper) {
  hyper.validate();
  constraints.validate();
  auto m = store.matrix();
  std::vector<float> matrix(m.begin(), m.end());
  if (constraints.empty()) {
    return EmbeddingStore(store.words(), std::move(matrix), store.dim(), store.subwords());
  }

  // Local ids for constraint words, in first-appearance order.
  std::vector<std::size_t> rows;
  std::unordered_map<std::size_t, std::size_t> local;
  const auto local_id = [&](std::size_t row) {
    auto [it, inserted] = local.emplace(row, rows.size());
    if (inserted) rows.push_back(row);
    return it->second;
  };
  const auto map_pairs = [&](const std::vector<WordPair>& pairs, const char* kind) {
    std::vector<IdPair> out;
    for (const auto& [a, b] : pairs) {
      const auto ia = store.index_of(a);
      const auto ib = store.index_of(b);
      if (!ia || !ib || store.row_norm(*ia) == 0.0 || store.row_norm(*ib) == 0.0) {
        warn(std::string("attract_repel: dropping ") + kind + " pair (" + a + ", " + b +
             "): word not in vocabulary");
        continue;
      }
      out.emplace_back(local_id(*ia), local_id(*ib));
    }
    return out;
  };
  auto attract = map_pairs(constraints.attract, "attract");
  auto repel = map_pairs(constraints.repel, "repel");
  if (attract.empty() && repel.empty()) throw ValidationError("attract_repel: no resolvable constraints");

  ArState st;
  for (auto row : rows) {
    const auto r = store.row(row);
    st.current.emplace_back(r.begin(), r.end());
  }
  st.original = st.current;
  st.grad.assign(rows.size(), Vec(store.dim(), 0.0));

  Rng rng(hyper.seed);
  for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
    rng.shuffle(attract);
    rng.shuffle(repel);
    const std::size_t na = (attract.size() + hyper.batch_size - 1) / hyper.batch_size;
    const std::size_t nr = (repel.size() + hyper.batch_size - 1) / hyper.batch_size;
    for (std::size_t b = 0; b < std::max(na, nr); ++b) {
      const auto slice = [&](const std::vector<IdPair>& v) {
        const std::size_t lo = std::min(v.size(), b * hyper.batch_size);
        const std::size_t hi = std::min(v.size(), lo + hyper.batch_size);
        return std::vector<IdPair>(v.begin() + static_cast<std::ptrdiff_t>(lo),
                                   v.begin() + static_cast<std::ptrdiff_t>(hi));
      };
      if (b < na) run_batch(st, slice(attract), true, hyper);
      if (b < nr) run_batch(st, slice(repel), false, hyper);
    }
    for (auto& v : st.current) {
      double s = 0.0;
      for (double x : v) s += x * x;
      const double n = std::sqrt(s);
      if (n > 0.0) {
        for (double& x : v) x /= n;
      }
    }
  }

  for (std::size_t i = 0; i < rows.size(); ++i) {
    float* dst = matrix.data() + rows[i] * store.dim();
    for (std::size_t k = 0; k < store.dim(); ++k) dst[k] = static_cast<float>(st.current[i][k]);
  }
  return EmbeddingStore(store.words(), std::move(matrix), store.dim(), store.subwords());
}

}  // namespace embias
