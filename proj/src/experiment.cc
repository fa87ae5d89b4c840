#include "embias/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "embias/errors.hpp"
#include "embias/log.hpp"
#include "embias/rng.hpp"
#include "embias/stats.hpp"
#include "embias/text.hpp"

namespace embias {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(Method m) {
  switch (m) {
    case Method::kBaseline: return "baseline";
    case Method::kPreprocessing: return "preprocessing";
    case Method::kPostprocessing: return "postprocessing";
  }
  return "baseline";
}

Method parse_method(std::string_view name) {
  if (name == "preprocessing") return Method::kPreprocessing;
  if (name == "postprocessing") return Method::kPostprocessing;
  throw ValidationError("unknown modification method: " + std::string(name));
}

std::string Condition::id() const {
  if (method == Method::kBaseline) return "baseline";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", strength);
  return std::string(to_string(method)) + "-" + std::string(to_string(direction)) + "-" + buf;
}

void ExperimentConfig::validate() const {
  if (embeddings.empty() && corpus.empty()) {
    throw ValidationError("config needs an embedding source (corpus to train on, or embeddings to load)");
  }
  if (trains_embeddings()) train.validate();
  if (weat_tests.empty()) throw ValidationError("config needs at least one WEAT test");
  if (lexicon.empty()) throw ValidationError("config needs a lexicon");
  if (methods.empty()) throw ValidationError("config needs at least one modification method");
  if (directions.empty()) throw ValidationError("config needs at least one direction");
  if (strengths.empty()) throw ValidationError("config needs at least one strength");
  for (double s : strengths) {
    if (!(s >= 0.0 && s <= 1.0)) throw ValidationError("strengths must be in [0, 1]");
  }
  if (!(balance_budget > 0.0 && balance_budget <= 0.05)) {
    throw ValidationError("balance_budget must be in (0, 0.05]");
  }
  attract_repel.validate();
  if (train_data.empty() || test_data.empty()) throw ValidationError("config needs downstream train and test data");
  if (reference_group == Group::kNeutral) throw ValidationError("reference_group must be a or b");
  if (parallel_conditions == 0) throw ValidationError("parallel_conditions must be >= 1");
}

namespace {

void check_keys(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& where) {
  if (!obj.is_object()) throw ValidationError(where + " must be a JSON object");
  for (const auto& [key, _] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ValidationError("unknown key \"" + key + "\" in " + where);
    }
  }
}

template <typename T>
void get_if(const json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad value for \"") + key + "\": " + e.what());
  }
}

fs::path resolve_path(const json& obj, const char* key, const fs::path& base) {
  if (!obj.contains(key)) return {};
  fs::path p = obj.at(key).get<std::string>();
  return p.is_absolute() ? p : base / p;
}

}  // namespace

ExperimentConfig parse_experiment_config(std::string_view json_text, const fs::path& base_dir) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(doc,
             {"seed", "output_dir", "parallel_conditions", "embedding", "weat_tests", "lexicon", "expand_k",
              "methods", "directions", "strengths", "balance_budget", "attract_repel", "downstream", "weat",
              "correlation_permutations"},
             "config");
  ExperimentConfig c;
  get_if(doc, "seed", c.seed);
  get_if(doc, "parallel_conditions", c.parallel_conditions);
  if (doc.contains("output_dir")) c.output_dir = resolve_path(doc, "output_dir", base_dir);

  if (doc.contains("embedding")) {
    const auto& e = doc["embedding"];
    check_keys(e, {"corpus", "train", "path", "format"}, "embedding");
    c.corpus = resolve_path(e, "corpus", base_dir);
    c.embeddings = resolve_path(e, "path", base_dir);
    if (e.contains("format")) c.embeddings_format = parse_embedding_format(e["format"].get<std::string>());
    if (e.contains("train")) {
      const auto& t = e["train"];
      check_keys(t,
                 {"dim", "window", "negatives", "epochs", "learning_rate", "min_learning_rate", "min_count",
                  "subword_mode", "ngram_min", "ngram_max", "bucket_count", "threads"},
                 "embedding.train");
      get_if(t, "dim", c.train.dim);
      get_if(t, "window", c.train.window);
      get_if(t, "negatives", c.train.negatives);
      get_if(t, "epochs", c.train.epochs);
      get_if(t, "learning_rate", c.train.learning_rate);
      get_if(t, "min_learning_rate", c.train.min_learning_rate);
      get_if(t, "min_count", c.train.min_count);
      get_if(t, "subword_mode", c.train.subword_mode);
      get_if(t, "ngram_min", c.train.ngram_min);
      get_if(t, "ngram_max", c.train.ngram_max);
      get_if(t, "bucket_count", c.train.bucket_count);
      get_if(t, "threads", c.train.threads);
    }
  }
  if (doc.contains("weat_tests")) {
    for (const auto& p : doc["weat_tests"]) {
      fs::path path = p.get<std::string>();
      c.weat_tests.push_back(path.is_absolute() ? path : base_dir / path);
    }
  }
  c.lexicon = resolve_path(doc, "lexicon", base_dir);
  get_if(doc, "expand_k", c.expand_k);
  if (doc.contains("methods")) {
    c.methods.clear();
    for (const auto& m : doc["methods"]) c.methods.push_back(parse_method(m.get<std::string>()));
  }
  if (doc.contains("directions")) {
    c.directions.clear();
    for (const auto& d : doc["directions"]) c.directions.push_back(parse_direction(d.get<std::string>()));
  }
  get_if(doc, "strengths", c.strengths);
  get_if(doc, "balance_budget", c.balance_budget);
  if (doc.contains("attract_repel")) {
    const auto& a = doc["attract_repel"];
    check_keys(a, {"attract_margin", "repel_margin", "reg_strength", "learning_rate", "epochs", "batch_size"},
               "attract_repel");
    get_if(a, "attract_margin", c.attract_repel.attract_margin);
    get_if(a, "repel_margin", c.attract_repel.repel_margin);
    get_if(a, "reg_strength", c.attract_repel.reg_strength);
    get_if(a, "learning_rate", c.attract_repel.learning_rate);
    get_if(a, "epochs", c.attract_repel.epochs);
    get_if(a, "batch_size", c.attract_repel.batch_size);
  }
  if (doc.contains("downstream")) {
    const auto& d = doc["downstream"];
    check_keys(d, {"train", "test", "reference_group", "classifier"}, "downstream");
    c.train_data = resolve_path(d, "train", base_dir);
    c.test_data = resolve_path(d, "test", base_dir);
    if (d.contains("reference_group")) c.reference_group = parse_group(d["reference_group"].get<std::string>());
    if (d.contains("classifier")) {
      const auto& k = d["classifier"];
      check_keys(k, {"learning_rate", "epochs", "l2"}, "downstream.classifier");
      get_if(k, "learning_rate", c.classifier.learning_rate);
      get_if(k, "epochs", c.classifier.epochs);
      get_if(k, "l2", c.classifier.l2);
    }
  }
  if (doc.contains("weat")) {
    const auto& w = doc["weat"];
    check_keys(w, {"oov_policy", "max_permutations", "monte_carlo_samples"}, "weat");
    if (w.contains("oov_policy")) c.weat.policy = parse_oov_policy(w["oov_policy"].get<std::string>());
    get_if(w, "max_permutations", c.weat.permutation.max_permutations);
    get_if(w, "monte_carlo_samples", c.weat.permutation.monte_carlo_samples);
  }
  get_if(doc, "correlation_permutations", c.correlation_permutations);
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment_config(ss.str(), path.parent_path());
}

std::vector<Condition> experiment_grid(const ExperimentConfig& config) {
  std::vector<Condition> grid{Condition{}};
  for (auto m : config.methods) {
    for (auto d : config.directions) {
      for (double s : config.strengths) grid.push_back({m, d, s});
    }
  }
  return grid;
}

namespace {

Corpus read_tokenized_corpus(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  Corpus corpus;
  std::string line;
  while (std::getline(in, line)) {
    auto s = tokenize(line);
    if (!s.empty()) corpus.push_back(std::move(s));
  }
  if (corpus.empty()) throw ValidationError("corpus is empty: " + path.string());
  return corpus;
}

// Shared, read-only inputs of every condition.
struct Inputs {
  const ExperimentConfig& config;
  std::vector<WeatTest> tests;
  StereotypeLexicon lexicon;  // expanded
  std::vector<LabeledExample> train;
  std::vector<LabeledExample> test;
  Corpus corpus;
  TaggedCorpus tagged;
  std::optional<EmbeddingStore> baseline;
  std::uint64_t embedding_seed = 0;
  std::uint64_t classifier_seed = 0;
};

void archive_store(const EmbeddingStore& store, const fs::path& dir) {
  save_embeddings(store, dir / "embeddings.bin", EmbeddingFormat::kBinary);
  if (store.subwords()) save_ngram_table(*store.subwords(), dir / "ngrams.bin");
}

void evaluate(const Inputs& in, const EmbeddingStore& store, ExperimentRecord& rec) {
  WeatSuiteOptions wopts = in.config.weat;
  wopts.permutation.seed = derive_seed(in.config.seed, "weat");
  rec.weat = run_weat_suite(store, in.tests, wopts);

  ClassifierConfig ccfg = in.config.classifier;
  ccfg.seed = in.classifier_seed;
  rec.classifier_seed = in.classifier_seed;
  const auto clf = train_classifier(store, in.train, ccfg);
  const auto conf = grouped_confusion(clf, store, in.test);
  const auto all = conf.overall();
  rec.accuracy = accuracy(all);
  try {
    rec.f1 = f1(all);
  } catch (const DegenerateError&) {
    rec.f1 = 0.0;
  }
  std::string errors;
  try {
    rec.precision_gap = precision_gap(conf, in.config.reference_group);
  } catch (const DegenerateError& e) {
    errors += e.what();
  }
  try {
    rec.recall_gap = recall_gap(conf, in.config.reference_group);
  } catch (const DegenerateError& e) {
    if (!errors.empty()) errors += "; ";
    errors += e.what();
  }
  rec.gap_error = errors;
}

ExperimentRecord run_condition(const Inputs& in, const Condition& cond) {
  ExperimentRecord rec;
  rec.condition = cond;
  rec.embedding_seed = in.embedding_seed;
  const auto id = cond.id();
  const fs::path rel = fs::path("conditions") / id;
  const fs::path dir = in.config.output_dir / rel;
  try {
    fs::create_directories(dir);
    std::optional<EmbeddingStore> store;
    if (cond.method == Method::kBaseline) {
      store = *in.baseline;
    } else if (cond.method == Method::kPreprocessing) {
      if (!in.config.trains_embeddings()) {
        throw ValidationError("preprocessing needs a training corpus; embeddings were loaded from file");
      }
      BalanceOptions bopts;
      bopts.direction = cond.direction;
      bopts.budget = in.config.balance_budget;
      bopts.strength = cond.strength;
      bopts.seed = rec.modification_seed = derive_seed(in.config.seed, "balance/" + id);
      const auto balanced = balance_corpus(in.tagged, bopts);
      {
        std::ofstream manifest(dir / "removed.txt", std::ios::trunc);
        manifest << "# removed sentence indices (0-based); pro " << balanced.pro_before << " -> "
                 << balanced.pro_after << ", anti " << balanced.anti_before << " -> " << balanced.anti_after
                 << '\n';
        for (auto i : balanced.removed) manifest << i << '\n';
      }
      TrainConfig tcfg = in.config.train;
      tcfg.seed = in.embedding_seed;
      store = train_skipgram(balanced.corpus, tcfg);
    } else {
      auto constraints = build_constraint_pairs(in.lexicon, cond.direction);
      rec.modification_seed = derive_seed(in.config.seed, "attract_repel/" + id);
      Rng pick(derive_seed(rec.modification_seed, "subset"));
      for (auto* pairs : {&constraints.attract, &constraints.repel}) {
        const auto keep = static_cast<std::size_t>(std::llround(cond.strength * static_cast<double>(pairs->size())));
        pick.shuffle(*pairs);
        pairs->resize(keep);
      }
      {
        std::ofstream out(dir / "constraints.tsv", std::ios::trunc);
        for (const auto& [a, b] : constraints.attract) out << "attract\t" << a << '\t' << b << '\n';
        for (const auto& [a, b] : constraints.repel) out << "repel\t" << a << '\t' << b << '\n';
      }
      ARHyper hyper = in.config.attract_repel;
      hyper.seed = rec.modification_seed;
      store = attract_repel(*in.baseline, constraints, hyper);
    }
    archive_store(*store, dir);
    rec.store_path = rel / "embeddings.bin";
    evaluate(in, *store, rec);
    rec.ok = true;
  } catch (const std::exception& e) {
    if (cond.method == Method::kBaseline) throw;
    rec.ok = false;
    rec.error = e.what();
    warn("condition " + id + " failed: " + rec.error);
  }
  return rec;
}

}  // namespace

std::vector<CorrelationSummary> correlate(const ExperimentTable& table, std::uint64_t permutations,
                                          std::uint64_t seed) {
  std::vector<CorrelationSummary> out;
  const std::vector<std::string> methods{"all", "preprocessing", "postprocessing"};
  for (std::size_t t = 0; t < table.test_names.size(); ++t) {
    for (const std::string metric : {"precision_gap", "recall_gap"}) {
      for (const auto& method : methods) {
        CorrelationSummary s;
        s.test_name = table.test_names[t];
        s.gap_metric = metric;
        s.method = method;
        std::vector<double> xs, ys;
        for (const auto& rec : table.records) {
          if (!rec.ok) continue;
          const auto m = to_string(rec.condition.method);
          if (rec.condition.method != Method::kBaseline && method != "all" && m != method) continue;
          const auto& gap = metric == "precision_gap" ? rec.precision_gap : rec.recall_gap;
          if (!gap || t >= rec.weat.size() || !rec.weat[t].ok) continue;
          xs.push_back(*gap);
          ys.push_back(rec.weat[t].effect_size);
        }
        s.n = xs.size();
        if (s.n < 3) {
          s.status = "insufficient_n";
        } else {
          try {
            const auto res = pearson(xs, ys, permutations,
                                     derive_seed(seed, "correlation/" + s.test_name + "/" + metric + "/" + method));
            s.r = res.r;
            s.p_value = res.p_value;
            s.status = "ok";
          } catch (const DegenerateError&) {
            s.status = "zero_variance";
          }
        }
        out.push_back(std::move(s));
      }
    }
  }
  return out;
}

ExperimentTable run_experiment(const ExperimentConfig& config) {
  config.validate();
  Inputs in{config, {}, {}, {}, {}, {}, {}, std::nullopt, 0, 0};
  for (const auto& p : config.weat_tests) in.tests.push_back(load_weat_test(p));
  const auto seeds = load_lexicon(config.lexicon);
  in.train = load_labeled(config.train_data);
  in.test = load_labeled(config.test_data);
  if (in.test.empty()) throw ValidationError("downstream test set is empty");
  in.embedding_seed = derive_seed(config.seed, "embedding");
  in.classifier_seed = derive_seed(config.seed, "classifier");

  if (config.trains_embeddings()) {
    in.corpus = read_tokenized_corpus(config.corpus);
    TrainConfig tcfg = config.train;
    tcfg.seed = in.embedding_seed;
    in.baseline = train_skipgram(in.corpus, tcfg);
  } else {
    in.baseline = load_embeddings(config.embeddings, config.embeddings_format);
  }

  try {
    in.lexicon = config.expand_k == 0 ? seeds : expand_lexicon(*in.baseline, seeds, config.expand_k);
  } catch (const ValidationError& e) {
    warn(std::string("lexicon expansion failed, using seed lists: ") + e.what());
    in.lexicon = seeds;
  }
  fs::create_directories(config.output_dir);
  {
    std::ofstream out(config.output_dir / "lexicon_expanded.json", std::ios::trunc);
    out << lexicon_to_json(in.lexicon);
  }
  if (config.trains_embeddings()) in.tagged = tag_sentences(in.corpus, in.lexicon);

  const auto grid = experiment_grid(config);
  ExperimentTable table;
  for (const auto& t : in.tests) table.test_names.push_back(t.name);
  table.records.resize(grid.size());
  table.records[0] = run_condition(in, grid[0]);

  std::atomic<std::size_t> next{1};
  const auto worker = [&] {
    for (std::size_t i = next++; i < grid.size(); i = next++) table.records[i] = run_condition(in, grid[i]);
  };
  const std::size_t threads = std::min(config.parallel_conditions, grid.size() - 1);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  table.correlations = correlate(table, config.correlation_permutations, derive_seed(config.seed, "correlate"));
  return table;
}

}  // namespace embias
