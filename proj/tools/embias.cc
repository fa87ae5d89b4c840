#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "embias/bias_mod.hpp"
#include "embias/corpus.hpp"
#include "embias/downstream.hpp"
#include "embias/embed_store.hpp"
#include "embias/errors.hpp"
#include "embias/experiment.hpp"
#include "embias/log.hpp"
#include "embias/report.hpp"
#include "embias/sgns.hpp"
#include "embias/text.hpp"
#include "embias/weat.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace embias;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Options not given on the command line are filled from a JSON object keyed by
// long option name ("min_count" or "min-count").
void apply_config(CLI::App& app, const std::string& path) {
  if (path.empty()) return;
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ValidationError("config " + path + ": " + e.what());
  }
  if (!doc.is_object()) throw ValidationError("config " + path + " must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    std::string name = key;
    for (auto& c : name) c = c == '_' ? '-' : c;
    if (name == "config") continue;
    CLI::Option* opt = nullptr;
    try {
      opt = app.get_option("--" + name);
    } catch (const CLI::OptionNotFound&) {
      throw ValidationError("config " + path + ": unknown key \"" + key + "\"");
    }
    if (opt->count() > 0) continue;
    const auto to_str = [](const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
    if (value.is_array()) {
      for (const auto& v : value) opt->add_result(to_str(v));
    } else {
      opt->add_result(to_str(value));
    }
    opt->run_callback();
  }
}

void require(bool present, const std::string& option) {
  if (!present) throw ValidationError(option + " is required");
}

template <typename Fn>
void write_output(const std::string& out, Fn&& emit) {
  if (out.empty() || out == "-") {
    emit(std::cout);
    return;
  }
  if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
  std::ofstream f(out, std::ios::trunc | std::ios::binary);
  if (!f) throw IoError("cannot write " + out);
  emit(f);
  if (!f.flush()) throw IoError("write failed: " + out);
}

Corpus read_raw_corpus(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  Corpus corpus;
  std::string line;
  while (std::getline(in, line)) {
    auto s = tokenize(line);
    if (!s.empty()) corpus.push_back(std::move(s));
  }
  return corpus;
}

struct StoreArgs {
  std::string path;
  std::string format = "text";
  std::string ngrams;

  void add(CLI::App* sub) {
    sub->add_option("--embeddings", path, "Embedding file");
    sub->add_option("--format", format, "Embedding file format: text or binary");
    sub->add_option("--ngrams", ngrams, "Subword n-gram table written by train-embeddings");
  }
  EmbeddingStore load() const {
    require(!path.empty(), "--embeddings");
    auto store = load_embeddings(path, parse_embedding_format(format));
    if (!ngrams.empty()) store = with_subwords(store, load_ngram_table(ngrams));
    return store;
  }
};

json weat_result_json(const WeatResult& r) {
  json j{{"test", r.test_name}, {"ok", r.ok}};
  if (!r.ok) {
    j["error"] = r.error;
    return j;
  }
  j["statistic"] = r.statistic;
  j["effect_size"] = r.effect_size;
  j["p_value"] = r.p_value ? json(*r.p_value) : json(nullptr);
  j["p_exact"] = r.p_exact;
  j["coverage"] = {{"X", r.coverage_x}, {"Y", r.coverage_y}, {"A", r.coverage_a}, {"B", r.coverage_b}};
  j["dropped_words"] = r.dropped_words;
  return j;
}

json optional_metric(const std::function<double()>& f) {
  try {
    return f();
  } catch (const DegenerateError&) {
    return nullptr;
  }
}

using Runner = std::function<void()>;

// Subcommands ----------------------------------------------------------------

Runner add_train_embeddings(CLI::App& app) {
  auto* sub = app.add_subcommand("train-embeddings", "Train skip-gram embeddings on a corpus");
  struct Args {
    std::string corpus, out, config, format = "text";
    std::uint64_t seed = 1;
    TrainConfig cfg;
  };
  auto a = std::make_shared<Args>();
  sub->add_option("--corpus", a->corpus, "UTF-8 corpus, one sentence per line");
  sub->add_option("--out", a->out, "Output embedding file");
  sub->add_option("--format", a->format, "Output format: text or binary");
  sub->add_option("--config", a->config, "JSON file with option defaults");
  sub->add_option("--seed", a->seed, "Random seed");
  sub->add_option("--dim", a->cfg.dim);
  sub->add_option("--window", a->cfg.window);
  sub->add_option("--negatives", a->cfg.negatives);
  sub->add_option("--epochs", a->cfg.epochs);
  sub->add_option("--learning-rate", a->cfg.learning_rate);
  sub->add_option("--min-learning-rate", a->cfg.min_learning_rate);
  sub->add_option("--min-count", a->cfg.min_count);
  sub->add_flag("--subword-mode", a->cfg.subword_mode, "Train fastText-style subword vectors");
  sub->add_option("--ngram-min", a->cfg.ngram_min);
  sub->add_option("--ngram-max", a->cfg.ngram_max);
  sub->add_option("--bucket-count", a->cfg.bucket_count);
  sub->add_option("--threads", a->cfg.threads, "Worker threads (>1 is not reproducible)");
  return [sub, a] {
    apply_config(*sub, a->config);
    require(!a->corpus.empty(), "--corpus");
    require(!a->out.empty(), "--out");
    a->cfg.seed = a->seed;
    const auto format = parse_embedding_format(a->format);
    const auto store = train_skipgram(read_raw_corpus(a->corpus), a->cfg);
    save_embeddings(store, a->out, format);
    if (store.subwords()) save_ngram_table(*store.subwords(), a->out + ".ngrams");
    std::cerr << "trained " << store.size() << " words x " << store.dim() << " dims -> " << a->out << '\n';
  };
}

Runner add_weat(CLI::App& app) {
  auto* sub = app.add_subcommand("weat", "Compute WEAT statistics for one or more test files");
  struct Args {
    StoreArgs store;
    std::vector<std::string> tests;
    std::string out, config, policy = "drop";
    std::uint64_t seed = 0;
    PermutationOptions perm;
  };
  auto a = std::make_shared<Args>();
  a->store.add(sub);
  sub->add_option("--test", a->tests, "WEAT test JSON file (repeatable)");
  sub->add_option("--oov-policy", a->policy, "drop or strict");
  sub->add_option("--max-permutations", a->perm.max_permutations, "Exact enumeration limit");
  sub->add_option("--monte-carlo-samples", a->perm.monte_carlo_samples);
  sub->add_option("--seed", a->seed, "Seed for Monte Carlo p-values");
  sub->add_option("--config", a->config, "JSON file with option defaults");
  sub->add_option("--out", a->out, "Output JSON (default stdout)");
  return [sub, a] {
    apply_config(*sub, a->config);
    require(!a->tests.empty(), "--test");
    const auto store = a->store.load();
    std::vector<WeatTest> tests;
    for (const auto& t : a->tests) tests.push_back(load_weat_test(t));
    WeatSuiteOptions opts;
    opts.policy = parse_oov_policy(a->policy);
    opts.permutation = a->perm;
    opts.permutation.seed = a->seed;
    json out = json::array();
    for (const auto& r : run_weat_suite(store, tests, opts)) out.push_back(weat_result_json(r));
    write_output(a->out, [&](std::ostream& os) { os << out.dump(2) << '\n'; });
  };
}

Runner add_expand_wordlist(CLI::App& app) {
  auto* sub = app.add_subcommand("expand-wordlist", "Expand seed words or a lexicon with nearest neighbours");
  struct Args {
    StoreArgs store;
    std::string lexicon, out, config;
    std::vector<std::string> words;
    std::size_t k = 100;
    std::uint64_t seed = 0;
  };
  auto a = std::make_shared<Args>();
  a->store.add(sub);
  sub->add_option("--lexicon", a->lexicon, "Lexicon JSON to expand (all four sets)");
  sub->add_option("--words", a->words, "Seed words, when no lexicon is given")->delimiter(',');
  sub->add_option("-k,--k", a->k, "Neighbours per seed");
  sub->add_option("--seed", a->seed, "Unused; expansion is deterministic");
  sub->add_option("--config", a->config, "JSON file with option defaults");
  sub->add_option("--out", a->out, "Output JSON (default stdout)");
  return [sub, a] {
    apply_config(*sub, a->config);
    require(!a->lexicon.empty() || !a->words.empty(), "--lexicon or --words");
    const auto store = a->store.load();
    std::string text;
    if (!a->lexicon.empty()) {
      text = lexicon_to_json(expand_lexicon(store, load_lexicon(a->lexicon), a->k));
    } else {
      std::vector<std::string> seeds;
      for (const auto& w : a->words) seeds.push_back(normalize_text(w));
      text = json(expand_wordlist(store, seeds, a->k)).dump(2);
    }
    write_output(a->out, [&](std::ostream& os) { os << text << '\n'; });
  };
}

Runner add_balance_corpus(CLI::App& app) {
  auto* sub = app.add_subcommand("balance-corpus", "Sub-sample stereotyped sentences of a corpus");
  struct Args {
    std::string corpus, lexicon, out, config, removed, direction = "debias";
    BalanceOptions opts;
  };
  auto a = std::make_shared<Args>();
  sub->add_option("--corpus", a->corpus, "UTF-8 corpus, one sentence per line");
  sub->add_option("--lexicon", a->lexicon, "Lexicon JSON");
  sub->add_option("--direction", a->direction, "debias or overbias");
  sub->add_option("--strength", a->opts.strength, "Fraction of the target removal, in [0, 1]");
  sub->add_option("--budget", a->opts.budget, "Max removed fraction of the corpus, in (0, 0.05]");
  sub->add_option("--seed", a->opts.seed, "Sampling seed");
  sub->add_option("--removed", a->removed, "Write removed sentence indices here");
  sub->add_option("--config", a->config, "JSON file with option defaults");
  sub->add_option("--out", a->out, "Output corpus (default stdout)");
  return [sub, a] {
    apply_config(*sub, a->config);
    require(!a->corpus.empty(), "--corpus");
    require(!a->lexicon.empty(), "--lexicon");
    a->opts.direction = parse_direction(a->direction);
    const auto tagged = tag_sentences(read_raw_corpus(a->corpus), load_lexicon(a->lexicon));
    const auto res = balance_corpus(tagged, a->opts);
    write_output(a->out, [&](std::ostream& os) { write_corpus(res.corpus, os); });
    if (!a->removed.empty()) {
      write_output(a->removed, [&](std::ostream& os) {
        for (auto i : res.removed) os << i << '\n';
      });
    }
    std::cerr << "removed " << res.removed.size() << " of " << tagged.size() << " sentences; pro "
              << res.pro_before << " -> " << res.pro_after << ", anti " << res.anti_before << " -> "
              << res.anti_after << '\n';
  };
}

Runner add_attract_repel(CLI::App& app) {
  auto* sub = app.add_subcommand("attract-repel", "Specialise a store with lexicon constraints");
  struct Args {
    StoreArgs store;
    std::string lexicon, out, config, out_format = "text", direction = "debias";
    ARHyper hyper;
  };
  auto a = std::make_shared<Args>();
  a->store.add(sub);
  sub->add_option("--lexicon", a->lexicon, "Lexicon JSON");
  sub->add_option("--direction", a->direction, "debias or overbias");
  sub->add_option("--attract-margin", a->hyper.attract_margin);
  sub->add_option("--repel-margin", a->hyper.repel_margin);
  sub->add_option("--reg-strength", a->hyper.reg_strength);
  sub->add_option("--learning-rate", a->hyper.learning_rate);
  sub->add_option("--epochs", a->hyper.epochs);
  sub->add_option("--batch-size", a->hyper.batch_size);
  sub->add_option("--seed", a->hyper.seed, "Shuffling seed");
  sub->add_option("--out-format", a->out_format, "Output format: text or binary");
  sub->add_option("--config", a->config, "JSON file with option defaults");
  sub->add_option("--out", a->out, "Output embedding file");
  return [sub, a] {
    apply_config(*sub, a->config);
    require(!a->lexicon.empty(), "--lexicon");
    require(!a->out.empty(), "--out");
    const auto store = a->store.load();
    const auto constraints = build_constraint_pairs(load_lexicon(a->lexicon), parse_direction(a->direction));
    const auto out = attract_repel(store, constraints, a->hyper);
    save_embeddings(out, a->out, parse_embedding_format(a->out_format));
  };
}

Runner add_train_classifier(CLI::App& app) {
  auto* sub = app.add_subcommand("train-classifier", "Train a logistic-regression classifier on frozen embeddings");
  struct Args {
    StoreArgs store;
    std::string train, out, config;
    ClassifierConfig cfg;
  };
  auto a = std::make_shared<Args>();
  a->store.add(sub);
  sub->add_option("--train", a->train, "Labeled TSV: label, group, text");
  sub->add_option("--learning-rate", a->cfg.learning_rate);
  sub->add_option("--epochs", a->cfg.epochs);
  sub->add_option("--l2", a->cfg.l2);
  sub->add_option("--seed", a->cfg.seed, "Training seed");
  sub->add_option("--config", a->config, "JSON file with option defaults");
  sub->add_option("--out", a->out, "Output model JSON (default stdout)");
  return [sub, a] {
    apply_config(*sub, a->config);
    require(!a->train.empty(), "--train");
    const auto store = a->store.load();
    const auto clf = train_classifier(store, load_labeled(a->train), a->cfg);
    const json model{{"dim", store.dim()}, {"bias", clf.bias()}, {"weights", clf.weights()}};
    write_output(a->out, [&](std::ostream& os) { os << model.dump(2) << '\n'; });
  };
}

Classifier load_model(const std::string& path, std::size_t dim) {
  try {
    const auto j = json::parse(read_file(path));
    auto weights = j.at("weights").get<std::vector<double>>();
    if (weights.size() != dim) {
      throw ValidationError("model dimension " + std::to_string(weights.size()) + " does not match store dimension " +
                            std::to_string(dim));
    }
    return Classifier(std::move(weights), j.at("bias").get<double>());
  } catch (const json::exception& e) {
    throw ValidationError("model " + path + ": " + e.what());
  }
}

Runner add_eval_gaps(CLI::App& app) {
  auto* sub = app.add_subcommand("eval-gaps", "Per-group precision and recall gaps of a trained classifier");
  struct Args {
    StoreArgs store;
    std::string model, test, out, config, reference = "a";
    std::uint64_t seed = 0;
  };
  auto a = std::make_shared<Args>();
  a->store.add(sub);
  sub->add_option("--model", a->model, "Model JSON from train-classifier");
  sub->add_option("--test", a->test, "Labeled TSV: label, group, text");
  sub->add_option("--reference", a->reference, "Reference group: a or b");
  sub->add_option("--seed", a->seed, "Unused; evaluation is deterministic");
  sub->add_option("--config", a->config, "JSON file with option defaults");
  sub->add_option("--out", a->out, "Output JSON (default stdout)");
  return [sub, a] {
    apply_config(*sub, a->config);
    require(!a->model.empty(), "--model");
    require(!a->test.empty(), "--test");
    const auto ref = parse_group(a->reference);
    if (ref == Group::kNeutral) throw ValidationError("--reference must be a or b");
    const auto store = a->store.load();
    const auto clf = load_model(a->model, store.dim());
    const auto conf = grouped_confusion(clf, store, load_labeled(a->test));
    json groups = json::object();
    for (auto g : {Group::kA, Group::kB, Group::kNeutral}) {
      const auto& c = conf[g];
      groups[std::string(to_string(g))] = {{"tp", c.tp},
                                           {"fp", c.fp},
                                           {"fn", c.fn},
                                           {"tn", c.tn},
                                           {"precision", optional_metric([&] { return precision(c); })},
                                           {"recall", optional_metric([&] { return recall(c); })}};
    }
    const auto all = conf.overall();
    // Undefined gaps are reported as null with the reason, never as a number.
    json gap_errors = json::array();
    const auto gap = [&](double (*metric)(const GroupedConfusion&, Group)) -> json {
      try {
        return metric(conf, ref);
      } catch (const DegenerateError& e) {
        gap_errors.push_back(e.what());
        return nullptr;
      }
    };
    json out{{"reference_group", a->reference},
             {"precision_gap", gap(precision_gap)},
             {"recall_gap", gap(recall_gap)},
             {"accuracy", accuracy(all)},
             {"f1", optional_metric([&] { return f1(all); })},
             {"groups", groups}};
    if (!gap_errors.empty()) {
      out["gap_errors"] = gap_errors;
      for (const auto& e : gap_errors) warn(e.get<std::string>());
    }
    write_output(a->out, [&](std::ostream& os) { os << out.dump(2) << '\n'; });
  };
}

Runner add_run_experiment(CLI::App& app) {
  auto* sub = app.add_subcommand("run-experiment", "Run the full intrinsic vs extrinsic bias study");
  struct Args {
    std::string config, out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> parallel;
  };
  auto a = std::make_shared<Args>();
  sub->add_option("--config", a->config, "Experiment config JSON")->required();
  sub->add_option("--seed", a->seed, "Master seed (overrides the config)");
  sub->add_option("--out", a->out, "Output directory (overrides the config)");
  sub->add_option("--parallel", a->parallel, "Conditions run concurrently");
  return [a] {
    auto cfg = load_experiment_config(a->config);
    if (a->seed) cfg.seed = *a->seed;
    if (!a->out.empty()) cfg.output_dir = a->out;
    if (a->parallel) cfg.parallel_conditions = *a->parallel;
    const auto table = run_experiment(cfg);
    write_report(table, cfg.output_dir);
    std::size_t failed = 0;
    for (const auto& r : table.records) failed += r.ok ? 0 : 1;
    std::cerr << table.records.size() << " conditions (" << failed << " failed) -> " << cfg.output_dir.string()
              << '\n';
  };
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Intrinsic and extrinsic bias measurement for word embeddings"};
  app.require_subcommand(1);
  std::vector<std::pair<CLI::App*, Runner>> commands;
  for (const auto& add : {add_train_embeddings, add_weat, add_expand_wordlist, add_balance_corpus,
                          add_attract_repel, add_train_classifier, add_eval_gaps, add_run_experiment}) {
    auto run = add(app);
    commands.emplace_back(app.get_subcommands([](CLI::App*) { return true; }).back(), std::move(run));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    for (auto& [sub, run] : commands) {
      if (sub->parsed()) run();
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
