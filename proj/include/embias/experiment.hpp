#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "embias/bias_mod.hpp"
#include "embias/downstream.hpp"
#include "embias/embed_store.hpp"
#include "embias/sgns.hpp"
#include "embias/weat.hpp"

namespace embias {

enum class Method { kBaseline, kPreprocessing, kPostprocessing };
std::string_view to_string(Method m);
Method parse_method(std::string_view name);

struct ExperimentConfig {
  // Embedding source: train on `corpus`, or load `embeddings` when set.
  std::filesystem::path corpus;
  TrainConfig train;
  std::filesystem::path embeddings;
  EmbeddingFormat embeddings_format = EmbeddingFormat::kText;

  std::vector<std::filesystem::path> weat_tests;
  std::filesystem::path lexicon;
  std::size_t expand_k = 100;

  std::vector<Method> methods{Method::kPreprocessing, Method::kPostprocessing};
  std::vector<Direction> directions{Direction::kDebias, Direction::kOverbias};
  std::vector<double> strengths{0.25, 0.5, 0.75, 1.0};
  double balance_budget = 0.05;
  ARHyper attract_repel;

  std::filesystem::path train_data;
  std::filesystem::path test_data;
  Group reference_group = Group::kA;
  ClassifierConfig classifier;

  WeatSuiteOptions weat;
  std::uint64_t correlation_permutations = 10'000;

  std::filesystem::path output_dir = "experiment_out";
  std::uint64_t seed = 0;
  std::size_t parallel_conditions = 1;

  bool trains_embeddings() const { return embeddings.empty(); }
  void validate() const;
};

// JSON config. Relative paths are resolved against `base_dir`. Every field
// except the data paths has a default.
ExperimentConfig parse_experiment_config(std::string_view json_text, const std::filesystem::path& base_dir);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

struct Condition {
  Method method = Method::kBaseline;
  Direction direction = Direction::kDebias;
  double strength = 0.0;

  std::string id() const;
};

struct ExperimentRecord {
  Condition condition;
  bool ok = false;
  std::string error;
  std::vector<WeatResult> weat;
  std::optional<double> precision_gap;
  std::optional<double> recall_gap;
  std::string gap_error;
  double accuracy = 0.0;
  double f1 = 0.0;
  std::uint64_t embedding_seed = 0;
  std::uint64_t modification_seed = 0;
  std::uint64_t classifier_seed = 0;
  std::filesystem::path store_path;  // archived store, relative to the output dir
};

struct CorrelationSummary {
  std::string test_name;
  std::string gap_metric;  // "precision_gap" | "recall_gap"
  std::string method;      // "all" | "preprocessing" | "postprocessing"
  std::size_t n = 0;
  std::optional<double> r;
  std::optional<double> p_value;
  std::string status;  // "ok" | "insufficient_n" | "zero_variance"
};

struct ExperimentTable {
  std::vector<std::string> test_names;
  std::vector<ExperimentRecord> records;
  std::vector<CorrelationSummary> correlations;
};

// Baseline first, then every (method, direction, strength) in config order.
std::vector<Condition> experiment_grid(const ExperimentConfig& config);

// Slices with fewer than 3 points are reported as insufficient_n.
std::vector<CorrelationSummary> correlate(const ExperimentTable& table, std::uint64_t permutations,
                                          std::uint64_t seed);

// Runs the whole study and archives per-condition artifacts under
// config.output_dir/conditions/. Throws only if the baseline fails.
ExperimentTable run_experiment(const ExperimentConfig& config);

}  // namespace embias
