#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rectx/blackbox.hpp"
#include "rectx/evaluation.hpp"
#include "rectx/factorization.hpp"
#include "rectx/features.hpp"
#include "rectx/instance_explainer.hpp"
#include "rectx/rule_extractor.hpp"
#include "rectx/tabular_data.hpp"

namespace rectx {

inline constexpr int kConfigVersion = 1;

// Everything that determines a run. Serialized as "key = value" lines with a
// leading "version = 1"; '#' starts a comment.
struct RunConfig {
  std::string dataset;
  std::string label_column;
  char delimiter = ',';
  double train_fraction = 0.7;
  std::uint64_t split_seed = 0;

  std::string model = "forest";  // forest | oracle
  ForestConfig forest;
  std::string oracle_command;
  int oracle_categories = 0;

  std::size_t bins = 4;
  PerturbationConfig perturbation;

  std::size_t rank = 10;
  std::size_t nmf_max_iters = 500;
  double nmf_tolerance = 1e-5;
  std::uint64_t nmf_seed = 0;

  std::size_t r_max = 5;
  std::vector<double> theta_grid;  // empty: deciles of W
  std::optional<std::size_t> k_theta_max;
  std::size_t kmeans_restarts = 10;
  std::uint64_t search_seed = 0;

  std::string output_dir = "rectx-out";
  bool dump_matrices = false;
  // When set, contribution matrices are read from here instead of computed.
  std::string contributions_dir;

  static const std::vector<std::string>& keys();
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  // Sets every seed to derivations of one base seed.
  void reseed(std::uint64_t base);
  void validate() const;
};

RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::string& path);
void write_config(std::ostream& out, const RunConfig& config);

// Data, model and feature space shared by every stage of a run.
struct PreparedRun {
  Dataset train;
  Dataset test;
  std::unique_ptr<BlackBoxModel> model;
  std::optional<double> test_accuracy;
  LabeledDataset labeled_train;
  LabeledDataset labeled_test;
  std::optional<FeatureCatalog> catalog;

  std::string dataset_descriptor;
};

std::unique_ptr<BlackBoxModel> make_model(const RunConfig& config, const Dataset& train);
PreparedRun prepare_run(const RunConfig& config);

// Rejects ranks outside 1 <= k <= min(2M, N) with a ConfigError.
void validate_rank(std::size_t k, std::size_t num_features, std::size_t num_instances);

std::vector<ContributionMatrix> compute_contributions(PreparedRun& run, const RunConfig& config);
// Reads contrib_<c>.mat for every category; labels come from the run.
std::vector<ContributionMatrix> load_contributions(const PreparedRun& run, const std::string& dir);
void dump_contributions(const std::vector<ContributionMatrix>& matrices, const std::string& dir);

struct CategoryRun {
  Factorization factorization;
  SearchResult search;
};

struct ExtractionRun {
  RunReport report;
  std::vector<CategoryRun> categories;
};

ExtractionRun extract_all(const PreparedRun& run, const std::vector<ContributionMatrix>& matrices,
                          const RunConfig& config, std::size_t rank);

// extract: prepare, compute (or load) contributions, extract, evaluate.
ExtractionRun run_extract(const RunConfig& config);
// Writes report.txt, report.tsv, config.used and, when requested, matrix dumps.
void write_outputs(const ExtractionRun& result, const PreparedRun& run,
                   const std::vector<ContributionMatrix>& matrices, const RunConfig& config);

struct KSweepRow {
  std::size_t k = 0;
  bool ok = false;
  std::string error;
  double train_macro_f1 = 0.0;
  double test_macro_f1 = 0.0;
};

// Shared contribution matrices, re-factorized per k. Invalid ranks fail
// their own row only.
std::vector<KSweepRow> run_ksweep(const RunConfig& config, const std::vector<std::size_t>& ks);

// Purity of k-means clusters of the embedded explanations per r, pooled over
// categories.
std::vector<PuritySummary> run_purity(const RunConfig& config, const std::vector<std::size_t>& rs);

}  // namespace rectx
