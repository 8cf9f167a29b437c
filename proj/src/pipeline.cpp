#include "rectx/pipeline.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <map>
#include <set>
#include <sstream>

#include "rectx/errors.hpp"
#include "rectx/matrix_io.hpp"
#include "rectx/rng.hpp"
#include "rectx/text_io.hpp"

namespace rectx {

namespace {

std::uint64_t to_seed(const std::string& key, const std::string& value) {
  const auto v = parse_unsigned(value);
  if (!v) throw ConfigError(key + ": expected a nonnegative integer, got '" + value + "'");
  return *v;
}

std::size_t to_count(const std::string& key, const std::string& value) {
  return static_cast<std::size_t>(to_seed(key, value));
}

double to_double(const std::string& key, const std::string& value) {
  const auto v = parse_real(value);
  if (!v || !std::isfinite(*v)) throw ConfigError(key + ": expected a real, got '" + value + "'");
  return *v;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + value + "'");
}

std::string optional_count(const std::optional<std::size_t>& v, const char* none) {
  return v ? std::to_string(*v) : std::string(none);
}

}  // namespace

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> k = {
      "dataset",         "label_column",      "delimiter",        "train_fraction",
      "split_seed",      "model",             "forest_trees",     "forest_max_depth",
      "forest_min_leaf", "forest_features_per_split",              "forest_seed",
      "oracle_command",  "oracle_categories", "bins",             "samples",
      "kernel_width",    "flip_probability", "ridge",             "explain_seed",     "rank",
      "nmf_max_iters",   "nmf_tolerance",     "nmf_seed",         "r_max",
      "theta_grid",      "k_theta_max",       "kmeans_restarts",  "search_seed",
      "output_dir",      "dump_matrices",     "contributions_dir"};
  return k;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (key == "dataset") dataset = value;
  else if (key == "label_column") label_column = value;
  else if (key == "delimiter") {
    if (value == "tab" || value == "\\t") delimiter = '\t';
    else if (value.size() == 1) delimiter = value[0];
    else throw ConfigError("delimiter: expected one character or 'tab'");
  } else if (key == "train_fraction") train_fraction = to_double(key, value);
  else if (key == "split_seed") split_seed = to_seed(key, value);
  else if (key == "model") model = value;
  else if (key == "forest_trees") forest.num_trees = to_count(key, value);
  else if (key == "forest_max_depth") {
    forest.max_depth = value == "none" ? std::nullopt : std::optional<std::size_t>(to_count(key, value));
  } else if (key == "forest_min_leaf") forest.min_leaf = to_count(key, value);
  else if (key == "forest_features_per_split") {
    forest.features_per_split = value == "sqrt" ? std::nullopt : std::optional<std::size_t>(to_count(key, value));
  } else if (key == "forest_seed") forest.seed = to_seed(key, value);
  else if (key == "oracle_command") oracle_command = value;
  else if (key == "oracle_categories") oracle_categories = static_cast<int>(to_count(key, value));
  else if (key == "bins") bins = to_count(key, value);
  else if (key == "samples") perturbation.num_samples = to_count(key, value);
  else if (key == "kernel_width") {
    perturbation.kernel_width = value == "auto" ? std::nullopt : std::optional<double>(to_double(key, value));
  } else if (key == "ridge") perturbation.ridge_strength = to_double(key, value);
  else if (key == "flip_probability") perturbation.flip_probability = to_double(key, value);
  else if (key == "explain_seed") perturbation.seed = to_seed(key, value);
  else if (key == "rank") rank = to_count(key, value);
  else if (key == "nmf_max_iters") nmf_max_iters = to_count(key, value);
  else if (key == "nmf_tolerance") nmf_tolerance = to_double(key, value);
  else if (key == "nmf_seed") nmf_seed = to_seed(key, value);
  else if (key == "r_max") r_max = to_count(key, value);
  else if (key == "theta_grid") {
    theta_grid.clear();
    if (value != "auto") {
      for (const auto& t : split(value, ',')) theta_grid.push_back(to_double(key, t));
    }
  } else if (key == "k_theta_max") {
    k_theta_max = value == "auto" ? std::nullopt : std::optional<std::size_t>(to_count(key, value));
  } else if (key == "kmeans_restarts") kmeans_restarts = to_count(key, value);
  else if (key == "search_seed") search_seed = to_seed(key, value);
  else if (key == "output_dir") output_dir = value;
  else if (key == "dump_matrices") dump_matrices = to_bool(key, value);
  else if (key == "contributions_dir") contributions_dir = value;
  else throw ConfigError("unknown configuration key '" + key + "'");
}

std::string RunConfig::get(const std::string& key) const {
  if (key == "dataset") return dataset;
  if (key == "label_column") return label_column;
  if (key == "delimiter") return delimiter == '\t' ? "tab" : std::string(1, delimiter);
  if (key == "train_fraction") return format_real(train_fraction);
  if (key == "split_seed") return std::to_string(split_seed);
  if (key == "model") return model;
  if (key == "forest_trees") return std::to_string(forest.num_trees);
  if (key == "forest_max_depth") return optional_count(forest.max_depth, "none");
  if (key == "forest_min_leaf") return std::to_string(forest.min_leaf);
  if (key == "forest_features_per_split") return optional_count(forest.features_per_split, "sqrt");
  if (key == "forest_seed") return std::to_string(forest.seed);
  if (key == "oracle_command") return oracle_command;
  if (key == "oracle_categories") return std::to_string(oracle_categories);
  if (key == "bins") return std::to_string(bins);
  if (key == "samples") return std::to_string(perturbation.num_samples);
  if (key == "kernel_width") return perturbation.kernel_width ? format_real(*perturbation.kernel_width) : "auto";
  if (key == "ridge") return format_real(perturbation.ridge_strength);
  if (key == "flip_probability") return format_real(perturbation.flip_probability);
  if (key == "explain_seed") return std::to_string(perturbation.seed);
  if (key == "rank") return std::to_string(rank);
  if (key == "nmf_max_iters") return std::to_string(nmf_max_iters);
  if (key == "nmf_tolerance") return format_real(nmf_tolerance);
  if (key == "nmf_seed") return std::to_string(nmf_seed);
  if (key == "r_max") return std::to_string(r_max);
  if (key == "theta_grid") {
    if (theta_grid.empty()) return "auto";
    std::string out;
    for (std::size_t i = 0; i < theta_grid.size(); ++i) out += (i ? "," : "") + format_real(theta_grid[i]);
    return out;
  }
  if (key == "k_theta_max") return optional_count(k_theta_max, "auto");
  if (key == "kmeans_restarts") return std::to_string(kmeans_restarts);
  if (key == "search_seed") return std::to_string(search_seed);
  if (key == "output_dir") return output_dir;
  if (key == "dump_matrices") return dump_matrices ? "true" : "false";
  if (key == "contributions_dir") return contributions_dir;
  throw ConfigError("unknown configuration key '" + key + "'");
}

void RunConfig::reseed(std::uint64_t base) {
  split_seed = derive_seed(base, 0) >> 1;
  forest.seed = derive_seed(base, 1) >> 1;
  perturbation.seed = derive_seed(base, 2) >> 12;
  nmf_seed = derive_seed(base, 3) >> 1;
  search_seed = derive_seed(base, 4) >> 1;
}

void RunConfig::validate() const {
  if (dataset.empty()) throw ConfigError("dataset path is required");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("train_fraction must lie in (0, 1)");
  if (model != "forest" && model != "oracle") throw ConfigError("model must be 'forest' or 'oracle'");
  if (model == "forest") {
    if (label_column.empty()) throw ConfigError("the built-in forest needs label_column");
    if (forest.num_trees < 1) throw ConfigError("forest_trees must be at least 1");
    if (forest.min_leaf < 1) throw ConfigError("forest_min_leaf must be at least 1");
  } else {
    if (split_whitespace(oracle_command).empty()) throw ConfigError("oracle_command is required");
    if (oracle_categories < 1) throw ConfigError("oracle_categories must be at least 1");
  }
  if (bins < 2) throw ConfigError("bins must be at least 2");
  perturbation.validate();
  if (rank < 1) throw ConfigError("rank must be at least 1");
  if (nmf_max_iters < 1) throw ConfigError("nmf_max_iters must be at least 1");
  if (!(nmf_tolerance > 0.0)) throw ConfigError("nmf_tolerance must be positive");
  if (r_max < 1) throw ConfigError("r_max must be at least 1");
  if (k_theta_max && *k_theta_max < 1) throw ConfigError("k_theta_max must be at least 1");
  for (double t : theta_grid) {
    if (t < 0.0) throw ConfigError("theta_grid entries must be nonnegative");
  }
}

RunConfig parse_config(std::istream& in) {
  RunConfig config;
  std::string line;
  std::size_t line_number = 0;
  bool versioned = false;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++line_number;
    const auto hash = line.find('#');
    const std::string_view body = trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) throw ConfigError("line " + std::to_string(line_number) + ": expected key = value");
    const std::string key(trim(body.substr(0, eq)));
    const std::string value(trim(body.substr(eq + 1)));
    if (!versioned) {
      if (key != "version" || value != std::to_string(kConfigVersion)) {
        throw ConfigError("configuration must start with 'version = " + std::to_string(kConfigVersion) + "'");
      }
      versioned = true;
      continue;
    }
    if (!seen.insert(key).second) throw ConfigError("line " + std::to_string(line_number) + ": duplicate key '" + key + "'");
    config.set(key, value);
  }
  if (!versioned) throw ConfigError("configuration is empty");
  return config;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open configuration '" + path + "'");
  RunConfig config = parse_config(in);
  // Relative dataset paths are resolved against the configuration's folder.
  const auto base = std::filesystem::path(path).parent_path();
  if (!config.dataset.empty() && std::filesystem::path(config.dataset).is_relative() &&
      !std::filesystem::exists(config.dataset)) {
    config.dataset = (base / config.dataset).lexically_normal().string();
  }
  return config;
}

void write_config(std::ostream& out, const RunConfig& config) {
  out << "version = " << kConfigVersion << '\n';
  for (const auto& key : RunConfig::keys()) out << key << " = " << config.get(key) << '\n';
}

std::unique_ptr<BlackBoxModel> make_model(const RunConfig& config, const Dataset& train) {
  if (config.model == "forest") return train_forest(train, config.forest);
  return connect_oracle(split_whitespace(config.oracle_command), train.num_attributes(), config.oracle_categories);
}

PreparedRun prepare_run(const RunConfig& config) {
  config.validate();
  LoadOptions options;
  options.delimiter = config.delimiter;
  if (!config.label_column.empty()) options.label_column = config.label_column;
  const Dataset full = load_dataset(config.dataset, options);
  auto [train, test] = split(full, config.train_fraction, config.split_seed);

  PreparedRun run{std::move(train), std::move(test), nullptr, std::nullopt, {}, {}, std::nullopt, {}};
  run.model = make_model(config, run.train);
  run.labeled_train = label_with(run.train, *run.model);
  run.labeled_test = label_with(run.test, *run.model);
  if (run.test.has_source_labels() &&
      run.test.source_category_names().size() == static_cast<std::size_t>(run.model->num_categories())) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < run.test.size(); ++i) {
      correct += run.labeled_test.model_labels[i] == run.test.source_labels()[i] ? 1 : 0;
    }
    run.test_accuracy = static_cast<double>(correct) / static_cast<double>(run.test.size());
  }
  run.catalog = build_catalog(run.train, config.bins);
  run.dataset_descriptor = config.dataset + " rows=" + std::to_string(full.size()) +
                           " attributes=" + std::to_string(full.num_attributes()) +
                           " train=" + std::to_string(run.train.size()) + " test=" + std::to_string(run.test.size());
  return run;
}

void validate_rank(std::size_t k, std::size_t num_features, std::size_t num_instances) {
  const std::size_t limit = std::min(2 * num_features, num_instances);
  if (k < 1 || k > limit) {
    throw ConfigError("rank k = " + std::to_string(k) + " violates k <= min(2M, N) = min(" +
                      std::to_string(2 * num_features) + ", " + std::to_string(num_instances) + ") = " +
                      std::to_string(limit));
  }
}

std::vector<ContributionMatrix> compute_contributions(PreparedRun& run, const RunConfig& config) {
  if (!config.contributions_dir.empty()) return load_contributions(run, config.contributions_dir);
  return build_contribution_matrices(*run.model, *run.catalog, run.labeled_train, config.perturbation);
}

std::vector<ContributionMatrix> load_contributions(const PreparedRun& run, const std::string& dir) {
  std::vector<ContributionMatrix> matrices;
  for (int c = 1; c <= run.model->num_categories(); ++c) {
    const auto path = (std::filesystem::path(dir) / ("contrib_" + std::to_string(c) + ".mat")).string();
    TaggedMatrix loaded = load_matrix(path);
    if (loaded.target != c) throw FormatError(path + ": target " + std::to_string(loaded.target) + " != " + std::to_string(c));
    if (loaded.values.rows() != static_cast<Eigen::Index>(run.catalog->size()) ||
        loaded.values.cols() != static_cast<Eigen::Index>(run.train.size())) {
      throw FormatError(path + ": shape does not match M x N of this run");
    }
    ContributionMatrix m;
    m.values = std::move(loaded.values);
    m.target_category = c;
    m.labels = run.labeled_train.one_vs_rest(c);
    matrices.push_back(std::move(m));
  }
  return matrices;
}

void dump_contributions(const std::vector<ContributionMatrix>& matrices, const std::string& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& m : matrices) {
    save_matrix((std::filesystem::path(dir) / ("contrib_" + std::to_string(m.target_category) + ".mat")).string(),
                m.values, m.target_category);
  }
}

ExtractionRun extract_all(const PreparedRun& run, const std::vector<ContributionMatrix>& matrices,
                          const RunConfig& config, std::size_t rank) {
  validate_rank(rank, run.catalog->size(), run.train.size());
  ExtractionRun result;
  RunReport& report = result.report;
  report.dataset_descriptor = run.dataset_descriptor;
  report.model_descriptor = run.model->descriptor();
  report.model_accuracy = run.test_accuracy;
  report.attribute_names = run.train.attribute_names();
  for (const auto& key : {"bins", "samples", "kernel_width", "flip_probability", "ridge", "explain_seed", "nmf_max_iters",
                          "nmf_tolerance", "nmf_seed", "r_max", "theta_grid", "k_theta_max",
                          "kmeans_restarts", "search_seed", "train_fraction", "split_seed"}) {
    report.hyperparameters.emplace_back(key, config.get(key));
  }
  report.hyperparameters.emplace_back("rank", std::to_string(rank));
  report.hyperparameters.emplace_back("features", std::to_string(run.catalog->size()));

  for (const auto& phi : matrices) {
    const int c = phi.target_category;
    CategoryRun category;
    const StackedMatrix stacked = stack_nonnegative(phi);
    category.factorization = nmf(stacked, {rank, config.nmf_max_iters, config.nmf_tolerance,
                                           derive_seed(config.nmf_seed, static_cast<std::uint64_t>(c))});
    SearchOptions options;
    options.r_max = config.r_max;
    options.theta_grid = config.theta_grid;
    options.k_theta_max = config.k_theta_max;
    options.kmeans_restarts = config.kmeans_restarts;
    options.seed = derive_seed(config.search_seed, static_cast<std::uint64_t>(c));
    category.search = search_params(category.factorization.H, category.factorization.W, phi.labels,
                                     *run.catalog, run.train, options);
    category.search.explanation.category = c;
    category.search.explanation.name = run.model->category_names()[static_cast<std::size_t>(c - 1)];
    report.explanations.push_back(category.search.explanation);
    result.categories.push_back(std::move(category));
  }
  report.train = fidelity_report(report.explanations, run.labeled_train, "train", report.model_descriptor);
  report.test = fidelity_report(report.explanations, run.labeled_test, "test", report.model_descriptor);
  return result;
}

ExtractionRun run_extract(const RunConfig& config) {
  PreparedRun run = prepare_run(config);
  validate_rank(config.rank, run.catalog->size(), run.train.size());
  const auto matrices = compute_contributions(run, config);
  return extract_all(run, matrices, config, config.rank);
}

void write_outputs(const ExtractionRun& result, const PreparedRun& run,
                   const std::vector<ContributionMatrix>& matrices, const RunConfig& config) {
  namespace fs = std::filesystem;
  const fs::path dir(config.output_dir);
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "report.txt", std::ios::binary);
    out << render_report(result.report, ReportFormat::text);
  }
  {
    std::ofstream out(dir / "report.tsv", std::ios::binary);
    out << render_report(result.report, ReportFormat::structured);
  }
  {
    std::ofstream out(dir / "config.used", std::ios::binary);
    write_config(out, config);
  }
  if (config.dump_matrices) {
    dump_contributions(matrices, dir.string());
    std::ofstream catalog(dir / "catalog.csv", std::ios::binary);
    write_catalog(catalog, *run.catalog);
    for (std::size_t i = 0; i < result.categories.size(); ++i) {
      const int c = matrices[i].target_category;
      const auto& f = result.categories[i].factorization;
      save_matrix((dir / ("W_" + std::to_string(c) + ".mat")).string(), f.W, c);
      save_matrix((dir / ("H_" + std::to_string(c) + ".mat")).string(), f.H, c);
    }
  }
}

std::vector<KSweepRow> run_ksweep(const RunConfig& config, const std::vector<std::size_t>& ks) {
  PreparedRun run = prepare_run(config);
  const auto matrices = compute_contributions(run, config);
  std::vector<KSweepRow> rows;
  for (std::size_t k : ks) {
    KSweepRow row;
    row.k = k;
    try {
      const ExtractionRun result = extract_all(run, matrices, config, k);
      row.ok = true;
      row.train_macro_f1 = result.report.train.macro_f1;
      row.test_macro_f1 = result.report.test->macro_f1;
    } catch (const Error& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<PuritySummary> run_purity(const RunConfig& config, const std::vector<std::size_t>& rs) {
  PreparedRun run = prepare_run(config);
  validate_rank(config.rank, run.catalog->size(), run.train.size());
  const auto matrices = compute_contributions(run, config);
  std::map<std::size_t, std::vector<Clustering>> by_r;
  for (const auto& phi : matrices) {
    const int c = phi.target_category;
    const Factorization f = nmf(stack_nonnegative(phi), {config.rank, config.nmf_max_iters, config.nmf_tolerance,
                                                         derive_seed(config.nmf_seed, static_cast<std::uint64_t>(c))});
    for (std::size_t r : rs) {
      const std::uint64_t seed = clustering_seed(derive_seed(config.search_seed, static_cast<std::uint64_t>(c)), r);
      by_r[r].push_back(cluster_embeddings(f.H, phi.labels, r, {config.kmeans_restarts, 300, seed}));
    }
  }
  return purity_summary(by_r);
}

}  // namespace rectx
