#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "rectx/errors.hpp"
#include "rectx/pipeline.hpp"
#include "test_support.hpp"

namespace rectx {
namespace {

// Small and fast: iris, a light forest and short perturbation samples.
RunConfig quick_config() {
  RunConfig config;
  config.dataset = testing::data_path("iris.csv");
  config.label_column = "species";
  config.forest.num_trees = 30;
  config.bins = 6;
  config.perturbation.num_samples = 200;
  config.rank = 6;
  config.r_max = 3;
  config.kmeans_restarts = 3;
  config.nmf_max_iters = 200;
  return config;
}

TEST(Config, ParseAndWriteRoundTrip) {
  std::istringstream in(
      "version = 1\n# comment\ndataset = a.csv\nlabel_column = y\nrank = 7  # trailing\n"
      "theta_grid = 0.1,0.2\nforest_max_depth = 4\n");
  const RunConfig config = parse_config(in);
  EXPECT_EQ(config.dataset, "a.csv");
  EXPECT_EQ(config.rank, 7u);
  EXPECT_EQ(config.theta_grid, (std::vector<double>{0.1, 0.2}));
  EXPECT_EQ(config.forest.max_depth, 4u);
  std::stringstream io;
  write_config(io, config);
  const RunConfig back = parse_config(io);
  for (const auto& key : RunConfig::keys()) EXPECT_EQ(back.get(key), config.get(key)) << key;
}

TEST(Config, Rejections) {
  std::istringstream unversioned("dataset = a.csv\n");
  EXPECT_THROW(parse_config(unversioned), ConfigError);
  std::istringstream duplicate("version = 1\nrank = 2\nrank = 3\n");
  EXPECT_THROW(parse_config(duplicate), ConfigError);
  std::istringstream unknown("version = 1\ncolour = red\n");
  EXPECT_THROW(parse_config(unknown), ConfigError);
  std::istringstream bad_number("version = 1\nrank = many\n");
  EXPECT_THROW(parse_config(bad_number), ConfigError);
}

TEST(Config, RankAboveInstanceCountNamesTheConstraint) {
  RunConfig config = quick_config();
  config.rank = 1000;
  try {
    run_extract(config);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("k <= min(2M, N)"), std::string::npos) << e.what();
  }
}

TEST(Config, RecipesLoad) {
  for (const char* name : {"wine.conf", "iris.conf", "planted.conf"}) {
    const RunConfig config = load_config(std::string(RECTX_RECIPE_DIR) + "/" + name);
    EXPECT_NO_THROW(config.validate()) << name;
    EXPECT_TRUE(std::filesystem::exists(config.dataset)) << config.dataset;
  }
}

TEST(Pipeline, ReportsAreByteIdenticalUnderFixedSeeds) {
  const RunConfig config = quick_config();
  const std::string a = render_report(run_extract(config).report, ReportFormat::structured);
  const std::string b = render_report(run_extract(config).report, ReportFormat::structured);
  EXPECT_EQ(a, b);
}

TEST(Pipeline, ReloadedContributionsGiveTheSameReport) {
  const RunConfig config = quick_config();
  testing::ScratchDir dir("stages");
  PreparedRun run = prepare_run(config);
  const auto matrices = compute_contributions(run, config);
  dump_contributions(matrices, dir.str());
  const std::string direct =
      render_report(extract_all(run, matrices, config, config.rank).report, ReportFormat::structured);

  RunConfig reload = config;
  reload.contributions_dir = dir.str();
  EXPECT_EQ(render_report(run_extract(reload).report, ReportFormat::structured), direct);
}

TEST(Pipeline, WrittenOutputsParseBack) {
  RunConfig config = quick_config();
  testing::ScratchDir dir("outputs");
  config.output_dir = dir.str();
  config.dump_matrices = true;
  PreparedRun run = prepare_run(config);
  const auto matrices = compute_contributions(run, config);
  const ExtractionRun result = extract_all(run, matrices, config, config.rank);
  write_outputs(result, run, matrices, config);
  std::ifstream tsv(dir.file("report.tsv"));
  const RunReport back = parse_structured_report(tsv);
  ASSERT_EQ(back.explanations.size(), result.report.explanations.size());
  for (std::size_t c = 0; c < back.explanations.size(); ++c) {
    for (std::size_t i = 0; i < run.train.size(); ++i) {
      EXPECT_EQ(back.explanations[c].contains(run.train.row(i)),
                result.report.explanations[c].contains(run.train.row(i)));
    }
  }
  EXPECT_TRUE(std::filesystem::exists(dir.file("catalog.csv")));
  EXPECT_TRUE(std::filesystem::exists(dir.file("W_1.mat")));
  const RunConfig used = load_config(dir.file("config.used"));
  EXPECT_EQ(used.get("rank"), config.get("rank"));
}

TEST(Pipeline, KSweepIsolatesInvalidRanks) {
  const RunConfig config = quick_config();
  const auto rows = run_ksweep(config, {config.rank, 100000});
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_TRUE(rows[0].ok);
  EXPECT_FALSE(rows[1].ok);
  EXPECT_NE(rows[1].error.find("k <= min(2M, N)"), std::string::npos);
  const ExtractionRun single = run_extract(config);
  EXPECT_EQ(rows[0].test_macro_f1, single.report.test->macro_f1);
  EXPECT_EQ(rows[0].train_macro_f1, single.report.train.macro_f1);
}

TEST(Pipeline, PurityWithOneClusterIsMajorityShare) {
  const RunConfig config = quick_config();
  const auto rows = run_purity(config, {1});
  ASSERT_EQ(rows.size(), 1u);
  // r = 1 puts every training instance in one cluster per category
  PreparedRun run = prepare_run(config);
  std::vector<double> expected;
  for (std::size_t size : run.labeled_train.partition_sizes()) {
    const double share = static_cast<double>(size) / static_cast<double>(run.train.size());
    expected.push_back(std::max(share, 1.0 - share));
  }
  double mean = 0.0;
  for (double v : expected) mean += v / static_cast<double>(expected.size());
  EXPECT_NEAR(rows[0].mean, mean, 1e-12);
}

TEST(Oracle, LoopbackMatchesInProcessForest) {
  testing::ScratchDir dir("loopback");
  RunConfig config = quick_config();
  {
    std::ofstream out(dir.file("forest.conf"));
    write_config(out, config);
  }
  PreparedRun local = prepare_run(config);

  RunConfig remote = config;
  remote.model = "oracle";
  remote.oracle_command = std::string(RECTX_FOREST_ORACLE) + " " + dir.file("forest.conf");
  remote.oracle_categories = 3;
  PreparedRun via_oracle = prepare_run(remote);

  EXPECT_EQ(via_oracle.labeled_train.model_labels, local.labeled_train.model_labels);
  EXPECT_EQ(via_oracle.labeled_test.model_labels, local.labeled_test.model_labels);
  // a batch large enough to span several frames
  std::vector<double> rows;
  for (int rep = 0; rep < 12; ++rep) rows.insert(rows.end(), local.train.values().begin(), local.train.values().end());
  EXPECT_EQ(via_oracle.model->predict(rows), local.model->predict(rows));

  // same contributions, hence the same rules
  const auto a = compute_contributions(local, config);
  const auto b = compute_contributions(via_oracle, remote);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t c = 0; c < a.size(); ++c) EXPECT_EQ(a[c].values, b[c].values);
}

}  // namespace
}  // namespace rectx
