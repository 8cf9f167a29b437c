#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "rectx/errors.hpp"
#include "rectx/instance_explainer.hpp"
#include "test_support.hpp"

namespace rectx {
namespace {

// Independent reference: Gauss-Jordan elimination with partial pivoting on
// the normal equations of the weighted ridge problem, unknowns (b, phi).
std::vector<double> normal_equation_solution(const std::vector<std::vector<double>>& z,
                                             const std::vector<double>& y,
                                             const std::vector<double>& w, double lambda) {
  const std::size_t p = z.front().size() + 1;
  std::vector<std::vector<double>> a(p, std::vector<double>(p + 1, 0.0));
  for (std::size_t s = 0; s < z.size(); ++s) {
    std::vector<double> row{1.0};
    row.insert(row.end(), z[s].begin(), z[s].end());
    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t j = 0; j < p; ++j) a[i][j] += w[s] * row[i] * row[j];
      a[i][p] += w[s] * row[i] * y[s];
    }
  }
  for (std::size_t i = 1; i < p; ++i) a[i][i] += lambda;
  for (std::size_t col = 0; col < p; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < p; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    }
    std::swap(a[col], a[pivot]);
    for (std::size_t r = 0; r < p; ++r) {
      if (r == col) continue;
      const double f = a[r][col] / a[col][col];
      for (std::size_t c = col; c <= p; ++c) a[r][c] -= f * a[col][c];
    }
  }
  std::vector<double> x(p);
  for (std::size_t i = 0; i < p; ++i) x[i] = a[i][p] / a[i][i];
  return x;
}

TEST(Ridge, MatchesNormalEquations) {
  const std::vector<std::vector<double>> z{{1, 0}, {0, 1}, {1, 1}};
  const std::vector<double> y{1, 0, 1};
  const std::vector<double> w{0.5, 1.0, 2.0};
  const double lambda = 0.3;
  Eigen::MatrixXd design(3, 2);
  design << 1, 0, 0, 1, 1, 1;
  const RidgeFit fit = solve_weighted_ridge(design, Eigen::Map<const Eigen::VectorXd>(y.data(), 3),
                                            Eigen::Map<const Eigen::VectorXd>(w.data(), 3), lambda);
  const auto expected = normal_equation_solution(z, y, w, lambda);
  EXPECT_NEAR(fit.intercept, expected[0], 1e-10);
  EXPECT_NEAR(fit.coefficients(0), expected[1], 1e-10);
  EXPECT_NEAR(fit.coefficients(1), expected[2], 1e-10);
}

TEST(Ridge, RandomProblemsMatchNormalEquations) {
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 12, m = 5;
    std::vector<std::vector<double>> z(n, std::vector<double>(m));
    std::vector<double> y(n), w(n);
    Eigen::MatrixXd design(n, m);
    for (std::size_t s = 0; s < n; ++s) {
      for (std::size_t i = 0; i < m; ++i) design(s, i) = z[s][i] = unit(gen) < 0.5 ? 0.0 : 1.0;
      y[s] = unit(gen) < 0.4 ? 1.0 : 0.0;
      w[s] = 0.05 + unit(gen);
    }
    const RidgeFit fit = solve_weighted_ridge(design, Eigen::Map<const Eigen::VectorXd>(y.data(), n),
                                              Eigen::Map<const Eigen::VectorXd>(w.data(), n), 0.7);
    const auto expected = normal_equation_solution(z, y, w, 0.7);
    EXPECT_NEAR(fit.intercept, expected[0], 1e-10);
    for (std::size_t i = 0; i < m; ++i) EXPECT_NEAR(fit.coefficients(i), expected[i + 1], 1e-10);
  }
}

TEST(Ridge, HugePenaltyShrinksToZero) {
  Eigen::MatrixXd design(4, 2);
  design << 1, 0, 0, 1, 1, 1, 0, 0;
  const Eigen::VectorXd y = Eigen::Vector4d(1, 0, 1, 0);
  const Eigen::VectorXd w = Eigen::Vector4d::Ones();
  const RidgeFit fit = solve_weighted_ridge(design, y, w, 1e12);
  EXPECT_LT(fit.coefficients.norm(), 1e-10);
  EXPECT_NEAR(fit.intercept, 0.5, 1e-9);
}

class ExplainerTest : public ::testing::Test {
 protected:
  void SetUp() override {
    std::vector<double> values;
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
      values.push_back(unit(gen));
      values.push_back(unit(gen));
    }
    data = Dataset({"x1", "x2"}, values);
    catalog.emplace(build_catalog(data, 4));
  }

  Dataset data;
  std::optional<FeatureCatalog> catalog;
};

TEST_F(ExplainerTest, ConstantModelGivesZeroContributions) {
  FunctionModel constant(2, numbered_categories(2), [](std::span<const double>) { return 1; });
  PerturbationConfig config;
  config.num_samples = 200;
  const auto e = explain_instance(constant, *catalog, data.row(0), 1, config, data);
  EXPECT_TRUE(e.degenerate);
  for (double v : e.contributions) EXPECT_EQ(v, 0.0);
}

TEST_F(ExplainerTest, ThresholdFeatureDominates) {
  const double bound = catalog->cut_points(0)[1];
  FunctionModel model(2, numbered_categories(2),
                      [bound](std::span<const double> x) { return x[0] <= bound ? 1 : 2; });
  PerturbationConfig config;
  config.num_samples = 1000;
  for (std::size_t i : {0u, 5u, 17u}) {
    const auto e = explain_instance(model, *catalog, data.row(i), 1, config, data);
    std::size_t best = 0;
    for (std::size_t f = 1; f < e.contributions.size(); ++f) {
      if (std::abs(e.contributions[f]) > std::abs(e.contributions[best])) best = f;
    }
    EXPECT_EQ(catalog->feature(best).attribute, 0u);
    EXPECT_EQ(catalog->feature(best).bound, bound);
    EXPECT_GT(e.contributions[best], 0.0);
    EXPECT_GE(e.local_fidelity, 0.8);
  }
}

TEST_F(ExplainerTest, LargeRidgeGivesNearZero) {
  const double bound = catalog->cut_points(0)[1];
  FunctionModel model(2, numbered_categories(2),
                      [bound](std::span<const double> x) { return x[0] <= bound ? 1 : 2; });
  PerturbationConfig config;
  config.num_samples = 300;
  config.ridge_strength = 1e12;
  const auto e = explain_instance(model, *catalog, data.row(0), 1, config, data);
  for (double v : e.contributions) EXPECT_LT(std::abs(v), 1e-8);
}

TEST_F(ExplainerTest, NeighborhoodStartsAtInstanceAndHasUnitSelfWeight) {
  FunctionModel model(2, numbered_categories(2), [](std::span<const double> x) { return x[1] > 0.5 ? 2 : 1; });
  BinSampler sampler(*catalog, data);
  PerturbationConfig config;
  config.num_samples = 50;
  const Neighborhood n = draw_neighborhood(model, *catalog, sampler, data.row(4), config, 11);
  const auto z0 = catalog->embed(data.row(4));
  ASSERT_EQ(n.features.rows(), 50);
  for (std::size_t i = 0; i < z0.size(); ++i) EXPECT_EQ(n.features(0, static_cast<Eigen::Index>(i)), z0[i]);
  EXPECT_DOUBLE_EQ(n.weights(0), 1.0);
  for (Eigen::Index s = 0; s < n.weights.size(); ++s) {
    EXPECT_GT(n.weights(s), 0.0);
    EXPECT_LE(n.weights(s), 1.0);
  }
}

TEST_F(ExplainerTest, SampledInstancesEmbedToConsistentBits) {
  // every resampled row must embed to a monotone (consistent) bit pattern
  FunctionModel model(2, numbered_categories(2), [](std::span<const double>) { return 1; });
  BinSampler sampler(*catalog, data);
  PerturbationConfig config;
  config.num_samples = 100;
  const Neighborhood n = draw_neighborhood(model, *catalog, sampler, data.row(2), config, 5);
  for (Eigen::Index s = 0; s < n.features.rows(); ++s) {
    for (std::size_t j = 0; j < 2; ++j) {
      const auto [first, last] = catalog->feature_range(j);
      for (std::size_t f = first + 1; f < last; ++f) {
        EXPECT_LE(n.features(s, static_cast<Eigen::Index>(f - 1)), n.features(s, static_cast<Eigen::Index>(f)));
      }
    }
  }
}

TEST(ClosestBin, HammingWithTies) {
  // bits for bounds b1 < b2 < b3; bin s has exactly the top 3-s bits set
  EXPECT_EQ(BinSampler::closest_bin(std::vector<std::uint8_t>{1, 1, 1}, 2), 0u);
  EXPECT_EQ(BinSampler::closest_bin(std::vector<std::uint8_t>{0, 0, 0}, 0), 3u);
  EXPECT_EQ(BinSampler::closest_bin(std::vector<std::uint8_t>{0, 1, 1}, 0), 1u);
  // 1,0,1 is one flip from bins 0 and 2; origin 3 is closer to bin 2
  EXPECT_EQ(BinSampler::closest_bin(std::vector<std::uint8_t>{1, 0, 1}, 3), 2u);
  EXPECT_EQ(BinSampler::closest_bin(std::vector<std::uint8_t>{1, 0, 1}, 0), 0u);
  // equidistant origin 1: lower bin wins
  EXPECT_EQ(BinSampler::closest_bin(std::vector<std::uint8_t>{1, 0, 1}, 1), 0u);
}

TEST(ContributionMatrix, ShapeDeterminismAndSingleton) {
  const auto [train, test] = split(testing::load_wine(), 0.7, 0);
  ForestConfig forest_config;
  forest_config.num_trees = 30;
  auto forest = train_forest(train, forest_config);
  const FeatureCatalog catalog = build_catalog(train, 4);
  const LabeledDataset labeled = label_with(train, *forest);
  PerturbationConfig config;
  config.num_samples = 200;
  const auto matrices = build_contribution_matrices(*forest, catalog, labeled, config);
  ASSERT_EQ(matrices.size(), 3u);
  EXPECT_EQ(matrices[0].values.rows(), static_cast<Eigen::Index>(catalog.size()));
  EXPECT_EQ(matrices[0].values.cols(), 124);
  const auto single = build_contribution_matrix(*forest, catalog, labeled, 2, config);
  EXPECT_EQ(single.values, matrices[1].values);

  // duplicated rows with identical seeds give identical columns
  const std::vector<std::size_t> twice{7, 7};
  const Dataset dup = train.subset(twice);
  const LabeledDataset dup_labeled = label_with(dup, *forest);
  PerturbationConfig zero_offset = config;
  const auto a = build_contribution_matrix(*forest, catalog, dup_labeled, 1, zero_offset, &train);
  zero_offset.seed = config.seed + 1;
  const std::vector<std::size_t> once{7};
  const LabeledDataset one = label_with(train.subset(once), *forest);
  const auto b = build_contribution_matrix(*forest, catalog, one, 1, zero_offset, &train);
  // column 1 of a used seed + 1, like column 0 of b
  EXPECT_EQ(a.values.col(1), b.values.col(0));
  EXPECT_EQ(b.values.cols(), 1);
}

TEST(Perturbation, RejectsBadConfig) {
  PerturbationConfig config;
  config.num_samples = 1;
  EXPECT_THROW(config.validate(), ConfigError);
  config.num_samples = 100;
  config.ridge_strength = -1.0;
  EXPECT_THROW(config.validate(), ConfigError);
  config.ridge_strength = 1.0;
  config.flip_probability = 0.0;
  EXPECT_THROW(config.validate(), ConfigError);
  config.flip_probability = 0.3;
  EXPECT_NO_THROW(config.validate());
}

TEST_F(ExplainerTest, LowerFlipRateStaysCloser) {
  FunctionModel model(2, numbered_categories(2), [](std::span<const double>) { return 1; });
  BinSampler sampler(*catalog, data);
  PerturbationConfig config;
  config.num_samples = 400;
  auto mean_weight = [&](double p) {
    config.flip_probability = p;
    return draw_neighborhood(model, *catalog, sampler, data.row(3), config, 2).weights.mean();
  };
  EXPECT_GT(mean_weight(0.1), mean_weight(0.5));
}

}  // namespace
}  // namespace rectx
