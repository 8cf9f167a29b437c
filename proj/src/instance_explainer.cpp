#include "rectx/instance_explainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rectx/errors.hpp"
#include "rectx/rng.hpp"

namespace rectx {

double PerturbationConfig::width_for(std::size_t num_features) const {
  return kernel_width ? *kernel_width : 0.75 * std::sqrt(static_cast<double>(num_features));
}

void PerturbationConfig::validate() const {
  if (num_samples < 10) throw ConfigError("num_samples must be at least 10");
  if (kernel_width && !(*kernel_width > 0.0)) throw ConfigError("kernel_width must be positive");
  if (!(ridge_strength >= 0.0)) throw ConfigError("ridge_strength must be nonnegative");
  if (!(flip_probability > 0.0 && flip_probability <= 1.0)) throw ConfigError("flip_probability must lie in (0, 1]");
}

BinSampler::BinSampler(const FeatureCatalog& catalog, const Dataset& background)
    : catalog_(catalog), bins_(catalog.num_attributes()) {
  if (background.num_attributes() != catalog.num_attributes()) {
    throw InvalidDataset("background data and catalog disagree on attribute count");
  }
  for (std::size_t j = 0; j < catalog.num_attributes(); ++j) {
    const auto bounds = catalog.cut_points(j);
    if (bounds.empty()) continue;
    auto& bins = bins_[j];
    bins.resize(bounds.size() + 1);
    for (std::size_t i = 0; i < background.size(); ++i) {
      const double v = background.at(i, j);
      const auto s = static_cast<std::size_t>(std::lower_bound(bounds.begin(), bounds.end(), v) - bounds.begin());
      bins[s].push_back(v);
    }
  }
}

std::size_t BinSampler::closest_bin(std::span<const std::uint8_t> bits, std::size_t origin_bin) {
  // Bin s is (b_{s-1}, b_s]; its consistent pattern has bit i set iff i >= s.
  const std::size_t t = bits.size();
  std::size_t best = origin_bin;
  std::size_t best_distance = std::numeric_limits<std::size_t>::max();
  std::size_t best_offset = std::numeric_limits<std::size_t>::max();
  for (std::size_t s = 0; s <= t; ++s) {
    std::size_t distance = 0;
    for (std::size_t i = 0; i < t; ++i) distance += (bits[i] != 0) != (i >= s);
    const std::size_t offset = s > origin_bin ? s - origin_bin : origin_bin - s;
    if (distance < best_distance || (distance == best_distance && offset < best_offset)) {
      best = s;
      best_distance = distance;
      best_offset = offset;
    }
  }
  return best;
}

void BinSampler::sample(std::span<const std::uint8_t> z, std::span<const std::uint8_t> z_origin,
                        std::span<double> x, Rng& rng) const {
  for (std::size_t j = 0; j < bins_.size(); ++j) {
    const auto& bins = bins_[j];
    if (bins.empty()) continue;
    const auto [first, last] = catalog_.feature_range(j);
    const auto bits = z.subspan(first, last - first);
    const auto origin_bits = z_origin.subspan(first, last - first);
    const auto origin_bin = static_cast<std::size_t>(std::count(origin_bits.begin(), origin_bits.end(), 0));
    const std::size_t s = closest_bin(bits, origin_bin);
    const auto& pool = bins[s];
    if (!pool.empty()) {
      x[j] = pool[rng.index(pool.size())];
    } else {
      // Interior bin without training values (collapsed quantiles).
      x[j] = 0.5 * (catalog_.feature(first + s - 1).bound + catalog_.feature(first + s).bound);
    }
  }
}

Neighborhood draw_neighborhood(BlackBoxModel& model, const FeatureCatalog& catalog,
                               const BinSampler& sampler, std::span<const double> x,
                               const PerturbationConfig& config, std::uint64_t seed) {
  const std::size_t M = catalog.size();
  const std::size_t m = x.size();
  const std::size_t n = config.num_samples;
  Rng rng(seed);
  const InterpretableVector origin = catalog.embed(x);

  std::vector<double> instances(n * m);
  std::copy(x.begin(), x.end(), instances.begin());
  InterpretableVector flipped(M);
  const bool fair = config.flip_probability == 0.5;
  for (std::size_t s = 1; s < n; ++s) {
    for (std::size_t i = 0; i < M; ++i) {
      const bool flip = fair ? rng.coin() : rng.uniform() < config.flip_probability;
      flipped[i] = flip ? static_cast<std::uint8_t>(1 - origin[i]) : origin[i];
    }
    std::span<double> row(instances.data() + s * m, m);
    std::copy(x.begin(), x.end(), row.begin());
    sampler.sample(flipped, origin, row, rng);
  }

  Neighborhood hood;
  hood.predictions = model.predict(instances);
  hood.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(M));
  hood.weights.resize(static_cast<Eigen::Index>(n));
  const double width = config.width_for(M);
  const double norm = std::sqrt(static_cast<double>(M));
  for (std::size_t s = 0; s < n; ++s) {
    const InterpretableVector z = catalog.embed(std::span<const double>(instances.data() + s * m, m));
    std::size_t hamming = 0;
    for (std::size_t i = 0; i < M; ++i) {
      hood.features(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(i)) = z[i];
      hamming += z[i] != origin[i];
    }
    const double d = static_cast<double>(hamming) / norm;
    hood.weights(static_cast<Eigen::Index>(s)) = std::exp(-(d * d) / (width * width));
  }
  return hood;
}

namespace {

Eigen::MatrixXd normal_matrix(const Eigen::MatrixXd& design, const Eigen::VectorXd& weights, double lambda) {
  const Eigen::Index n = design.rows();
  const Eigen::Index M = design.cols();
  Eigen::MatrixXd augmented(n, M + 1);
  augmented.leftCols(M) = design;
  augmented.col(M).setOnes();
  Eigen::MatrixXd gram = augmented.transpose() * weights.asDiagonal() * augmented;
  gram.diagonal().head(M).array() += lambda;
  return gram;
}

Eigen::VectorXd weighted_moment(const Eigen::MatrixXd& design, const Eigen::VectorXd& weights,
                                const Eigen::VectorXd& response) {
  const Eigen::Index M = design.cols();
  Eigen::VectorXd rhs(M + 1);
  const Eigen::VectorXd wy = weights.cwiseProduct(response);
  rhs.head(M) = design.transpose() * wy;
  rhs(M) = wy.sum();
  return rhs;
}

// Cholesky-type solve with a rank-revealing fallback for lambda = 0 on
// collinear designs.
class NormalSolver {
 public:
  explicit NormalSolver(const Eigen::MatrixXd& gram) : ldlt_(gram) {
    use_fallback_ = ldlt_.info() != Eigen::Success || !ldlt_.isPositive() ||
                    (ldlt_.vectorD().array() <= 1e-12 * std::max(1.0, gram.diagonal().maxCoeff())).any();
    if (use_fallback_) cod_.compute(gram);
  }
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const {
    return use_fallback_ ? Eigen::VectorXd(cod_.solve(rhs)) : Eigen::VectorXd(ldlt_.solve(rhs));
  }

 private:
  Eigen::LDLT<Eigen::MatrixXd> ldlt_;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod_;
  bool use_fallback_ = false;
};

}  // namespace

RidgeFit solve_weighted_ridge(const Eigen::MatrixXd& design, const Eigen::VectorXd& response,
                              const Eigen::VectorXd& weights, double lambda) {
  const NormalSolver solver(normal_matrix(design, weights, lambda));
  const Eigen::VectorXd beta = solver.solve(weighted_moment(design, weights, response));
  const Eigen::Index M = design.cols();
  return {beta.head(M), beta(M)};
}

std::vector<InstanceExplanation> explain_neighborhood(const Neighborhood& hood, int num_categories,
                                                      double ridge_strength,
                                                      std::size_t instance_index) {
  const Eigen::Index n = hood.features.rows();
  const Eigen::Index M = hood.features.cols();
  std::optional<NormalSolver> solver;
  const double total_weight = hood.weights.sum();

  std::vector<InstanceExplanation> explanations;
  for (int target = 1; target <= num_categories; ++target) {
    InstanceExplanation e;
    e.instance_index = instance_index;
    e.target_category = target;
    Eigen::VectorXd y(n);
    for (Eigen::Index s = 0; s < n; ++s) y(s) = hood.predictions[static_cast<std::size_t>(s)] == target ? 1.0 : 0.0;

    if ((y.array() == y(0)).all()) {
      e.contributions.assign(static_cast<std::size_t>(M), 0.0);
      e.intercept = y(0);
      e.degenerate = true;
    } else {
      if (!solver) solver.emplace(normal_matrix(hood.features, hood.weights, ridge_strength));
      const Eigen::VectorXd beta = solver->solve(weighted_moment(hood.features, hood.weights, y));
      e.contributions.assign(beta.data(), beta.data() + M);
      e.intercept = beta(M);
    }

    const Eigen::Map<const Eigen::VectorXd> phi(e.contributions.data(), M);
    const Eigen::VectorXd fitted = (hood.features * phi).array() + e.intercept;
    double agree = 0.0;
    std::size_t tp = 0, fp = 0, fn = 0;
    for (Eigen::Index s = 0; s < n; ++s) {
      const bool predicted = fitted(s) > 0.5;
      const bool actual = y(s) > 0.5;
      if (predicted == actual) agree += hood.weights(s);
      tp += predicted && actual;
      fp += predicted && !actual;
      fn += !predicted && actual;
    }
    e.local_fidelity = total_weight > 0.0 ? agree / total_weight : 0.0;
    e.surrogate_f1 = tp == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
    explanations.push_back(std::move(e));
  }
  return explanations;
}

InstanceExplanation explain_instance(BlackBoxModel& model, const FeatureCatalog& catalog,
                                     std::span<const double> x, int target,
                                     const PerturbationConfig& config, const Dataset& background) {
  config.validate();
  if (model.input_dim() != catalog.num_attributes() || x.size() != catalog.num_attributes()) {
    throw InvalidDataset("model, catalog and instance disagree on dimension");
  }
  if (target < 1 || target > model.num_categories()) throw IndexOutOfRange("target category");
  const BinSampler sampler(catalog, background);
  const Neighborhood hood = draw_neighborhood(model, catalog, sampler, x, config, config.seed);
  auto all = explain_neighborhood(hood, model.num_categories(), config.ridge_strength, 0);
  return std::move(all[static_cast<std::size_t>(target - 1)]);
}

std::vector<ContributionMatrix> build_contribution_matrices(BlackBoxModel& model,
                                                            const FeatureCatalog& catalog,
                                                            const LabeledDataset& data,
                                                            const PerturbationConfig& config,
                                                            const Dataset* background) {
  config.validate();
  const Dataset& data_rows = data.dataset;
  if (model.input_dim() != catalog.num_attributes() || data_rows.num_attributes() != catalog.num_attributes()) {
    throw InvalidDataset("model, catalog and data disagree on dimension");
  }
  const int C = model.num_categories();
  const auto M = static_cast<Eigen::Index>(catalog.size());
  const auto N = static_cast<Eigen::Index>(data_rows.size());
  const BinSampler sampler(catalog, background ? *background : data_rows);

  std::vector<ContributionMatrix> matrices(static_cast<std::size_t>(C));
  for (int c = 1; c <= C; ++c) {
    auto& matrix = matrices[static_cast<std::size_t>(c - 1)];
    matrix.values.setZero(M, N);
    matrix.target_category = c;
    matrix.labels = data.one_vs_rest(c);
    matrix.local_fidelity.resize(static_cast<std::size_t>(N));
    matrix.surrogate_f1.resize(static_cast<std::size_t>(N));
  }
  for (Eigen::Index j = 0; j < N; ++j) {
    const auto index = static_cast<std::size_t>(j);
    const Neighborhood hood =
        draw_neighborhood(model, catalog, sampler, data_rows.row(index), config, config.seed + index);
    const auto explanations = explain_neighborhood(hood, C, config.ridge_strength, index);
    for (int c = 1; c <= C; ++c) {
      auto& matrix = matrices[static_cast<std::size_t>(c - 1)];
      const auto& e = explanations[static_cast<std::size_t>(c - 1)];
      matrix.values.col(j) = Eigen::Map<const Eigen::VectorXd>(e.contributions.data(), M);
      matrix.local_fidelity[index] = e.local_fidelity;
      matrix.surrogate_f1[index] = e.surrogate_f1;
      matrix.degenerate_count += e.degenerate ? 1 : 0;
    }
  }
  return matrices;
}

ContributionMatrix build_contribution_matrix(BlackBoxModel& model, const FeatureCatalog& catalog,
                                             const LabeledDataset& data, int target,
                                             const PerturbationConfig& config,
                                             const Dataset* background) {
  if (target < 1 || target > model.num_categories()) throw IndexOutOfRange("target category");
  auto all = build_contribution_matrices(model, catalog, data, config, background);
  return std::move(all[static_cast<std::size_t>(target - 1)]);
}

}  // namespace rectx
