#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rectx/blackbox.hpp"
#include "rectx/features.hpp"
#include "rectx/rng.hpp"
#include "rectx/tabular_data.hpp"

namespace rectx {

struct PerturbationConfig {
  std::size_t num_samples = 1000;
  // nullopt means 0.75 * sqrt(M).
  std::optional<double> kernel_width;
  double ridge_strength = 1.0;
  // Chance that each interpretable bit of the instance is flipped.
  double flip_probability = 0.5;
  std::uint64_t seed = 0;

  double width_for(std::size_t num_features) const;
  void validate() const;
};

struct InstanceExplanation {
  std::vector<double> contributions;
  double intercept = 0.0;
  std::size_t instance_index = 0;
  int target_category = 0;
  // Every sampled response was identical; contributions are exactly zero.
  bool degenerate = false;
  // Weighted share of samples where the thresholded surrogate (> 1/2) agrees
  // with the model's binary response.
  double local_fidelity = 0.0;
  // F1 of the thresholded surrogate against the model over the sample.
  double surrogate_f1 = 0.0;
};

// Perturbation sample around one instance. Row 0 is the instance itself.
struct Neighborhood {
  Eigen::MatrixXd features;  // samples x M, entries 0/1
  Eigen::VectorXd weights;
  std::vector<int> predictions;
};

// Maps interpretable vectors back to instance space by drawing training
// values from the bins the bits select.
class BinSampler {
 public:
  BinSampler(const FeatureCatalog& catalog, const Dataset& background);

  // Writes into `x` (initialised to the source instance) a value for every
  // attribute that has features, drawn from the bin closest in Hamming
  // distance to the attribute's bits in `z`.
  void sample(std::span<const std::uint8_t> z, std::span<const std::uint8_t> z_origin,
              std::span<double> x, Rng& rng) const;

  // Bin selected by a (possibly inconsistent) bit pattern over one attribute.
  static std::size_t closest_bin(std::span<const std::uint8_t> bits, std::size_t origin_bin);

 private:
  const FeatureCatalog& catalog_;
  // bins_[attribute][s] holds the training values of bin s.
  std::vector<std::vector<std::vector<double>>> bins_;
};

Neighborhood draw_neighborhood(BlackBoxModel& model, const FeatureCatalog& catalog,
                               const BinSampler& sampler, std::span<const double> x,
                               const PerturbationConfig& config, std::uint64_t seed);

struct RidgeFit {
  Eigen::VectorXd coefficients;
  double intercept = 0.0;
};

// argmin_{b, phi} sum_i w_i (y_i - b - phi^T z_i)^2 + lambda * |phi|^2; the
// intercept is not penalised.
RidgeFit solve_weighted_ridge(const Eigen::MatrixXd& design, const Eigen::VectorXd& response,
                              const Eigen::VectorXd& weights, double lambda);

// One explanation per category 1..C from a shared neighborhood.
std::vector<InstanceExplanation> explain_neighborhood(const Neighborhood& neighborhood,
                                                      int num_categories, double ridge_strength,
                                                      std::size_t instance_index);

InstanceExplanation explain_instance(BlackBoxModel& model, const FeatureCatalog& catalog,
                                     std::span<const double> x, int target,
                                     const PerturbationConfig& config, const Dataset& background);

// Features x instances contributions for one target category.
struct ContributionMatrix {
  Eigen::MatrixXd values;
  int target_category = 0;
  std::vector<bool> labels;
  std::vector<double> local_fidelity;
  std::vector<double> surrogate_f1;
  std::size_t degenerate_count = 0;
};

// Column j explains instance j with seed config.seed + j. The background used
// for back-mapping is the labeled dataset itself unless given.
ContributionMatrix build_contribution_matrix(BlackBoxModel& model, const FeatureCatalog& catalog,
                                             const LabeledDataset& data, int target,
                                             const PerturbationConfig& config,
                                             const Dataset* background = nullptr);

// All categories at once; entry c-1 targets category c. Each instance's
// neighborhood is drawn and queried once.
std::vector<ContributionMatrix> build_contribution_matrices(BlackBoxModel& model,
                                                            const FeatureCatalog& catalog,
                                                            const LabeledDataset& data,
                                                            const PerturbationConfig& config,
                                                            const Dataset* background = nullptr);

}  // namespace rectx
