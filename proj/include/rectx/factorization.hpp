#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "rectx/instance_explainer.hpp"

namespace rectx {

// [Phi+; Phi-]: rows 0..M-1 hold positive parts, rows M..2M-1 the magnitudes
// of negative parts. Row M + i corresponds to the complement of feature i.
struct StackedMatrix {
  Eigen::MatrixXd values;
  std::size_t feature_count = 0;

  Eigen::MatrixXd reconstruct() const;
};

StackedMatrix stack_nonnegative(const Eigen::MatrixXd& contributions);
inline StackedMatrix stack_nonnegative(const ContributionMatrix& phi) {
  return stack_nonnegative(phi.values);
}

struct NmfOptions {
  std::size_t rank = 10;
  std::size_t max_iters = 500;
  // Stop once the relative objective decrease falls below this.
  double tolerance = 1e-5;
  std::uint64_t seed = 0;
};

struct Factorization {
  Eigen::MatrixXd W;  // 2M x k constraint-space basis
  Eigen::MatrixXd H;  // k x N embedded explanations
  std::size_t rank = 0;
  // Frobenius norm of the residual after the last iteration.
  double final_objective = 0.0;
  std::size_t iterations_run = 0;
  // Objective before the first update and after every update.
  std::vector<double> objective_trace;

  // True when the trace never increases, up to 1e-12 of the starting objective.
  bool objective_monotone() const;
};

// Lee-Seung multiplicative updates for min |V - WH|_F. Throws RankTooLarge
// unless 1 <= k <= min(2M, N). An all-zero input yields W = H = 0.
Factorization nmf(const StackedMatrix& stacked, const NmfOptions& options);

// The embedded explanations: column j of H.
inline const Eigen::MatrixXd& embed_explanations(const Factorization& factorization) {
  return factorization.H;
}

}  // namespace rectx
