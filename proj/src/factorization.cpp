#include "rectx/factorization.hpp"

#include <cmath>

#include "rectx/errors.hpp"
#include "rectx/rng.hpp"

namespace rectx {

namespace {
constexpr double kDenominatorGuard = 1e-12;
}

Eigen::MatrixXd StackedMatrix::reconstruct() const {
  const auto M = static_cast<Eigen::Index>(feature_count);
  return values.topRows(M) - values.bottomRows(M);
}

StackedMatrix stack_nonnegative(const Eigen::MatrixXd& contributions) {
  const Eigen::Index M = contributions.rows();
  StackedMatrix stacked;
  stacked.feature_count = static_cast<std::size_t>(M);
  stacked.values.setZero(2 * M, contributions.cols());
  for (Eigen::Index j = 0; j < contributions.cols(); ++j) {
    for (Eigen::Index i = 0; i < M; ++i) {
      const double v = contributions(i, j);
      if (v > 0.0) stacked.values(i, j) = v;
      if (v < 0.0) stacked.values(i + M, j) = -v;
    }
  }
  return stacked;
}

bool Factorization::objective_monotone() const {
  // Rounding in the residual norm scales with the data, not with the residual,
  // so the slack is taken relative to the starting objective.
  if (objective_trace.empty()) return true;
  const double slack = 1e-12 * objective_trace.front();
  for (std::size_t t = 1; t < objective_trace.size(); ++t) {
    if (objective_trace[t] > objective_trace[t - 1] + slack) return false;
  }
  return true;
}

Factorization nmf(const StackedMatrix& stacked, const NmfOptions& options) {
  const Eigen::MatrixXd& V = stacked.values;
  const Eigen::Index rows = V.rows();
  const Eigen::Index cols = V.cols();
  const auto k = static_cast<Eigen::Index>(options.rank);
  if (k < 1 || k > std::min(rows, cols)) {
    throw RankTooLarge("NMF rank k = " + std::to_string(options.rank) +
                       " violates 1 <= k <= min(2M, N) = " + std::to_string(std::min(rows, cols)));
  }
  if (options.max_iters < 1) throw ConfigError("max_iters must be at least 1");
  if (!(options.tolerance > 0.0)) throw ConfigError("tolerance must be positive");
  if ((V.array() < 0.0).any()) throw ConfigError("NMF input must be nonnegative");

  Factorization f;
  f.rank = options.rank;
  if ((V.array() == 0.0).all()) {
    f.W.setZero(rows, k);
    f.H.setZero(k, cols);
    f.objective_trace = {0.0};
    return f;
  }

  // Strictly positive start; one shared column for H so that identical data
  // columns keep identical embeddings.
  Rng rng(options.seed);
  const double scale = std::sqrt(V.mean() / static_cast<double>(k));
  f.W.resize(rows, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) f.W(i, j) = scale * rng.uniform_open_closed();
  }
  Eigen::VectorXd h0(k);
  for (Eigen::Index l = 0; l < k; ++l) h0(l) = scale * rng.uniform_open_closed();
  f.H = h0.replicate(1, cols);

  double objective = (V - f.W * f.H).norm();
  f.objective_trace.push_back(objective);
  for (std::size_t iter = 0; iter < options.max_iters; ++iter) {
    const Eigen::MatrixXd WtV = f.W.transpose() * V;
    const Eigen::MatrixXd WtWH = (f.W.transpose() * f.W) * f.H;
    f.H = f.H.cwiseProduct(WtV).cwiseQuotient((WtWH.array() + kDenominatorGuard).matrix());

    const Eigen::MatrixXd VHt = V * f.H.transpose();
    const Eigen::MatrixXd WHHt = f.W * (f.H * f.H.transpose());
    f.W = f.W.cwiseProduct(VHt).cwiseQuotient((WHHt.array() + kDenominatorGuard).matrix());

    const double next = (V - f.W * f.H).norm();
    f.objective_trace.push_back(next);
    f.iterations_run = iter + 1;
    const double decrease = objective - next;
    objective = next;
    if (objective == 0.0 || decrease < options.tolerance * f.objective_trace[f.objective_trace.size() - 2]) break;
  }
  f.final_objective = objective;
  return f;
}

}  // namespace rectx
