#include "rectx/rule_extractor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rectx/errors.hpp"
#include "rectx/evaluation.hpp"
#include "rectx/rng.hpp"
#include "rectx/text_io.hpp"

namespace rectx {

Interval Interval::intersect(const Interval& other) const {
  return {std::max(lower, other.lower), std::min(upper, other.upper)};
}

Rectangle Rectangle::empty_rectangle() {
  Rectangle r;
  r.empty_ = true;
  return r;
}

void Rectangle::constrain(std::size_t attribute, const Interval& interval) {
  if (empty_) return;
  auto [it, inserted] = constraints_.try_emplace(attribute, interval);
  if (!inserted) it->second = it->second.intersect(interval);
  if (it->second.empty()) *this = empty_rectangle();
}

Rectangle Rectangle::intersect(const Rectangle& other) const {
  if (empty_ || other.empty_) return empty_rectangle();
  Rectangle result = *this;
  for (const auto& [attribute, interval] : other.constraints_) result.constrain(attribute, interval);
  return result;
}

bool Rectangle::contains(std::span<const double> x) const {
  if (empty_) return false;
  for (const auto& [attribute, interval] : constraints_) {
    if (!interval.contains(x[attribute])) return false;
  }
  return true;
}

std::size_t Rectangle::constraint_count() const {
  std::size_t count = 0;
  for (const auto& [attribute, interval] : constraints_) {
    count += interval.has_lower() ? 1 : 0;
    count += interval.has_upper() ? 1 : 0;
  }
  return count;
}

std::string describe_rectangle(const Rectangle& rect, const std::vector<std::string>& names) {
  if (rect.is_empty()) return "(empty)";
  if (rect.is_unconstrained()) return "(entire space)";
  std::string text;
  for (const auto& [attribute, interval] : rect.constraints()) {
    if (!text.empty()) text += " & ";
    if (interval.has_lower()) text += format_real(interval.lower) + " < ";
    text += names[attribute];
    if (interval.has_upper()) text += " ≤ " + format_real(interval.upper);
  }
  return text;
}

Rectangle rectangle_from_base(std::span<const double> w, double theta_w, const FeatureCatalog& catalog) {
  const std::size_t M = catalog.size();
  if (w.size() != 2 * M) throw IndexOutOfRange("base vector length must be 2M");
  Rectangle rect;
  const double inf = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < M; ++i) {
    const Feature& f = catalog.feature(i);
    if (w[i] > theta_w) rect.constrain(f.attribute, {-inf, f.bound});
    if (w[i + M] > theta_w) rect.constrain(f.attribute, {f.bound, inf});
  }
  return rect;
}

// ---------------------------------------------------------------------------

std::size_t Clustering::majority_count() const {
  return static_cast<std::size_t>(
      std::count_if(clusters.begin(), clusters.end(), [](const ClusterStats& c) { return c.majority; }));
}

namespace {

struct Lloyd {
  std::vector<std::size_t> assignments;
  Eigen::MatrixXd centroids;
  double inertia = 0.0;
};

Eigen::MatrixXd kmeans_plus_plus(const Eigen::MatrixXd& X, std::size_t r, Rng& rng) {
  const Eigen::Index n = X.cols();
  Eigen::MatrixXd centers(X.rows(), static_cast<Eigen::Index>(r));
  std::vector<bool> chosen(static_cast<std::size_t>(n), false);
  auto first = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n)));
  centers.col(0) = X.col(first);
  chosen[static_cast<std::size_t>(first)] = true;
  Eigen::VectorXd d2 = (X.colwise() - X.col(first)).colwise().squaredNorm().transpose();
  for (std::size_t c = 1; c < r; ++c) {
    const double total = d2.sum();
    Eigen::Index pick = -1;
    if (total > 0.0) {
      double target = rng.uniform() * total;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (d2(j) <= 0.0) continue;
        pick = j;
        target -= d2(j);
        if (target < 0.0) break;
      }
    } else {
      // Every remaining point coincides with a center; take an unused one.
      std::vector<Eigen::Index> unused;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (!chosen[static_cast<std::size_t>(j)]) unused.push_back(j);
      }
      pick = unused[rng.index(unused.size())];
    }
    centers.col(static_cast<Eigen::Index>(c)) = X.col(pick);
    chosen[static_cast<std::size_t>(pick)] = true;
    d2 = d2.cwiseMin((X.colwise() - X.col(pick)).colwise().squaredNorm().transpose());
  }
  return centers;
}

Lloyd run_lloyd(const Eigen::MatrixXd& X, Eigen::MatrixXd centers, std::size_t max_iters) {
  const Eigen::Index n = X.cols();
  const Eigen::Index r = centers.cols();
  Lloyd result;
  result.assignments.assign(static_cast<std::size_t>(n), 0);
  Eigen::VectorXd best_d2(n);
  for (std::size_t iter = 0; iter <= max_iters; ++iter) {
    bool changed = false;
    for (Eigen::Index j = 0; j < n; ++j) {
      Eigen::Index best = 0;
      double best_distance = std::numeric_limits<double>::infinity();
      for (Eigen::Index c = 0; c < r; ++c) {
        const double d = (X.col(j) - centers.col(c)).squaredNorm();
        if (d < best_distance) {
          best_distance = d;
          best = c;
        }
      }
      best_d2(j) = best_distance;
      auto& a = result.assignments[static_cast<std::size_t>(j)];
      if (iter == 0 || a != static_cast<std::size_t>(best)) changed = true;
      a = static_cast<std::size_t>(best);
    }
    if (!changed || iter == max_iters) break;

    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(X.rows(), r);
    std::vector<std::size_t> counts(static_cast<std::size_t>(r), 0);
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto a = result.assignments[static_cast<std::size_t>(j)];
      sums.col(static_cast<Eigen::Index>(a)) += X.col(j);
      ++counts[a];
    }
    for (Eigen::Index c = 0; c < r; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        centers.col(c) = sums.col(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
      } else {
        // Empty cluster: move it onto the point farthest from its center.
        Eigen::Index far = 0;
        best_d2.maxCoeff(&far);
        centers.col(c) = X.col(far);
        best_d2(far) = 0.0;
      }
    }
  }
  result.centroids = std::move(centers);
  result.inertia = best_d2.sum();
  return result;
}

}  // namespace

Clustering cluster_embeddings(const Eigen::MatrixXd& H, const std::vector<bool>& labels,
                              std::size_t r, const KMeansOptions& options) {
  const auto n = static_cast<std::size_t>(H.cols());
  if (labels.size() != n) throw InvalidDataset("label count differs from embedding count");
  if (r < 1) throw TooManyClusters("need at least one cluster");
  if (r > n) {
    throw TooManyClusters("r = " + std::to_string(r) + " exceeds the " + std::to_string(n) + " embedded explanations");
  }
  Rng rng(options.seed);
  std::optional<Lloyd> best;
  for (std::size_t restart = 0; restart < std::max<std::size_t>(options.restarts, 1); ++restart) {
    Lloyd run = run_lloyd(H, kmeans_plus_plus(H, r, rng), options.max_iters);
    if (!best || run.inertia < best->inertia) best = std::move(run);
  }

  Clustering clustering;
  clustering.assignments = std::move(best->assignments);
  clustering.centroids = std::move(best->centroids);
  clustering.inertia = best->inertia;
  clustering.clusters.assign(r, {});
  for (std::size_t j = 0; j < n; ++j) {
    auto& stats = clustering.clusters[clustering.assignments[j]];
    ++stats.size;
    stats.target_count += labels[j] ? 1 : 0;
  }
  for (auto& stats : clustering.clusters) {
    if (stats.size == 0) continue;
    const std::size_t common = std::max(stats.target_count, stats.size - stats.target_count);
    stats.purity = static_cast<double>(common) / static_cast<double>(stats.size);
    stats.majority = 2 * stats.target_count > stats.size;
  }
  return clustering;
}

// ---------------------------------------------------------------------------

RuleRectangle rules_from_cluster(std::span<const double> centroid, const Eigen::MatrixXd& W,
                                 std::size_t k_theta, double theta_w, const FeatureCatalog& catalog) {
  const std::size_t k = centroid.size();
  if (static_cast<Eigen::Index>(k) != W.cols()) throw IndexOutOfRange("centroid length must equal the NMF rank");
  if (k_theta < 1 || k_theta > k) throw IndexOutOfRange("k_theta must lie in 1..k");
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return centroid[a] > centroid[b]; });

  RuleRectangle rule;
  for (std::size_t t = 0; t < k_theta; ++t) {
    const std::size_t l = order[t];
    const Eigen::VectorXd w = W.col(static_cast<Eigen::Index>(l));
    rule.rectangle = rule.rectangle.intersect(rectangle_from_base({w.data(), static_cast<std::size_t>(w.size())}, theta_w, catalog));
    rule.bases.push_back(l);
    rule.weights.push_back(centroid[l]);
  }
  return rule;
}

bool CategoryExplanation::contains(std::span<const double> x) const {
  return std::any_of(rectangles.begin(), rectangles.end(),
                     [&](const RuleRectangle& r) { return r.rectangle.contains(x); });
}

std::size_t CategoryExplanation::constraint_count() const {
  std::size_t count = 0;
  for (const auto& r : rectangles) count += r.rectangle.constraint_count();
  return count;
}

std::uint64_t clustering_seed(std::uint64_t seed, std::size_t r) { return derive_seed(seed, 1000 + r); }

CategoryExplanation assemble_category(const Clustering& clustering, const Eigen::MatrixXd& W,
                                      const FeatureCatalog& catalog, const ExtractionParams& params) {
  std::vector<std::size_t> majority;
  for (std::size_t i = 0; i < clustering.clusters.size(); ++i) {
    if (clustering.clusters[i].majority) majority.push_back(i);
  }
  std::stable_sort(majority.begin(), majority.end(), [&](std::size_t a, std::size_t b) {
    return clustering.clusters[a].target_count > clustering.clusters[b].target_count;
  });

  CategoryExplanation explanation;
  explanation.params = params;
  for (std::size_t i : majority) {
    const Eigen::VectorXd g = clustering.centroids.col(static_cast<Eigen::Index>(i));
    RuleRectangle rule = rules_from_cluster({g.data(), static_cast<std::size_t>(g.size())}, W,
                                            params.k_theta, params.theta_w, catalog);
    if (rule.rectangle.is_empty()) continue;
    const bool duplicate = std::any_of(explanation.rectangles.begin(), explanation.rectangles.end(),
                                       [&](const RuleRectangle& r) { return r.rectangle == rule.rectangle; });
    if (duplicate) continue;
    rule.cluster = i;
    rule.members = clustering.clusters[i].target_count;
    explanation.rectangles.push_back(std::move(rule));
  }
  explanation.unexplained = explanation.rectangles.empty();
  return explanation;
}

CategoryExplanation extract_category(const Eigen::MatrixXd& H, const Eigen::MatrixXd& W,
                                     const std::vector<bool>& labels, const FeatureCatalog& catalog,
                                     const ExtractionParams& params) {
  const Clustering clustering = cluster_embeddings(
      H, labels, params.r, {params.kmeans_restarts, 300, clustering_seed(params.seed, params.r)});
  return assemble_category(clustering, W, catalog, params);
}

std::vector<double> default_theta_grid(const Eigen::MatrixXd& W) {
  std::vector<double> positive;
  for (Eigen::Index j = 0; j < W.cols(); ++j) {
    for (Eigen::Index i = 0; i < W.rows(); ++i) {
      if (W(i, j) > 0.0) positive.push_back(W(i, j));
    }
  }
  if (positive.empty()) return {0.0};
  std::sort(positive.begin(), positive.end());
  // Deciles resolve the bulk of small entries; fractions of the largest entry
  // reach the sparse heavy tail where the simple rules live.
  std::vector<double> grid;
  for (int d = 1; d <= 9; ++d) {
    grid.push_back(interpolated_quantile(positive, d / 10.0));
    grid.push_back(positive.back() * d / 10.0);
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

SearchResult search_params(const Eigen::MatrixXd& H, const Eigen::MatrixXd& W,
                           const std::vector<bool>& labels, const FeatureCatalog& catalog,
                           const Dataset& data, const SearchOptions& options) {
  const std::vector<double> grid = options.theta_grid.empty() ? default_theta_grid(W) : options.theta_grid;
  const auto k = static_cast<std::size_t>(W.cols());
  const std::size_t k_theta_max = std::min(options.k_theta_max.value_or(k), k);
  if (options.r_max < 1 || grid.empty() || k_theta_max < 1) throw EmptyGrid("hyperparameter grid is empty");
  if (data.size() != labels.size()) throw InvalidDataset("label count differs from data size");

  const std::size_t r_limit = std::min<std::size_t>(options.r_max, static_cast<std::size_t>(H.cols()));
  std::optional<SearchResult> best;
  std::size_t trials = 0;
  std::size_t best_constraints = 0;
  for (std::size_t r = 1; r <= r_limit; ++r) {
    const Clustering clustering = cluster_embeddings(
        H, labels, r, {options.kmeans_restarts, 300, clustering_seed(options.seed, r)});
    for (double theta : grid) {
      for (std::size_t k_theta = 1; k_theta <= k_theta_max; ++k_theta) {
        ExtractionParams params{r, theta, k_theta, options.r_max, options.kmeans_restarts, options.seed};
        CategoryExplanation candidate = assemble_category(clustering, W, catalog, params);
        ++trials;
        std::vector<bool> predicted(data.size());
        for (std::size_t i = 0; i < data.size(); ++i) predicted[i] = candidate.contains(data.row(i));
        const double f1 = score_binary(labels, predicted).f1;
        const std::size_t constraints = candidate.constraint_count();
        bool better = !best;
        if (best) {
          const std::size_t rects = candidate.rectangles.size();
          const std::size_t best_rects = best->explanation.rectangles.size();
          if (f1 != best->train_f1) {
            better = f1 > best->train_f1;
          } else if (rects != best_rects) {
            better = rects < best_rects;
          } else if (constraints != best_constraints) {
            better = constraints < best_constraints;
          } else {
            better = r < best->params.r;
          }
        }
        if (better) {
          best = SearchResult{params, std::move(candidate), f1, 0};
          best_constraints = constraints;
        }
      }
    }
  }
  best->trials = trials;
  return std::move(*best);
}

}  // namespace rectx
