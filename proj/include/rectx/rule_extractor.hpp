#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rectx/features.hpp"
#include "rectx/tabular_data.hpp"

namespace rectx {

// (lower, upper]; infinite ends are unbounded.
struct Interval {
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();

  bool empty() const { return !(lower < upper); }
  bool contains(double v) const { return lower < v && v <= upper; }
  bool has_lower() const { return lower != -std::numeric_limits<double>::infinity(); }
  bool has_upper() const { return upper != std::numeric_limits<double>::infinity(); }
  Interval intersect(const Interval& other) const;

  bool operator==(const Interval&) const = default;
};

// Conjunction of per-attribute intervals. Absent attributes are unconstrained.
// A contradiction collapses the whole rectangle to the canonical empty one.
class Rectangle {
 public:
  static Rectangle whole_space() { return Rectangle(); }
  static Rectangle empty_rectangle();

  bool is_empty() const { return empty_; }
  bool is_unconstrained() const { return !empty_ && constraints_.empty(); }
  const std::map<std::size_t, Interval>& constraints() const { return constraints_; }

  void constrain(std::size_t attribute, const Interval& interval);
  Rectangle intersect(const Rectangle& other) const;
  bool contains(std::span<const double> x) const;

  // Number of finite bounds, i.e. "attribute op bound" triples.
  std::size_t constraint_count() const;

  bool operator==(const Rectangle&) const = default;

 private:
  std::map<std::size_t, Interval> constraints_;
  bool empty_ = false;
};

inline bool rectangle_contains(const Rectangle& rect, std::span<const double> x) {
  return rect.contains(x);
}

// "12.85 < Alcohol & Proline ≤ 682.5"; "(entire space)" when unconstrained.
std::string describe_rectangle(const Rectangle& rect, const std::vector<std::string>& attribute_names);

// B(w, theta): x_{j_i} <= b_i for rows i < M with w_i > theta, and
// b_i < x_{j_i} for complement rows M + i with w_{M+i} > theta.
Rectangle rectangle_from_base(std::span<const double> w, double theta_w, const FeatureCatalog& catalog);

// ---------------------------------------------------------------------------
// Clustering of embedded explanations

struct ClusterStats {
  std::size_t size = 0;
  std::size_t target_count = 0;
  // Share of the most common binary label; 0 for an empty cluster.
  double purity = 0.0;
  // Strict majority of target-labeled members.
  bool majority = false;
};

struct Clustering {
  std::vector<std::size_t> assignments;
  Eigen::MatrixXd centroids;  // k x r, column i is g_i
  std::vector<ClusterStats> clusters;
  double inertia = 0.0;

  std::size_t majority_count() const;
};

struct KMeansOptions {
  std::size_t restarts = 10;
  std::size_t max_iters = 300;
  std::uint64_t seed = 0;
};

// Best-of-restarts k-means (k-means++ seeding, squared Euclidean) on the
// columns of H. Throws TooManyClusters when r > N.
Clustering cluster_embeddings(const Eigen::MatrixXd& H, const std::vector<bool>& labels,
                              std::size_t r, const KMeansOptions& options);

// ---------------------------------------------------------------------------
// Rule assembly

struct RuleRectangle {
  Rectangle rectangle;
  std::size_t cluster = 0;
  // Target-labeled members of the source cluster.
  std::size_t members = 0;
  std::vector<std::size_t> bases;  // S_i, heaviest first
  std::vector<double> weights;     // g_{i,l} for l in S_i
};

// Intersection of B(w_l, theta) over the k_theta heaviest centroid entries
// (ties to the lower index).
RuleRectangle rules_from_cluster(std::span<const double> centroid, const Eigen::MatrixXd& W,
                                 std::size_t k_theta, double theta_w, const FeatureCatalog& catalog);

struct ExtractionParams {
  std::size_t r = 1;
  double theta_w = 0.0;
  std::size_t k_theta = 1;
  std::size_t r_max = 5;
  std::size_t kmeans_restarts = 10;
  std::uint64_t seed = 0;
};

struct CategoryExplanation {
  int category = 0;
  std::string name;
  // Union B_c, ordered by source-cluster target membership (largest first).
  std::vector<RuleRectangle> rectangles;
  bool unexplained = true;
  ExtractionParams params;

  bool contains(std::span<const double> x) const;
  std::size_t constraint_count() const;
};

// Clustering seed used for a given r; shared by extraction and search so both
// see the same clusters.
std::uint64_t clustering_seed(std::uint64_t seed, std::size_t r);

CategoryExplanation extract_category(const Eigen::MatrixXd& H, const Eigen::MatrixXd& W,
                                     const std::vector<bool>& labels, const FeatureCatalog& catalog,
                                     const ExtractionParams& params);

// Same, from a precomputed clustering.
CategoryExplanation assemble_category(const Clustering& clustering, const Eigen::MatrixXd& W,
                                      const FeatureCatalog& catalog, const ExtractionParams& params);

// Deciles (10%..90%) of the positive entries of W merged with 0.1..0.9 times
// the largest entry; {0} when W has no positive entry.
std::vector<double> default_theta_grid(const Eigen::MatrixXd& W);

struct SearchOptions {
  std::size_t r_max = 5;
  // Empty means default_theta_grid(W).
  std::vector<double> theta_grid;
  // Upper end of k_theta; nullopt means the NMF rank.
  std::optional<std::size_t> k_theta_max;
  std::size_t kmeans_restarts = 10;
  std::uint64_t seed = 0;
};

struct SearchResult {
  ExtractionParams params;
  CategoryExplanation explanation;
  double train_f1 = 0.0;
  std::size_t trials = 0;
};

// Exhaustive search over r in 1..r_max, theta in the grid, k_theta in
// 1..k_theta_max maximizing F1 of B_c on `data` against `labels`. Ties go to
// fewer rectangles, then fewer constraints, then smaller r.
SearchResult search_params(const Eigen::MatrixXd& H, const Eigen::MatrixXd& W,
                           const std::vector<bool>& labels, const FeatureCatalog& catalog,
                           const Dataset& data, const SearchOptions& options);

}  // namespace rectx
