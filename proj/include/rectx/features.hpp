#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "rectx/tabular_data.hpp"

namespace rectx {

// The indicator 1[x_attribute <= bound].
struct Feature {
  std::size_t attribute = 0;
  double bound = 0.0;

  bool operator==(const Feature&) const = default;
};

// Binary point of the interpretable space {0,1}^M.
using InterpretableVector = std::vector<std::uint8_t>;

// Half-bounded interval indicators from quantile discretization. Features are
// ordered by attribute, then by increasing bound.
class FeatureCatalog {
 public:
  FeatureCatalog(std::vector<std::string> attribute_names, std::vector<Feature> features,
                 std::size_t bins_per_attribute);

  std::size_t size() const { return features_.size(); }
  std::size_t num_attributes() const { return names_.size(); }
  std::size_t bins_per_attribute() const { return bins_; }
  const Feature& feature(std::size_t i) const { return features_.at(i); }
  const std::vector<Feature>& features() const { return features_; }
  const std::vector<std::string>& attribute_names() const { return names_; }

  // Bounds on one attribute, increasing.
  std::vector<double> cut_points(std::size_t attribute) const;
  // Index range [first, last) of the attribute's features.
  std::pair<std::size_t, std::size_t> feature_range(std::size_t attribute) const;

  InterpretableVector embed(std::span<const double> x) const;

  // "name ≤ b", or "b < name" for the complement.
  std::string describe(std::size_t i, bool complemented) const;

 private:
  std::vector<std::string> names_;
  std::vector<Feature> features_;
  std::size_t bins_;
  std::vector<std::size_t> range_start_;
};

// Linear-interpolation quantile of sorted values (the "type 7" rule).
double interpolated_quantile(std::span<const double> sorted, double p);

// Per attribute: the q-1 interior quantiles of the training values with
// duplicates collapsed. Bounds at or above the attribute maximum are dropped
// since their indicator is constant on the training data; zero-variance
// attributes therefore contribute nothing. Throws NoUsableFeatures when M = 0.
FeatureCatalog build_catalog(const Dataset& train, std::size_t q);

inline std::string feature_description(const FeatureCatalog& catalog, std::size_t i,
                                       bool complemented) {
  return catalog.describe(i, complemented);
}

// One line per feature: "index,attribute_name,bound".
void write_catalog(std::ostream& out, const FeatureCatalog& catalog);
FeatureCatalog read_catalog(std::istream& in, const std::vector<std::string>& attribute_names,
                            std::size_t bins_per_attribute);

}  // namespace rectx
