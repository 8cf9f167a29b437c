#include "rectx/features.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include "rectx/errors.hpp"
#include "rectx/text_io.hpp"

namespace rectx {

FeatureCatalog::FeatureCatalog(std::vector<std::string> attribute_names,
                               std::vector<Feature> features, std::size_t bins_per_attribute)
    : names_(std::move(attribute_names)), features_(std::move(features)), bins_(bins_per_attribute) {
  if (features_.empty()) throw NoUsableFeatures("feature catalog is empty");
  range_start_.assign(names_.size() + 1, 0);
  for (std::size_t i = 0; i < features_.size(); ++i) {
    const auto& f = features_[i];
    if (f.attribute >= names_.size()) throw IndexOutOfRange("feature attribute index");
    if (i > 0) {
      const auto& prev = features_[i - 1];
      const bool ordered = prev.attribute < f.attribute ||
                           (prev.attribute == f.attribute && prev.bound < f.bound);
      if (!ordered) throw InvalidDataset("catalog features must be sorted with strictly increasing bounds");
    }
    ++range_start_[f.attribute + 1];
  }
  for (std::size_t j = 0; j < names_.size(); ++j) range_start_[j + 1] += range_start_[j];
}

std::vector<double> FeatureCatalog::cut_points(std::size_t attribute) const {
  const auto [first, last] = feature_range(attribute);
  std::vector<double> bounds;
  for (std::size_t i = first; i < last; ++i) bounds.push_back(features_[i].bound);
  return bounds;
}

std::pair<std::size_t, std::size_t> FeatureCatalog::feature_range(std::size_t attribute) const {
  return {range_start_.at(attribute), range_start_.at(attribute + 1)};
}

InterpretableVector FeatureCatalog::embed(std::span<const double> x) const {
  InterpretableVector z(features_.size());
  for (std::size_t i = 0; i < features_.size(); ++i) {
    z[i] = x[features_[i].attribute] <= features_[i].bound ? 1 : 0;
  }
  return z;
}

std::string FeatureCatalog::describe(std::size_t i, bool complemented) const {
  if (i >= features_.size()) {
    throw IndexOutOfRange("feature index " + std::to_string(i) + " out of range (M = " +
                          std::to_string(features_.size()) + ")");
  }
  const auto& f = features_[i];
  const std::string bound = format_real(f.bound);
  return complemented ? bound + " < " + names_[f.attribute] : names_[f.attribute] + " ≤ " + bound;
}

double interpolated_quantile(std::span<const double> sorted, double p) {
  const double h = static_cast<double>(sorted.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

FeatureCatalog build_catalog(const Dataset& train, std::size_t q) {
  if (q < 2) throw NoUsableFeatures("bins per attribute must be at least 2");
  std::vector<Feature> features;
  std::vector<double> column(train.size());
  for (std::size_t j = 0; j < train.num_attributes(); ++j) {
    for (std::size_t i = 0; i < train.size(); ++i) column[i] = train.at(i, j);
    std::sort(column.begin(), column.end());
    const double maximum = column.back();
    std::vector<double> bounds;
    for (std::size_t s = 1; s < q; ++s) {
      const double b = interpolated_quantile(column, static_cast<double>(s) / static_cast<double>(q));
      if (b >= maximum) continue;
      if (bounds.empty() || b > bounds.back()) bounds.push_back(b);
    }
    for (double b : bounds) features.push_back({j, b});
  }
  if (features.empty()) throw NoUsableFeatures("every attribute is constant on the training data");
  return FeatureCatalog(train.attribute_names(), std::move(features), q);
}

void write_catalog(std::ostream& out, const FeatureCatalog& catalog) {
  for (std::size_t i = 0; i < catalog.size(); ++i) {
    const auto& f = catalog.feature(i);
    out << i << ',' << catalog.attribute_names()[f.attribute] << ',' << format_real(f.bound) << '\n';
  }
}

FeatureCatalog read_catalog(std::istream& in, const std::vector<std::string>& attribute_names,
                            std::size_t bins_per_attribute) {
  std::vector<Feature> features;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (trim(line).empty()) continue;
    // Attribute names may contain commas; index and bound cannot.
    const auto first = line.find(',');
    const auto last = line.rfind(',');
    if (first == std::string::npos || first == last) throw ParseError("malformed catalog line", line_number, 1);
    const auto index = parse_integer(std::string_view(line).substr(0, first));
    const auto bound = parse_real(std::string_view(line).substr(last + 1));
    const std::string name = line.substr(first + 1, last - first - 1);
    if (!index || *index != static_cast<long long>(features.size())) {
      throw ParseError("catalog index out of sequence", line_number, 1);
    }
    if (!bound || !std::isfinite(*bound)) throw ParseError("bad catalog bound", line_number, 3);
    const auto it = std::find(attribute_names.begin(), attribute_names.end(), name);
    if (it == attribute_names.end()) throw ParseError("unknown attribute '" + name + "'", line_number, 2);
    features.push_back({static_cast<std::size_t>(it - attribute_names.begin()), *bound});
  }
  return FeatureCatalog(attribute_names, std::move(features), bins_per_attribute);
}

}  // namespace rectx
