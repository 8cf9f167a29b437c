#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace rectx {

class BlackBoxModel;

// N instances of m finite numerical attributes, stored row-major. Source
// labels are optional category ids in 1..C used for training built-in models.
class Dataset {
 public:
  Dataset() = default;
  // Validates every invariant; throws InvalidDataset, EmptyDataset or
  // NonFiniteValue.
  Dataset(std::vector<std::string> attribute_names, std::vector<double> values,
          std::optional<std::vector<int>> source_labels = std::nullopt,
          std::vector<std::string> source_category_names = {});

  std::size_t size() const { return values_.size() / names_.size(); }
  std::size_t num_attributes() const { return names_.size(); }
  const std::vector<std::string>& attribute_names() const { return names_; }
  std::span<const double> row(std::size_t i) const {
    return {values_.data() + i * names_.size(), names_.size()};
  }
  std::span<const double> values() const { return values_; }
  double at(std::size_t i, std::size_t j) const { return values_[i * names_.size() + j]; }

  bool has_source_labels() const { return source_labels_.has_value(); }
  const std::vector<int>& source_labels() const;
  const std::vector<std::string>& source_category_names() const { return category_names_; }

  // Zero-variance columns are retained; the feature catalog skips them.
  std::vector<bool> constant_attributes() const;

  Dataset subset(std::span<const std::size_t> indices) const;

 private:
  std::vector<std::string> names_;
  std::vector<double> values_;
  std::optional<std::vector<int>> source_labels_;
  std::vector<std::string> category_names_;
};

struct LoadOptions {
  char delimiter = ',';
  bool has_header = true;
  // Column holding ground-truth categories, by header name.
  std::optional<std::string> label_column;
};

Dataset load_dataset(const std::string& path, const LoadOptions& options = {});
Dataset read_dataset(std::istream& in, const LoadOptions& options = {});

// Canonical form: header row, comma-separated, shortest round-trip reals. The
// label column (when present) is appended under `label_column`.
void write_dataset(std::ostream& out, const Dataset& dataset,
                   const std::string& label_column = "label");
void save_dataset(const std::string& path, const Dataset& dataset,
                  const std::string& label_column = "label");

// Deterministic shuffled split, stratified by source labels when present.
// |train| = floor(train_fraction * N), so 178 rows at 0.7 give 124/54. Both outputs keep file order.
std::pair<Dataset, Dataset> split(const Dataset& dataset, double train_fraction,
                                  std::uint64_t seed);

// The model's labeling of a dataset; induces the partition into R_c.
struct LabeledDataset {
  Dataset dataset;
  std::vector<int> model_labels;
  std::vector<std::string> category_names;

  std::size_t num_categories() const { return category_names.size(); }
  std::vector<std::size_t> partition_sizes() const;
  std::vector<bool> one_vs_rest(int category) const;
};

LabeledDataset label_with(const Dataset& dataset, BlackBoxModel& model);

}  // namespace rectx
