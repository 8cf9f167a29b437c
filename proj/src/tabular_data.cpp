#include "rectx/tabular_data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>

#include "rectx/blackbox.hpp"
#include "rectx/errors.hpp"
#include "rectx/rng.hpp"
#include "rectx/text_io.hpp"

namespace rectx {

Dataset::Dataset(std::vector<std::string> attribute_names, std::vector<double> values,
                 std::optional<std::vector<int>> source_labels,
                 std::vector<std::string> source_category_names)
    : names_(std::move(attribute_names)),
      values_(std::move(values)),
      source_labels_(std::move(source_labels)),
      category_names_(std::move(source_category_names)) {
  if (names_.empty()) throw InvalidDataset("dataset needs at least one attribute");
  std::set<std::string> seen;
  for (const auto& name : names_) {
    if (name.empty()) throw InvalidDataset("attribute names must be non-empty");
    if (!seen.insert(name).second) throw InvalidDataset("duplicate attribute name '" + name + "'");
  }
  if (values_.size() % names_.size() != 0) {
    throw InvalidDataset("value count is not a multiple of the attribute count");
  }
  if (values_.empty()) throw EmptyDataset("dataset has no rows");
  const std::size_t m = names_.size();
  for (std::size_t k = 0; k < values_.size(); ++k) {
    if (!std::isfinite(values_[k])) throw NonFiniteValue(k / m + 1, k % m + 1);
  }
  if (source_labels_) {
    if (source_labels_->size() != size()) {
      throw InvalidDataset("source label count differs from row count");
    }
    const int num_categories = static_cast<int>(category_names_.size());
    for (int label : *source_labels_) {
      if (label < 1 || label > num_categories) {
        throw InvalidDataset("source label " + std::to_string(label) + " outside 1.." +
                             std::to_string(num_categories));
      }
    }
  }
}

const std::vector<int>& Dataset::source_labels() const {
  if (!source_labels_) throw InvalidDataset("dataset has no source labels");
  return *source_labels_;
}

std::vector<bool> Dataset::constant_attributes() const {
  const std::size_t m = num_attributes();
  std::vector<bool> constant(m, true);
  for (std::size_t i = 1; i < size(); ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (at(i, j) != at(0, j)) constant[j] = false;
    }
  }
  return constant;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  const std::size_t m = num_attributes();
  std::vector<double> values;
  values.reserve(indices.size() * m);
  std::optional<std::vector<int>> labels;
  if (source_labels_) labels.emplace();
  for (std::size_t i : indices) {
    if (i >= size()) throw IndexOutOfRange("row index " + std::to_string(i));
    const auto r = row(i);
    values.insert(values.end(), r.begin(), r.end());
    if (labels) labels->push_back((*source_labels_)[i]);
  }
  return Dataset(names_, std::move(values), std::move(labels), category_names_);
}

namespace {

// Integer-looking labels sort numerically, anything else lexicographically.
std::vector<std::string> order_categories(const std::set<std::string>& raw) {
  std::vector<std::string> names(raw.begin(), raw.end());
  const bool numeric = std::all_of(names.begin(), names.end(), [](const std::string& s) {
    return parse_integer(s).has_value();
  });
  if (numeric) {
    std::sort(names.begin(), names.end(), [](const std::string& a, const std::string& b) {
      return *parse_integer(a) < *parse_integer(b);
    });
  }
  return names;
}

}  // namespace

Dataset read_dataset(std::istream& in, const LoadOptions& options) {
  std::string line;
  std::size_t line_number = 0;
  std::vector<std::string> header;
  std::size_t width = 0;
  std::optional<std::size_t> label_index;

  std::vector<std::vector<std::string>> raw_rows;
  std::vector<std::size_t> row_lines;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto cells = split(line, options.delimiter);
    if (options.has_header && header.empty()) {
      for (auto& cell : cells) cell = std::string(trim(cell));
      header = std::move(cells);
      width = header.size();
      continue;
    }
    if (width == 0) width = cells.size();
    if (cells.size() != width) {
      throw ParseError("expected " + std::to_string(width) + " cells, found " +
                           std::to_string(cells.size()),
                       line_number, std::min(cells.size(), width) + 1);
    }
    raw_rows.push_back(std::move(cells));
    row_lines.push_back(line_number);
  }
  if (!options.has_header) {
    for (std::size_t j = 0; j < width; ++j) header.push_back("x" + std::to_string(j + 1));
  }
  if (options.label_column) {
    auto it = std::find(header.begin(), header.end(), *options.label_column);
    if (it == header.end()) {
      throw InvalidDataset("label column '" + *options.label_column + "' not in header");
    }
    label_index = static_cast<std::size_t>(it - header.begin());
  }
  if (raw_rows.empty()) throw EmptyDataset("no data rows");

  std::vector<std::string> names;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (!label_index || j != *label_index) names.push_back(header[j]);
  }
  if (names.empty()) throw InvalidDataset("no attribute columns");

  std::vector<double> values;
  values.reserve(raw_rows.size() * names.size());
  std::set<std::string> raw_labels;
  for (std::size_t i = 0; i < raw_rows.size(); ++i) {
    for (std::size_t j = 0; j < width; ++j) {
      if (label_index && j == *label_index) {
        raw_labels.insert(std::string(trim(raw_rows[i][j])));
        continue;
      }
      const auto value = parse_real(raw_rows[i][j]);
      if (!value) throw ParseError("cannot parse '" + raw_rows[i][j] + "' as a real", row_lines[i], j + 1);
      if (!std::isfinite(*value)) throw NonFiniteValue(row_lines[i], j + 1);
      values.push_back(*value);
    }
  }

  std::optional<std::vector<int>> labels;
  std::vector<std::string> categories;
  if (label_index) {
    categories = order_categories(raw_labels);
    std::map<std::string, int> ids;
    for (std::size_t c = 0; c < categories.size(); ++c) ids[categories[c]] = static_cast<int>(c + 1);
    labels.emplace();
    for (const auto& cells : raw_rows) labels->push_back(ids.at(std::string(trim(cells[*label_index]))));
  }
  return Dataset(std::move(names), std::move(values), std::move(labels), std::move(categories));
}

Dataset load_dataset(const std::string& path, const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw InvalidDataset("cannot open '" + path + "'");
  return read_dataset(in, options);
}

void write_dataset(std::ostream& out, const Dataset& dataset, const std::string& label_column) {
  const auto& names = dataset.attribute_names();
  for (std::size_t j = 0; j < names.size(); ++j) out << (j ? "," : "") << names[j];
  if (dataset.has_source_labels()) out << ',' << label_column;
  out << '\n';
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto r = dataset.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) out << (j ? "," : "") << format_real(r[j]);
    if (dataset.has_source_labels()) {
      out << ',' << dataset.source_category_names()[dataset.source_labels()[i] - 1];
    }
    out << '\n';
  }
}

void save_dataset(const std::string& path, const Dataset& dataset, const std::string& label_column) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidDataset("cannot write '" + path + "'");
  write_dataset(out, dataset, label_column);
}

std::pair<Dataset, Dataset> split(const Dataset& dataset, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw DegenerateSplit("train fraction must lie in (0, 1)");
  }
  const std::size_t n = dataset.size();
  // Floor with a small guard so 0.7 * 10 counts as 7.
  const auto train_total =
      static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n) + 1e-9));
  if (train_total == 0 || train_total >= n) {
    throw DegenerateSplit("split of " + std::to_string(n) + " rows leaves one side empty");
  }

  // Strata are the source categories, or a single stratum without labels.
  std::map<int, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < n; ++i) {
    strata[dataset.has_source_labels() ? dataset.source_labels()[i] : 0].push_back(i);
  }

  // Floor allocation per stratum, then largest remainders (ties to the lower
  // stratum) until the exact train total is reached.
  std::vector<std::pair<int, std::size_t>> quota;
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t allocated = 0;
  for (const auto& [label, members] : strata) {
    const double exact = train_fraction * static_cast<double>(members.size());
    const auto base = static_cast<std::size_t>(std::floor(exact));
    remainders.emplace_back(exact - static_cast<double>(base), quota.size());
    quota.emplace_back(label, base);
    allocated += base;
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; allocated < train_total; k = (k + 1) % remainders.size()) {
    auto& q = quota[remainders[k].second];
    if (q.second < strata[q.first].size()) {
      ++q.second;
      ++allocated;
    }
  }

  Rng rng(seed);
  std::vector<std::size_t> train_idx;
  std::vector<std::size_t> test_idx;
  for (const auto& [label, take] : quota) {
    auto members = strata[label];
    rng.shuffle(std::span<std::size_t>(members));
    train_idx.insert(train_idx.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(take));
    test_idx.insert(test_idx.end(), members.begin() + static_cast<std::ptrdiff_t>(take), members.end());
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());
  return {dataset.subset(train_idx), dataset.subset(test_idx)};
}

std::vector<std::size_t> LabeledDataset::partition_sizes() const {
  std::vector<std::size_t> sizes(num_categories(), 0);
  for (int label : model_labels) ++sizes[static_cast<std::size_t>(label - 1)];
  return sizes;
}

std::vector<bool> LabeledDataset::one_vs_rest(int category) const {
  std::vector<bool> mask(model_labels.size());
  for (std::size_t i = 0; i < model_labels.size(); ++i) mask[i] = model_labels[i] == category;
  return mask;
}

LabeledDataset label_with(const Dataset& dataset, BlackBoxModel& model) {
  if (model.input_dim() != dataset.num_attributes()) {
    throw InvalidDataset("model expects " + std::to_string(model.input_dim()) +
                         " attributes, dataset has " + std::to_string(dataset.num_attributes()));
  }
  LabeledDataset labeled{dataset, model.predict(dataset.values()), model.category_names()};
  return labeled;
}

}  // namespace rectx
