#include "rectx/blackbox.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>

#include "rectx/errors.hpp"
#include "rectx/rng.hpp"
#include "rectx/text_io.hpp"

namespace rectx {

FunctionModel::FunctionModel(std::size_t input_dim, std::vector<std::string> category_names,
                             Function fn, std::string descriptor)
    : input_dim_(input_dim),
      names_(std::move(category_names)),
      fn_(std::move(fn)),
      descriptor_(std::move(descriptor)) {}

std::vector<int> FunctionModel::predict(std::span<const double> rows) {
  std::vector<int> labels;
  labels.reserve(rows.size() / input_dim_);
  for (std::size_t offset = 0; offset + input_dim_ <= rows.size(); offset += input_dim_) {
    const int label = fn_(rows.subspan(offset, input_dim_));
    if (label < 1 || label > num_categories()) {
      throw OracleFailure("function model returned label " + std::to_string(label));
    }
    labels.push_back(label);
  }
  return labels;
}

std::vector<std::string> numbered_categories(int count) {
  std::vector<std::string> names;
  for (int c = 1; c <= count; ++c) names.push_back(std::to_string(c));
  return names;
}

std::string ForestConfig::describe() const {
  return "trees=" + std::to_string(num_trees) +
         ",max_depth=" + (max_depth ? std::to_string(*max_depth) : std::string("none")) +
         ",min_leaf=" + std::to_string(min_leaf) + ",features_per_split=" +
         (features_per_split ? std::to_string(*features_per_split) : std::string("sqrt")) +
         ",seed=" + std::to_string(seed);
}

int DecisionTree::predict(std::span<const double> row) const {
  int node = 0;
  while (nodes_[static_cast<std::size_t>(node)].attribute >= 0) {
    const auto& n = nodes_[static_cast<std::size_t>(node)];
    node = row[static_cast<std::size_t>(n.attribute)] <= n.threshold ? n.left : n.right;
  }
  return nodes_[static_cast<std::size_t>(node)].label;
}

RandomForest::RandomForest(std::vector<DecisionTree> trees, std::size_t input_dim,
                           std::vector<std::string> category_names, ForestConfig config)
    : trees_(std::move(trees)),
      input_dim_(input_dim),
      names_(std::move(category_names)),
      config_(config) {}

std::string RandomForest::descriptor() const { return "builtin_forest(" + config_.describe() + ")"; }

int RandomForest::vote(std::span<const double> row) const {
  std::vector<int> counts(names_.size() + 1, 0);
  for (const auto& tree : trees_) ++counts[static_cast<std::size_t>(tree.predict(row))];
  return static_cast<int>(std::max_element(counts.begin() + 1, counts.end()) - counts.begin());
}

std::vector<int> RandomForest::predict(std::span<const double> rows) {
  std::vector<int> labels;
  labels.reserve(rows.size() / input_dim_);
  for (std::size_t offset = 0; offset + input_dim_ <= rows.size(); offset += input_dim_) {
    labels.push_back(vote(rows.subspan(offset, input_dim_)));
  }
  return labels;
}

namespace {

struct SplitCandidate {
  int attribute = -1;
  double threshold = 0.0;
  std::size_t left_count = 0;
  // Score is (sum_k L_k^2 * nR + sum_k R_k^2 * nL) / (nL * nR); larger means
  // lower weighted Gini. Kept as an exact fraction for deterministic ties.
  __int128 numerator = 0;
  __int128 denominator = 1;

  bool better_than(const SplitCandidate& other) const {
    if (other.attribute < 0) return true;
    return numerator * other.denominator > other.numerator * denominator;
  }
};

class TreeGrower {
 public:
  TreeGrower(const Dataset& train, const ForestConfig& config, std::size_t num_categories, Rng& rng)
      : train_(train), config_(config), num_categories_(num_categories), rng_(rng) {
    const std::size_t m = train.num_attributes();
    per_split_ = config.features_per_split
                     ? std::min(*config.features_per_split, m)
                     : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(m))));
    per_split_ = std::max<std::size_t>(per_split_, 1);
  }

  DecisionTree grow(std::vector<std::size_t> sample) {
    nodes_.clear();
    build(std::move(sample), 0);
    return DecisionTree(std::move(nodes_));
  }

 private:
  int label_of(std::size_t i) const { return train_.source_labels()[i]; }

  int build(std::vector<std::size_t> sample, std::size_t depth) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();

    std::vector<std::size_t> counts(num_categories_ + 1, 0);
    for (std::size_t i : sample) ++counts[static_cast<std::size_t>(label_of(i))];
    const auto majority =
        static_cast<int>(std::max_element(counts.begin() + 1, counts.end()) - counts.begin());
    const bool pure = counts[static_cast<std::size_t>(majority)] == sample.size();
    const bool too_small = sample.size() < 2 * config_.min_leaf;
    const bool too_deep = config_.max_depth && depth >= *config_.max_depth;
    if (pure || too_small || too_deep) {
      nodes_[static_cast<std::size_t>(id)].label = majority;
      return id;
    }

    const SplitCandidate best = find_split(sample, counts);
    if (best.attribute < 0) {
      nodes_[static_cast<std::size_t>(id)].label = majority;
      return id;
    }
    std::vector<std::size_t> left;
    std::vector<std::size_t> right;
    for (std::size_t i : sample) {
      (train_.at(i, static_cast<std::size_t>(best.attribute)) <= best.threshold ? left : right).push_back(i);
    }
    sample.clear();
    sample.shrink_to_fit();
    const int l = build(std::move(left), depth + 1);
    const int r = build(std::move(right), depth + 1);
    auto& node = nodes_[static_cast<std::size_t>(id)];
    node.attribute = best.attribute;
    node.threshold = best.threshold;
    node.left = l;
    node.right = r;
    node.label = majority;
    return id;
  }

  SplitCandidate find_split(const std::vector<std::size_t>& sample,
                            const std::vector<std::size_t>& counts) {
    const std::size_t m = train_.num_attributes();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t k = 0; k < per_split_; ++k) std::swap(order[k], order[k + rng_.index(m - k)]);
    std::vector<std::size_t> drawn(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(per_split_));
    std::vector<std::size_t> rest(order.begin() + static_cast<std::ptrdiff_t>(per_split_), order.end());
    std::sort(drawn.begin(), drawn.end());
    std::sort(rest.begin(), rest.end());

    SplitCandidate best = best_over(drawn, sample, counts);
    // No usable split among the drawn attributes: fall back to the others.
    if (best.attribute < 0) best = best_over(rest, sample, counts);
    return best;
  }

  SplitCandidate best_over(const std::vector<std::size_t>& attributes,
                           const std::vector<std::size_t>& sample,
                           const std::vector<std::size_t>& counts) const {
    SplitCandidate best;
    std::vector<std::pair<double, int>> column(sample.size());
    std::vector<std::size_t> left(num_categories_ + 1);
    const std::size_t n = sample.size();
    for (std::size_t attribute : attributes) {
      for (std::size_t k = 0; k < n; ++k) column[k] = {train_.at(sample[k], attribute), label_of(sample[k])};
      std::sort(column.begin(), column.end());
      std::fill(left.begin(), left.end(), 0);
      for (std::size_t k = 0; k + 1 < n; ++k) {
        ++left[static_cast<std::size_t>(column[k].second)];
        if (column[k].first == column[k + 1].first) continue;
        const std::size_t nl = k + 1;
        const std::size_t nr = n - nl;
        if (nl < config_.min_leaf || nr < config_.min_leaf) continue;
        __int128 sum_left = 0;
        __int128 sum_right = 0;
        for (std::size_t c = 1; c <= num_categories_; ++c) {
          const auto lc = static_cast<__int128>(left[c]);
          const auto rc = static_cast<__int128>(counts[c] - left[c]);
          sum_left += lc * lc;
          sum_right += rc * rc;
        }
        SplitCandidate candidate;
        candidate.attribute = static_cast<int>(attribute);
        candidate.threshold = column[k].first + (column[k + 1].first - column[k].first) / 2.0;
        candidate.left_count = nl;
        candidate.numerator = sum_left * static_cast<__int128>(nr) + sum_right * static_cast<__int128>(nl);
        candidate.denominator = static_cast<__int128>(nl) * static_cast<__int128>(nr);
        if (candidate.better_than(best)) best = candidate;
      }
    }
    return best;
  }

  const Dataset& train_;
  const ForestConfig& config_;
  std::size_t num_categories_;
  Rng& rng_;
  std::size_t per_split_ = 1;
  std::vector<TreeNode> nodes_;
};

}  // namespace

std::unique_ptr<RandomForest> train_forest(const Dataset& train, const ForestConfig& config) {
  if (!train.has_source_labels()) throw SingleClassTraining("training data has no source labels");
  if (config.num_trees < 1) throw InvalidDataset("forest needs at least one tree");
  if (config.min_leaf < 1) throw InvalidDataset("min_leaf must be at least 1");
  if (train.size() < config.min_leaf) {
    throw InsufficientData("fewer rows (" + std::to_string(train.size()) + ") than min_leaf");
  }
  const std::set<int> distinct(train.source_labels().begin(), train.source_labels().end());
  if (distinct.size() < 2) throw SingleClassTraining("training data has a single category");

  const std::size_t num_categories = train.source_category_names().size();
  const std::size_t n = train.size();
  std::vector<DecisionTree> trees;
  trees.reserve(config.num_trees);
  for (std::size_t t = 0; t < config.num_trees; ++t) {
    Rng rng(derive_seed(config.seed, t));
    std::vector<std::size_t> bootstrap(n);
    for (auto& i : bootstrap) i = rng.index(n);
    TreeGrower grower(train, config, num_categories, rng);
    trees.push_back(grower.grow(std::move(bootstrap)));
  }
  return std::make_unique<RandomForest>(std::move(trees), train.num_attributes(),
                                        train.source_category_names(), config);
}

std::size_t serve_oracle(BlackBoxModel& model, std::istream& in, std::ostream& out) {
  std::string line;
  if (!std::getline(in, line)) return 0;
  const auto hello = split_whitespace(line);
  const std::string expected_m = "m=" + std::to_string(model.input_dim());
  const std::string expected_c = "c=" + std::to_string(model.num_categories());
  if (hello.size() != 3 || hello[0] != "HELLO" || hello[1] != expected_m || hello[2] != expected_c) {
    out << "ERROR expected HELLO " << expected_m << ' ' << expected_c << '\n' << std::flush;
    return 0;
  }
  out << "READY\n" << std::flush;

  const std::size_t m = model.input_dim();
  std::size_t answered = 0;
  std::vector<double> rows;
  auto parse_row = [&](const std::string& text) {
    const auto cells = split(text, ',');
    if (cells.size() != m) return false;
    for (const auto& cell : cells) {
      const auto value = parse_real(cell);
      if (!value) return false;
      rows.push_back(*value);
    }
    return true;
  };
  while (std::getline(in, line)) {
    rows.clear();
    std::size_t expected = 1;
    if (line.rfind("BATCH ", 0) == 0) {
      const auto n = parse_integer(std::string_view(line).substr(6));
      if (!n || *n < 0) break;
      expected = static_cast<std::size_t>(*n);
      for (std::size_t k = 0; k < expected; ++k) {
        if (!std::getline(in, line) || !parse_row(line)) return answered;
      }
    } else if (!parse_row(line)) {
      break;
    }
    for (int label : model.predict(rows)) out << label << '\n';
    out << std::flush;
    answered += expected;
  }
  return answered;
}

}  // namespace rectx
