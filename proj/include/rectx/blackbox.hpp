#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rectx/tabular_data.hpp"

namespace rectx {

enum class ModelKind { builtin_forest, external_oracle, function };

// The classifier under explanation. Only predictions are ever observed.
// predict is non-const because external oracles perform I/O; in-process
// models are immutable and may be shared across threads.
class BlackBoxModel {
 public:
  virtual ~BlackBoxModel() = default;

  virtual ModelKind kind() const = 0;
  virtual std::size_t input_dim() const = 0;
  virtual const std::vector<std::string>& category_names() const = 0;
  virtual std::string descriptor() const = 0;

  // `rows` is row-major with input_dim() entries per row. Returns one label
  // in 1..C per row, in order.
  virtual std::vector<int> predict(std::span<const double> rows) = 0;

  int num_categories() const { return static_cast<int>(category_names().size()); }
  int predict_one(std::span<const double> row) { return predict(row).front(); }
};

// Adapts a plain function; used for synthetic black boxes.
class FunctionModel final : public BlackBoxModel {
 public:
  using Function = std::function<int(std::span<const double>)>;
  FunctionModel(std::size_t input_dim, std::vector<std::string> category_names, Function fn,
                std::string descriptor = "function");

  ModelKind kind() const override { return ModelKind::function; }
  std::size_t input_dim() const override { return input_dim_; }
  const std::vector<std::string>& category_names() const override { return names_; }
  std::string descriptor() const override { return descriptor_; }
  std::vector<int> predict(std::span<const double> rows) override;

 private:
  std::size_t input_dim_;
  std::vector<std::string> names_;
  Function fn_;
  std::string descriptor_;
};

std::vector<std::string> numbered_categories(int count);

// ---------------------------------------------------------------------------
// Random forest

struct ForestConfig {
  std::size_t num_trees = 200;
  std::optional<std::size_t> max_depth;
  std::size_t min_leaf = 1;
  // Candidate attributes per split; nullopt means ceil(sqrt(m)).
  std::optional<std::size_t> features_per_split;
  std::uint64_t seed = 0;

  std::string describe() const;
};

struct TreeNode {
  // Leaves have attribute < 0 and carry `label`.
  int attribute = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  int label = 0;
};

class DecisionTree {
 public:
  explicit DecisionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}
  int predict(std::span<const double> row) const;
  const std::vector<TreeNode>& nodes() const { return nodes_; }

 private:
  std::vector<TreeNode> nodes_;
};

class RandomForest final : public BlackBoxModel {
 public:
  RandomForest(std::vector<DecisionTree> trees, std::size_t input_dim,
               std::vector<std::string> category_names, ForestConfig config);

  ModelKind kind() const override { return ModelKind::builtin_forest; }
  std::size_t input_dim() const override { return input_dim_; }
  const std::vector<std::string>& category_names() const override { return names_; }
  std::string descriptor() const override;
  std::vector<int> predict(std::span<const double> rows) override;

  // Majority vote, ties to the lowest category id.
  int vote(std::span<const double> row) const;
  const std::vector<DecisionTree>& trees() const { return trees_; }

 private:
  std::vector<DecisionTree> trees_;
  std::size_t input_dim_;
  std::vector<std::string> names_;
  ForestConfig config_;
};

// Bagged Gini trees. Splits sit at midpoints between consecutive distinct
// values; ties go to the lowest attribute, then the lowest threshold.
std::unique_ptr<RandomForest> train_forest(const Dataset& train, const ForestConfig& config);

// ---------------------------------------------------------------------------
// Prediction-oracle protocol (line based over stdin/stdout):
//   -> "HELLO m=<m> c=<C>"    <- "READY"
//   -> "BATCH <n>" + n rows of m comma-joined reals
//   <- n lines, each a 1-based category id

struct OracleOptions {
  // Reply timeout per line.
  int timeout_ms = 30000;
  // Rows per BATCH frame; bounds the pipe backlog on both sides.
  std::size_t max_batch = 512;
};

class OracleModel final : public BlackBoxModel {
 public:
  ~OracleModel() override;
  OracleModel(const OracleModel&) = delete;
  OracleModel& operator=(const OracleModel&) = delete;

  ModelKind kind() const override { return ModelKind::external_oracle; }
  std::size_t input_dim() const override { return input_dim_; }
  const std::vector<std::string>& category_names() const override { return names_; }
  std::string descriptor() const override;
  std::vector<int> predict(std::span<const double> rows) override;

 private:
  friend std::unique_ptr<OracleModel> connect_oracle(const std::vector<std::string>&, std::size_t,
                                                     int, const OracleOptions&);
  OracleModel(std::vector<std::string> command, std::size_t input_dim, int num_categories,
              OracleOptions options);
  void write_all(const std::string& data);
  std::string read_line();
  void shutdown();

  std::vector<std::string> command_;
  std::size_t input_dim_;
  std::vector<std::string> names_;
  OracleOptions options_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string pending_;
};

// Spawns `command` (argv form, PATH lookup) and performs the handshake.
std::unique_ptr<OracleModel> connect_oracle(const std::vector<std::string>& command,
                                            std::size_t input_dim, int num_categories,
                                            const OracleOptions& options = {});

// Serves `model` over the oracle protocol until `in` closes. Returns the
// number of rows answered. Used by the forest_oracle tool.
std::size_t serve_oracle(BlackBoxModel& model, std::istream& in, std::ostream& out);

}  // namespace rectx
