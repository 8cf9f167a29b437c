#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rectx/rule_extractor.hpp"
#include "rectx/tabular_data.hpp"

namespace rectx {

struct BinaryScore {
  double precision = 0.0;
  double recall = 0.0;
  // 0 whenever TP = 0.
  double f1 = 0.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
};

BinaryScore score_binary(const std::vector<bool>& truth, const std::vector<bool>& predicted);

// The model's one-vs-rest labeling is the truth; membership in B_c the
// prediction.
BinaryScore category_f1(const CategoryExplanation& explanation, const LabeledDataset& data);

// Unweighted mean; unexplained categories enter as 0.
double macro_f1(std::span<const double> f1_values);

struct PuritySummary {
  std::size_t r = 0;
  double median = 0.0;
  double mean = 0.0;
  double min = 0.0;
  std::size_t clusters = 0;
};

// Statistics over the non-empty clusters' purities.
PuritySummary summarize_purities(std::size_t r, std::vector<double> purities);
std::vector<PuritySummary> purity_summary(const std::map<std::size_t, std::vector<Clustering>>& by_r);

struct CategoryFidelity {
  int category = 0;
  std::string name;
  BinaryScore score;
  std::size_t rectangle_count = 0;
  std::size_t constraint_count = 0;
};

struct FidelityReport {
  std::vector<CategoryFidelity> per_category;
  double macro_f1 = 0.0;
  std::string split;  // "train" or "test"
  std::string model_descriptor;
};

FidelityReport fidelity_report(const std::vector<CategoryExplanation>& explanations,
                               const LabeledDataset& data, std::string split,
                               std::string model_descriptor);

// Everything a run produces; rendered as text or as the structured format.
struct RunReport {
  std::string dataset_descriptor;
  std::string model_descriptor;
  std::optional<double> model_accuracy;
  std::vector<std::pair<std::string, std::string>> hyperparameters;
  std::vector<std::string> attribute_names;
  std::vector<CategoryExplanation> explanations;
  FidelityReport train;
  std::optional<FidelityReport> test;
};

enum class ReportFormat { text, structured };

inline constexpr int kReportVersion = 1;

std::string render_report(const RunReport& report, ReportFormat format);

// Inverse of the structured rendering. Metrics are restored as printed.
RunReport parse_structured_report(std::istream& in);

}  // namespace rectx
