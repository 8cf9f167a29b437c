#include "rectx/evaluation.hpp"

#include <algorithm>
#include <istream>
#include <numeric>
#include <sstream>

#include "rectx/errors.hpp"
#include "rectx/text_io.hpp"

namespace rectx {

BinaryScore score_binary(const std::vector<bool>& truth, const std::vector<bool>& predicted) {
  if (truth.size() != predicted.size()) throw InvalidDataset("truth and prediction lengths differ");
  BinaryScore s;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] && predicted[i]) ++s.tp;
    else if (!truth[i] && predicted[i]) ++s.fp;
    else if (truth[i] && !predicted[i]) ++s.fn;
    else ++s.tn;
  }
  if (s.tp > 0) {
    s.precision = static_cast<double>(s.tp) / static_cast<double>(s.tp + s.fp);
    s.recall = static_cast<double>(s.tp) / static_cast<double>(s.tp + s.fn);
    s.f1 = 2.0 * static_cast<double>(s.tp) / static_cast<double>(2 * s.tp + s.fp + s.fn);
  }
  return s;
}

BinaryScore category_f1(const CategoryExplanation& explanation, const LabeledDataset& data) {
  const auto truth = data.one_vs_rest(explanation.category);
  std::vector<bool> predicted(data.dataset.size());
  for (std::size_t i = 0; i < predicted.size(); ++i) predicted[i] = explanation.contains(data.dataset.row(i));
  return score_binary(truth, predicted);
}

double macro_f1(std::span<const double> f1_values) {
  if (f1_values.empty()) return 0.0;
  return std::accumulate(f1_values.begin(), f1_values.end(), 0.0) / static_cast<double>(f1_values.size());
}

PuritySummary summarize_purities(std::size_t r, std::vector<double> purities) {
  PuritySummary s;
  s.r = r;
  s.clusters = purities.size();
  if (purities.empty()) return s;
  std::sort(purities.begin(), purities.end());
  const std::size_t n = purities.size();
  s.median = n % 2 ? purities[n / 2] : 0.5 * (purities[n / 2 - 1] + purities[n / 2]);
  s.mean = std::accumulate(purities.begin(), purities.end(), 0.0) / static_cast<double>(n);
  s.min = purities.front();
  return s;
}

std::vector<PuritySummary> purity_summary(const std::map<std::size_t, std::vector<Clustering>>& by_r) {
  std::vector<PuritySummary> rows;
  for (const auto& [r, clusterings] : by_r) {
    std::vector<double> purities;
    for (const auto& clustering : clusterings) {
      for (const auto& c : clustering.clusters) {
        if (c.size > 0) purities.push_back(c.purity);
      }
    }
    rows.push_back(summarize_purities(r, std::move(purities)));
  }
  return rows;
}

FidelityReport fidelity_report(const std::vector<CategoryExplanation>& explanations,
                               const LabeledDataset& data, std::string split,
                               std::string model_descriptor) {
  FidelityReport report;
  report.split = std::move(split);
  report.model_descriptor = std::move(model_descriptor);
  std::vector<double> f1s;
  for (const auto& e : explanations) {
    CategoryFidelity row;
    row.category = e.category;
    row.name = e.name;
    row.score = category_f1(e, data);
    row.rectangle_count = e.rectangles.size();
    row.constraint_count = e.constraint_count();
    f1s.push_back(row.score.f1);
    report.per_category.push_back(std::move(row));
  }
  report.macro_f1 = macro_f1(f1s);
  return report;
}

namespace {

const CategoryFidelity* find_category(const FidelityReport& report, int category) {
  for (const auto& row : report.per_category) {
    if (row.category == category) return &row;
  }
  return nullptr;
}

std::string join_indices(const std::vector<std::size_t>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + std::to_string(values[i]);
  return out;
}

std::string join_reals(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + format_real(values[i]);
  return out;
}

void write_score(std::ostream& out, const std::string& split, const BinaryScore& s) {
  out << "score\t" << split << '\t' << format_metric(s.precision) << '\t' << format_metric(s.recall) << '\t'
      << format_metric(s.f1) << '\t' << s.tp << '\t' << s.fp << '\t' << s.fn << '\t' << s.tn << '\n';
}

std::string render_structured(const RunReport& report) {
  std::ostringstream out;
  out << "rectx-report\t" << kReportVersion << '\n';
  out << "dataset\t" << report.dataset_descriptor << '\n';
  out << "model\t" << report.model_descriptor << '\n';
  out << "accuracy\t" << (report.model_accuracy ? format_metric(*report.model_accuracy) : "none") << '\n';
  for (const auto& [key, value] : report.hyperparameters) out << "param\t" << key << '\t' << value << '\n';
  for (std::size_t j = 0; j < report.attribute_names.size(); ++j) {
    out << "attribute\t" << j << '\t' << report.attribute_names[j] << '\n';
  }
  for (const auto& e : report.explanations) {
    out << "category\t" << e.category << '\t' << e.name << '\t' << (e.unexplained ? "unexplained" : "explained") << '\n';
    out << "search\tr=" << e.params.r << "\ttheta_w=" << format_real(e.params.theta_w) << "\tk_theta="
        << e.params.k_theta << "\tr_max=" << e.params.r_max << "\trestarts=" << e.params.kmeans_restarts
        << "\tseed=" << e.params.seed << '\n';
    if (const auto* row = find_category(report.train, e.category)) write_score(out, "train", row->score);
    if (report.test) {
      if (const auto* row = find_category(*report.test, e.category)) write_score(out, "test", row->score);
    }
    for (const auto& rule : e.rectangles) {
      out << "rectangle\tcluster=" << rule.cluster << "\tmembers=" << rule.members << "\tbases="
          << join_indices(rule.bases) << "\tweights=" << join_reals(rule.weights) << '\n';
      for (const auto& [attribute, interval] : rule.rectangle.constraints()) {
        const std::string& name = report.attribute_names.at(attribute);
        if (interval.has_lower()) out << "constraint\t" << name << "\t>\t" << format_real(interval.lower) << '\n';
        if (interval.has_upper()) out << "constraint\t" << name << "\t<=\t" << format_real(interval.upper) << '\n';
      }
    }
    out << "end\n";
  }
  out << "macro_f1\ttrain\t" << format_metric(report.train.macro_f1) << '\n';
  if (report.test) out << "macro_f1\ttest\t" << format_metric(report.test->macro_f1) << '\n';
  return out.str();
}

std::string render_text(const RunReport& report) {
  std::ostringstream out;
  out << "Model explanation report\n";
  out << "  dataset: " << report.dataset_descriptor << '\n';
  out << "  model:   " << report.model_descriptor;
  if (report.model_accuracy) out << "  (test accuracy " << format_metric(*report.model_accuracy) << ")";
  out << "\n\n";
  for (const auto& e : report.explanations) {
    out << "Category " << e.category << " (" << e.name << ")";
    const auto* train = find_category(report.train, e.category);
    const CategoryFidelity* test = report.test ? find_category(*report.test, e.category) : nullptr;
    if (test) out << "  F1 test " << format_metric(test->score.f1);
    if (train) out << "  F1 train " << format_metric(train->score.f1);
    out << '\n';
    if (e.rectangles.empty()) {
      out << "    no rule extracted\n";
      continue;
    }
    for (std::size_t i = 0; i < e.rectangles.size(); ++i) {
      const std::string body = describe_rectangle(e.rectangles[i].rectangle, report.attribute_names);
      if (e.rectangles.size() == 1) {
        out << "    " << body << '\n';
      } else {
        out << (i ? "    or (" : "    (") << body << ")\n";
      }
    }
  }
  out << '\n';
  out << "Macro F1:";
  if (report.test) out << " test " << format_metric(report.test->macro_f1);
  out << " train " << format_metric(report.train.macro_f1) << '\n';
  return out.str();
}

std::string value_after(const std::string& field, const std::string& key) {
  if (field.rfind(key + "=", 0) != 0) throw FormatError("expected field '" + key + "=' but found '" + field + "'");
  return field.substr(key.size() + 1);
}

std::size_t to_size(const std::string& text) {
  const auto v = parse_unsigned(text);
  if (!v) throw FormatError("expected a nonnegative integer, found '" + text + "'");
  return static_cast<std::size_t>(*v);
}

double to_real(const std::string& text) {
  const auto v = parse_real(text);
  if (!v) throw FormatError("expected a real, found '" + text + "'");
  return *v;
}

}  // namespace

std::string render_report(const RunReport& report, ReportFormat format) {
  return format == ReportFormat::structured ? render_structured(report) : render_text(report);
}

RunReport parse_structured_report(std::istream& in) {
  RunReport report;
  report.train.split = "train";
  std::string line;
  std::size_t line_number = 0;
  CategoryExplanation* current = nullptr;
  bool saw_header = false;
  auto score_target = [&](const std::string& split) -> FidelityReport& {
    if (split == "train") return report.train;
    if (!report.test) {
      report.test.emplace();
      report.test->split = "test";
    }
    return *report.test;
  };

  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    const auto f = split(line, '\t');
    const std::string& tag = f[0];
    auto need = [&](std::size_t n) {
      if (f.size() < n) throw ParseError("too few fields for '" + tag + "'", line_number, f.size());
    };
    if (!saw_header) {
      if (tag != "rectx-report" || f.size() != 2 || f[1] != std::to_string(kReportVersion)) {
        throw FormatError("not a version " + std::to_string(kReportVersion) + " structured report");
      }
      saw_header = true;
    } else if (tag == "dataset") {
      need(2);
      report.dataset_descriptor = f[1];
    } else if (tag == "model") {
      need(2);
      report.model_descriptor = f[1];
      report.train.model_descriptor = f[1];
    } else if (tag == "accuracy") {
      need(2);
      if (f[1] != "none") report.model_accuracy = to_real(f[1]);
    } else if (tag == "param") {
      need(3);
      report.hyperparameters.emplace_back(f[1], f[2]);
    } else if (tag == "attribute") {
      need(3);
      if (to_size(f[1]) != report.attribute_names.size()) throw ParseError("attribute out of order", line_number, 2);
      report.attribute_names.push_back(f[2]);
    } else if (tag == "category") {
      need(4);
      report.explanations.emplace_back();
      current = &report.explanations.back();
      current->category = static_cast<int>(to_size(f[1]));
      current->name = f[2];
      current->unexplained = f[3] == "unexplained";
    } else if (tag == "search") {
      need(7);
      if (!current) throw ParseError("search outside a category", line_number, 1);
      current->params.r = to_size(value_after(f[1], "r"));
      current->params.theta_w = to_real(value_after(f[2], "theta_w"));
      current->params.k_theta = to_size(value_after(f[3], "k_theta"));
      current->params.r_max = to_size(value_after(f[4], "r_max"));
      current->params.kmeans_restarts = to_size(value_after(f[5], "restarts"));
      current->params.seed = static_cast<std::uint64_t>(to_size(value_after(f[6], "seed")));
    } else if (tag == "score") {
      need(9);
      if (!current) throw ParseError("score outside a category", line_number, 1);
      CategoryFidelity row;
      row.category = current->category;
      row.name = current->name;
      row.score = {to_real(f[2]), to_real(f[3]), to_real(f[4]), to_size(f[5]), to_size(f[6]), to_size(f[7]), to_size(f[8])};
      score_target(f[1]).per_category.push_back(std::move(row));
    } else if (tag == "rectangle") {
      need(5);
      if (!current) throw ParseError("rectangle outside a category", line_number, 1);
      RuleRectangle rule;
      rule.cluster = to_size(value_after(f[1], "cluster"));
      rule.members = to_size(value_after(f[2], "members"));
      for (const auto& b : split(value_after(f[3], "bases"), ',')) {
        if (!b.empty()) rule.bases.push_back(to_size(b));
      }
      for (const auto& w : split(value_after(f[4], "weights"), ',')) {
        if (!w.empty()) rule.weights.push_back(to_real(w));
      }
      current->rectangles.push_back(std::move(rule));
    } else if (tag == "constraint") {
      need(4);
      if (!current || current->rectangles.empty()) throw ParseError("constraint outside a rectangle", line_number, 1);
      const auto it = std::find(report.attribute_names.begin(), report.attribute_names.end(), f[1]);
      if (it == report.attribute_names.end()) throw ParseError("unknown attribute '" + f[1] + "'", line_number, 2);
      const auto attribute = static_cast<std::size_t>(it - report.attribute_names.begin());
      const double bound = to_real(f[3]);
      Interval interval;
      if (f[2] == "<=") interval.upper = bound;
      else if (f[2] == ">") interval.lower = bound;
      else throw ParseError("unknown operator '" + f[2] + "'", line_number, 3);
      current->rectangles.back().rectangle.constrain(attribute, interval);
    } else if (tag == "end") {
      current = nullptr;
    } else if (tag == "macro_f1") {
      need(3);
      score_target(f[1]).macro_f1 = to_real(f[2]);
    } else {
      throw ParseError("unknown record '" + tag + "'", line_number, 1);
    }
  }
  if (!saw_header) throw FormatError("empty report");
  for (auto& e : report.explanations) {
    for (auto& row : report.train.per_category) {
      if (row.category == e.category) {
        row.rectangle_count = e.rectangles.size();
        row.constraint_count = e.constraint_count();
      }
    }
  }
  return report;
}

}  // namespace rectx
