// Command-line front end: extract, ksweep, purity, train-model, explain-dump,
// render.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include "rectx/errors.hpp"
#include "rectx/pipeline.hpp"
#include "rectx/text_io.hpp"

namespace {

struct ConfigFlags {
  std::string config_path;
  std::map<std::string, std::string> overrides;

  void attach(CLI::App* app) {
    app->add_option("-c,--config", config_path, "Run configuration file")->check(CLI::ExistingFile);
    for (const auto& key : rectx::RunConfig::keys()) {
      app->add_option_function<std::string>(
          "--" + key, [this, key](const std::string& v) { overrides[key] = v; }, "Overrides '" + key + "'");
    }
  }

  rectx::RunConfig resolve() const {
    rectx::RunConfig config;
    if (!config_path.empty()) config = rectx::load_config(config_path);
    for (const auto& [key, value] : overrides) config.set(key, value);
    config.validate();
    return config;
  }
};

std::vector<std::size_t> parse_list(const std::string& text) {
  std::vector<std::size_t> values;
  for (const auto& part : rectx::split(text, ',')) {
    const auto v = rectx::parse_integer(part);
    if (!v || *v < 0) throw rectx::ConfigError("bad list entry '" + part + "'");
    values.push_back(static_cast<std::size_t>(*v));
  }
  return values;
}

int cmd_extract(const rectx::RunConfig& config) {
  rectx::PreparedRun run = rectx::prepare_run(config);
  rectx::validate_rank(config.rank, run.catalog->size(), run.train.size());
  const auto matrices = rectx::compute_contributions(run, config);
  const auto result = rectx::extract_all(run, matrices, config, config.rank);
  rectx::write_outputs(result, run, matrices, config);
  std::cout << rectx::render_report(result.report, rectx::ReportFormat::text);
  std::cout << "wrote " << config.output_dir << "/report.txt and report.tsv\n";
  return 0;
}

int cmd_ksweep(const rectx::RunConfig& config, const std::vector<std::size_t>& ks) {
  const auto rows = rectx::run_ksweep(config, ks);
  std::cout << "k\tstatus\ttest_macro_f1\ttrain_macro_f1\n";
  for (const auto& row : rows) {
    if (row.ok) {
      std::cout << row.k << "\tok\t" << rectx::format_metric(row.test_macro_f1) << '\t'
                << rectx::format_metric(row.train_macro_f1) << '\n';
    } else {
      std::cout << row.k << "\tfailed\t-\t-\t# " << row.error << '\n';
    }
  }
  return 0;
}

int cmd_purity(const rectx::RunConfig& config, const std::vector<std::size_t>& rs) {
  const auto rows = rectx::run_purity(config, rs);
  std::cout << "r\tclusters\tmedian\tmean\tmin\n";
  for (const auto& row : rows) {
    std::cout << row.r << '\t' << row.clusters << '\t' << rectx::format_metric(row.median) << '\t'
              << rectx::format_metric(row.mean) << '\t' << rectx::format_metric(row.min) << '\n';
  }
  return 0;
}

int cmd_train_model(const rectx::RunConfig& config) {
  const rectx::PreparedRun run = rectx::prepare_run(config);
  std::cout << run.model->descriptor() << '\n';
  if (run.test_accuracy) std::cout << "test accuracy " << rectx::format_metric(*run.test_accuracy) << '\n';
  // The forest is reproduced by replaying its configuration.
  std::filesystem::create_directories(config.output_dir);
  const auto path = std::filesystem::path(config.output_dir) / "model.conf";
  std::ofstream out(path, std::ios::binary);
  rectx::write_config(out, config);
  std::cout << "wrote replay record " << path.string() << '\n';
  return 0;
}

int cmd_explain_dump(rectx::RunConfig config) {
  rectx::PreparedRun run = rectx::prepare_run(config);
  config.contributions_dir.clear();
  const auto matrices = rectx::compute_contributions(run, config);
  rectx::dump_contributions(matrices, config.output_dir);
  std::ofstream catalog(std::filesystem::path(config.output_dir) / "catalog.csv", std::ios::binary);
  rectx::write_catalog(catalog, *run.catalog);
  std::cout << "wrote " << matrices.size() << " contribution matrices (" << run.catalog->size() << " x "
            << run.train.size() << ") to " << config.output_dir << '\n';
  return 0;
}

int cmd_render(const std::string& input, const std::string& format) {
  std::ifstream in(input);
  if (!in) throw rectx::FormatError("cannot open '" + input + "'");
  const auto report = rectx::parse_structured_report(in);
  std::cout << rectx::render_report(report, format == "structured" ? rectx::ReportFormat::structured
                                                                    : rectx::ReportFormat::text);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rule-like explanations of black-box tabular classifiers"};
  app.require_subcommand(1);

  ConfigFlags extract_flags, ksweep_flags, purity_flags, train_flags, dump_flags;
  auto* extract = app.add_subcommand("extract", "Extract rule sets for every category and evaluate them");
  extract_flags.attach(extract);

  auto* ksweep = app.add_subcommand("ksweep", "Macro F1 as a function of the NMF rank");
  ksweep_flags.attach(ksweep);
  std::string k_values = "2,4,6,8,10";
  ksweep->add_option("--k-values", k_values, "Comma-separated ranks");

  auto* purity = app.add_subcommand("purity", "Purity of clustered embedded explanations per r");
  purity_flags.attach(purity);
  std::string r_values = "2,3,4,5,6,7";
  purity->add_option("--r-values", r_values, "Comma-separated cluster counts");

  auto* train = app.add_subcommand("train-model", "Train the built-in forest and write its replay record");
  train_flags.attach(train);

  auto* dump = app.add_subcommand("explain-dump", "Write contribution matrices and the feature catalog");
  dump_flags.attach(dump);

  auto* render = app.add_subcommand("render", "Render a structured report");
  std::string input;
  std::string format = "text";
  render->add_option("input", input, "Structured report (report.tsv)")->required();
  render->add_option("--format", format, "text or structured")->check(CLI::IsMember({"text", "structured"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*extract) return cmd_extract(extract_flags.resolve());
    if (*ksweep) return cmd_ksweep(ksweep_flags.resolve(), parse_list(k_values));
    if (*purity) return cmd_purity(purity_flags.resolve(), parse_list(r_values));
    if (*train) return cmd_train_model(train_flags.resolve());
    if (*dump) return cmd_explain_dump(dump_flags.resolve());
    if (*render) return cmd_render(input, format);
  } catch (const rectx::Error& e) {
    std::cerr << "error [" << app.get_subcommands().front()->get_name() << "]: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
