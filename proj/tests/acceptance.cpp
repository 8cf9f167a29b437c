// Acceptance checks. `rectx_acceptance <n>` runs criterion n (1..7), or all
// of them without an argument, printing one PASS/FAIL line per criterion.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rectx/errors.hpp"
#include "rectx/evaluation.hpp"
#include "rectx/factorization.hpp"
#include "rectx/pipeline.hpp"
#include "rectx/text_io.hpp"

namespace {

using namespace rectx;

// Pinned tolerances.
constexpr double kWineAccuracy = 0.95;
constexpr double kWineMacroF1 = 0.82;
constexpr double kWineSeconds = 300.0;
constexpr double kDermatologyAccuracy = 0.93;
constexpr double kDermatologyMacroF1 = 0.65;
constexpr double kDermatologySeconds = 900.0;
constexpr double kSetosaF1 = 0.95;
constexpr double kPurityMedian = 0.95;
constexpr double kPurityMean = 0.90;
constexpr int kPuritySeeds = 5;
constexpr double kPlantedF1 = 0.9;
constexpr int kPlantedSeeds = 3;
constexpr int kSweepSeeds = 3;
constexpr double kRankOneRelative = 1e-6;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string recipe(const std::string& name) { return std::string(RECTX_RECIPE_DIR) + "/" + name; }

std::string fixed(double v, int digits = 3) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(digits);
  out << v;
  return out.str();
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

const CategoryFidelity* find_row(const FidelityReport& report, const std::string& name) {
  for (const auto& row : report.per_category) {
    if (row.name == name) return &row;
  }
  return nullptr;
}

Outcome reproduction(const std::string& recipe_name, double min_accuracy, double min_f1, double max_seconds) {
  const auto start = std::chrono::steady_clock::now();
  const RunConfig config = load_config(recipe(recipe_name));
  const ExtractionRun run = run_extract(config);
  const double elapsed = seconds_since(start);
  const double accuracy = run.report.model_accuracy.value_or(0.0);
  const double f1 = run.report.test->macro_f1;
  Outcome o;
  o.pass = accuracy >= min_accuracy && f1 >= min_f1 && elapsed <= max_seconds;
  o.detail = "accuracy " + fixed(accuracy) + " (>= " + fixed(min_accuracy, 2) + "), test macro F1 " + fixed(f1) +
             " (>= " + fixed(min_f1, 2) + "), " + fixed(elapsed, 1) + " s (<= " + fixed(max_seconds, 0) + ")";
  return o;
}

bool dermatology_available(Outcome& o) {
  const RunConfig config = load_config(recipe("dermatology.conf"));
  if (std::filesystem::exists(config.dataset)) return true;
  o.pass = false;
  o.detail = "dataset unavailable: " + config.dataset + " is missing (fetch and convert it with scripts/convert_dermatology.py)";
  return false;
}

Outcome criterion_wine() { return reproduction("wine.conf", kWineAccuracy, kWineMacroF1, kWineSeconds); }

Outcome criterion_dermatology() {
  Outcome o;
  if (!dermatology_available(o)) return o;
  return reproduction("dermatology.conf", kDermatologyAccuracy, kDermatologyMacroF1, kDermatologySeconds);
}

Outcome criterion_iris() {
  const RunConfig config = load_config(recipe("iris.conf"));
  PreparedRun prepared = prepare_run(config);
  const auto matrices = compute_contributions(prepared, config);
  const ExtractionRun run = extract_all(prepared, matrices, config, config.rank);
  Outcome o;

  // the model's setosa is separable by a hand-written threshold
  const auto& test = prepared.labeled_test;
  int setosa = 0;
  for (std::size_t c = 0; c < test.category_names.size(); ++c) {
    if (test.category_names[c] == "setosa") setosa = static_cast<int>(c + 1);
  }
  std::vector<bool> truth, hand;
  for (std::size_t i = 0; i < test.dataset.size(); ++i) {
    truth.push_back(test.model_labels[i] == setosa);
    hand.push_back(test.dataset.at(i, 2) <= 2.5);
  }
  const double hand_f1 = score_binary(truth, hand).f1;

  const CategoryExplanation* rules = nullptr;
  for (const auto& e : run.report.explanations) {
    if (e.name == "setosa") rules = &e;
  }
  bool petal_upper = false;
  std::string text = "no rule";
  if (rules && !rules->unexplained) {
    text.clear();
    for (const auto& r : rules->rectangles) {
      for (const auto& [attribute, interval] : r.rectangle.constraints()) {
        const auto& name = prepared.train.attribute_names()[attribute];
        if ((name == "petal length" || name == "petal width") && interval.has_upper()) petal_upper = true;
      }
      text += (text.empty() ? "" : " or ") + describe_rectangle(r.rectangle, prepared.train.attribute_names());
    }
  }
  const CategoryFidelity* row = find_row(*run.report.test, "setosa");
  const double f1 = row ? row->score.f1 : 0.0;
  o.pass = setosa != 0 && hand_f1 == 1.0 && petal_upper && f1 >= kSetosaF1;
  o.detail = "setosa rules [" + text + "], test F1 " + fixed(f1) + " (>= " + fixed(kSetosaF1, 2) +
             "), petal upper bound " + (petal_upper ? "yes" : "no") + ", hand rule F1 " + fixed(hand_f1);
  return o;
}

Outcome criterion_purity() {
  const std::vector<std::size_t> rs{2, 3, 4, 5, 6, 7};
  Outcome o;
  o.pass = true;
  for (const char* name : {"wine.conf", "iris.conf"}) {
    std::map<std::size_t, std::vector<double>> pooled;
    for (int seed = 0; seed < kPuritySeeds; ++seed) {
      RunConfig config = load_config(recipe(name));
      config.reseed(static_cast<std::uint64_t>(seed));
      PreparedRun prepared = prepare_run(config);
      const auto matrices = compute_contributions(prepared, config);
      for (const auto& phi : matrices) {
        const int c = phi.target_category;
        const Factorization f =
            nmf(stack_nonnegative(phi), {config.rank, config.nmf_max_iters, config.nmf_tolerance,
                                         derive_seed(config.nmf_seed, static_cast<std::uint64_t>(c))});
        for (std::size_t r : rs) {
          const auto seed_r = clustering_seed(derive_seed(config.search_seed, static_cast<std::uint64_t>(c)), r);
          const Clustering clustering = cluster_embeddings(f.H, phi.labels, r, {config.kmeans_restarts, 300, seed_r});
          for (const auto& s : clustering.clusters) {
            if (s.size > 0) pooled[r].push_back(s.purity);
          }
        }
      }
    }
    o.detail += std::string(o.detail.empty() ? "" : "; ") + name + ":";
    for (std::size_t r : rs) {
      const PuritySummary s = summarize_purities(r, pooled[r]);
      const bool ok = s.median >= kPurityMedian && s.mean >= kPurityMean;
      o.pass = o.pass && ok;
      o.detail += " r=" + std::to_string(r) + " " + fixed(s.median) + "/" + fixed(s.mean) + (ok ? "" : "*");
    }
  }
  o.detail += " (median/mean per r; needs >= " + fixed(kPurityMedian, 2) + "/" + fixed(kPurityMean, 2) +
              ", * marks a miss)";
  return o;
}

Outcome criterion_ksweep() {
  Outcome o;
  if (!dermatology_available(o)) return o;
  double at2 = 0.0, at10 = 0.0;
  for (int seed = 0; seed < kSweepSeeds; ++seed) {
    RunConfig config = load_config(recipe("dermatology.conf"));
    config.reseed(static_cast<std::uint64_t>(seed));
    const auto rows = run_ksweep(config, {2, 10});
    if (!rows[0].ok || !rows[1].ok) {
      o.detail = "sweep failed: " + rows[0].error + rows[1].error;
      return o;
    }
    at2 += rows[0].test_macro_f1 / kSweepSeeds;
    at10 += rows[1].test_macro_f1 / kSweepSeeds;
  }
  o.pass = at10 > at2;
  o.detail = "seed-averaged test macro F1 k=2 " + fixed(at2) + ", k=10 " + fixed(at10);
  return o;
}

// Bounds of the discretization bin holding t: the nearest cut points on
// either side (infinite when t lies outside every cut).
bool within_one_bin(const std::vector<double>& cuts, double t, double bound) {
  const auto above = std::lower_bound(cuts.begin(), cuts.end(), t);
  const double hi = above == cuts.end() ? INFINITY : *above;
  const double lo = above == cuts.begin() ? -INFINITY : *(above - 1);
  return bound == lo || bound == hi;
}

Outcome criterion_planted() {
  // the generator's rule: 0.4 < x1 and x2 <= 0.6
  constexpr double kT1 = 0.4, kT2 = 0.6;
  Outcome o;
  o.pass = true;
  for (int seed = 0; seed < kPlantedSeeds; ++seed) {
    RunConfig config = load_config(recipe("planted.conf"));
    if (seed > 0) config.reseed(static_cast<std::uint64_t>(seed));
    PreparedRun prepared = prepare_run(config);
    const auto matrices = compute_contributions(prepared, config);
    const ExtractionRun run = extract_all(prepared, matrices, config, config.rank);
    const CategoryExplanation* rules = nullptr;
    for (const auto& e : run.report.explanations) {
      if (e.name == "planted") rules = &e;
    }
    const CategoryFidelity* row = find_row(*run.report.test, "planted");
    const double f1 = row ? row->score.f1 : 0.0;
    bool shape = false;
    std::string top = "none";
    if (rules && !rules->rectangles.empty()) {
      const Rectangle& r = rules->rectangles.front().rectangle;
      top = describe_rectangle(r, prepared.train.attribute_names());
      const auto& c = r.constraints();
      std::set<std::size_t> attributes;
      for (const auto& [a, interval] : c) attributes.insert(a);
      if (attributes == std::set<std::size_t>{0, 1}) {
        const Interval x1 = c.at(0), x2 = c.at(1);
        shape = x1.has_lower() && !x1.has_upper() && x2.has_upper() && !x2.has_lower() &&
                within_one_bin(prepared.catalog->cut_points(0), kT1, x1.lower) &&
                within_one_bin(prepared.catalog->cut_points(1), kT2, x2.upper);
      }
    }
    const bool ok = f1 >= kPlantedF1 && shape;
    o.pass = o.pass && ok;
    o.detail += std::string(o.detail.empty() ? "" : "; ") + "seed " + std::to_string(seed) + ": [" + top +
                "] F1 " + fixed(f1) + (ok ? "" : " (miss)");
  }
  o.detail += " (needs F1 >= " + fixed(kPlantedF1, 2) + " and top rectangle on x1, x2 within one bin of 0.4, 0.6)";
  return o;
}

// ---------------------------------------------------------------------------
// Property suite

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& gen, double low, double high) {
  std::uniform_real_distribution<double> dist(low, high);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(gen);
  return m;
}

bool property_monotone_and_split(std::string& note) {
  std::mt19937_64 gen(2024);
  std::size_t runs = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const Eigen::MatrixXd phi = random_matrix(2 + trial % 7, 10 + trial, gen, -1.0, 1.0);
    const StackedMatrix s = stack_nonnegative(phi);
    if (s.reconstruct() != phi) {
      note = "sign split not exact";
      return false;
    }
    NmfOptions options;
    options.rank = 1 + static_cast<std::size_t>(trial) % static_cast<std::size_t>(2 * phi.rows());
    options.seed = static_cast<std::uint64_t>(trial);
    if (!nmf(s, options).objective_monotone()) {
      note = "objective increased on random trial " + std::to_string(trial);
      return false;
    }
    ++runs;
  }
  // every factorization of a real run
  const RunConfig config = load_config(recipe("wine.conf"));
  PreparedRun prepared = prepare_run(config);
  const auto matrices = compute_contributions(prepared, config);
  for (const auto& phi : matrices) {
    if (stack_nonnegative(phi).reconstruct() != phi.values) {
      note = "sign split not exact on wine";
      return false;
    }
  }
  const ExtractionRun run = extract_all(prepared, matrices, config, config.rank);
  for (const auto& c : run.categories) {
    if (!c.factorization.objective_monotone()) {
      note = "objective increased on wine";
      return false;
    }
    ++runs;
  }
  note = std::to_string(runs) + " factorizations monotone, sign split exact";
  return true;
}

bool property_rank_one(std::string& note) {
  std::mt19937_64 gen(7);
  double worst = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::VectorXd u = random_matrix(8, 1, gen, 0.1, 2.0);
    const Eigen::VectorXd v = random_matrix(15, 1, gen, 0.1, 2.0);
    const Eigen::MatrixXd target = u * v.transpose();
    NmfOptions options;
    options.rank = 1;
    options.max_iters = 5000;
    options.tolerance = 1e-15;
    options.seed = static_cast<std::uint64_t>(trial);
    const Factorization f = nmf(StackedMatrix{target, 4}, options);
    worst = std::max(worst, f.final_objective / target.norm());
  }
  note = "rank-1 worst relative objective " + format_real(worst);
  return worst < kRankOneRelative;
}

bool property_boundaries(std::string& note) {
  Rectangle r;
  r.constrain(0, Interval{1.5, 3.0});
  r.constrain(1, Interval{-INFINITY, 0.0});
  const bool ok = r.contains(std::vector<double>{3.0, 0.0}) && !r.contains(std::vector<double>{1.5, 0.0}) &&
                  r.contains(std::vector<double>{std::nextafter(1.5, 2.0), -5.0}) &&
                  !r.contains(std::vector<double>{std::nextafter(3.0, 4.0), 0.0}) &&
                  !r.contains(std::vector<double>{2.0, std::nextafter(0.0, 1.0)}) &&
                  Rectangle::whole_space().contains(std::vector<double>{1e308, -1e308});
  note = "(a, b] semantics on boundary points";
  return ok;
}

bool property_brute_force_f1(std::string& note) {
  std::mt19937_64 gen(99);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + gen() % 20;
    std::vector<double> values;
    for (std::size_t i = 0; i < 2 * n; ++i) values.push_back(static_cast<double>(gen() % 10));
    const Dataset data({"a", "b"}, values);
    LabeledDataset labeled{data, {}, {"t", "o"}};
    CategoryExplanation e;
    e.category = 1;
    e.unexplained = false;
    for (int k = 0; k < 2; ++k) {
      RuleRectangle rule;
      const double lo = static_cast<double>(gen() % 10) - 1.0;
      rule.rectangle.constrain(gen() % 2, Interval{lo, lo + 1.0 + static_cast<double>(gen() % 6)});
      e.rectangles.push_back(rule);
    }
    int tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const bool truth = gen() % 2 == 0;
      labeled.model_labels.push_back(truth ? 1 : 2);
      bool inside = false;
      for (const auto& rule : e.rectangles) {
        bool all = true;
        for (const auto& [a, iv] : rule.rectangle.constraints()) {
          const double x = data.at(i, a);
          all = all && iv.lower < x && x <= iv.upper;
        }
        inside = inside || all;
      }
      tp += truth && inside;
      fp += !truth && inside;
      fn += truth && !inside;
    }
    const double expected = tp == 0 ? 0.0 : 2.0 * tp / (2.0 * tp + fp + fn);
    if (std::abs(category_f1(e, labeled).f1 - expected) > 1e-15) {
      note = "F1 mismatch on trial " + std::to_string(trial);
      return false;
    }
  }
  note = "300 datasets of <= 20 instances";
  return true;
}

bool property_loopback(std::string& note) {
  RunConfig config = load_config(recipe("iris.conf"));
  config.forest.num_trees = 50;
  config.perturbation.num_samples = 300;
  const auto dir = std::filesystem::temp_directory_path() / "rectx-acceptance-loopback";
  std::filesystem::create_directories(dir);
  const auto conf = (dir / "forest.conf").string();
  {
    std::ofstream out(conf);
    write_config(out, config);
  }
  RunConfig remote = config;
  remote.model = "oracle";
  remote.oracle_command = std::string(RECTX_FOREST_ORACLE) + " " + conf;
  remote.oracle_categories = 3;
  PreparedRun local = prepare_run(config);
  PreparedRun via_oracle = prepare_run(remote);
  const auto a = compute_contributions(local, config);
  const auto b = compute_contributions(via_oracle, remote);
  std::filesystem::remove_all(dir);
  bool same = local.labeled_train.model_labels == via_oracle.labeled_train.model_labels &&
              local.labeled_test.model_labels == via_oracle.labeled_test.model_labels;
  for (std::size_t c = 0; c < a.size(); ++c) same = same && a[c].values == b[c].values;
  note = "oracle-served forest reproduces labels and contributions";
  return same;
}

bool property_byte_identical(std::string& note) {
  RunConfig config = load_config(recipe("iris.conf"));
  const std::string a = render_report(run_extract(config).report, ReportFormat::structured);
  const std::string b = render_report(run_extract(config).report, ReportFormat::structured);
  note = "structured report " + std::to_string(a.size()) + " bytes, repeated run identical";
  return a == b;
}

Outcome criterion_properties() {
  const std::vector<std::pair<std::string, std::function<bool(std::string&)>>> checks{
      {"nmf-monotone+sign-split", property_monotone_and_split},
      {"rank-one", property_rank_one},
      {"boundaries", property_boundaries},
      {"brute-force-f1", property_brute_force_f1},
      {"oracle-loopback", property_loopback},
      {"byte-identical", property_byte_identical}};
  Outcome o;
  o.pass = true;
  for (const auto& [name, check] : checks) {
    std::string note;
    bool ok = false;
    try {
      ok = check(note);
    } catch (const std::exception& e) {
      note = std::string("threw: ") + e.what();
    }
    o.pass = o.pass && ok;
    o.detail += std::string(o.detail.empty() ? "" : "; ") + name + (ok ? " ok" : " FAILED") + " (" + note + ")";
  }
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"wine reproduction", criterion_wine},
      {"dermatology reproduction", criterion_dermatology},
      {"iris setosa rule", criterion_iris},
      {"cluster purity", criterion_purity},
      {"dermatology k-sweep", criterion_ksweep},
      {"planted-rule recovery", criterion_planted},
      {"property suites", criterion_properties}};
  std::vector<int> selected;
  if (argc > 1) {
    const auto n = parse_integer(argv[1]);
    if (!n || *n < 1 || *n > static_cast<long long>(criteria.size())) {
      std::cerr << "usage: rectx_acceptance [1-" << criteria.size() << "]\n";
      return 2;
    }
    selected.push_back(static_cast<int>(*n));
  } else {
    for (std::size_t i = 1; i <= criteria.size(); ++i) selected.push_back(static_cast<int>(i));
  }
  int failures = 0;
  for (int n : selected) {
    const auto& [name, run] = criteria[static_cast<std::size_t>(n - 1)];
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o.detail = std::string("error: ") + e.what();
    }
    failures += !o.pass;
    std::cout << "criterion " << n << " " << (o.pass ? "PASS" : "FAIL") << " " << name << ": " << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
