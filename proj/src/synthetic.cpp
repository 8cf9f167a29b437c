#include "rectx/synthetic.hpp"

#include <limits>
#include <string>

#include "rectx/errors.hpp"
#include "rectx/rng.hpp"

namespace rectx {

PlantedSpec default_planted_spec() {
  PlantedSpec spec;
  spec.rule.constrain(0, Interval{0.4, std::numeric_limits<double>::infinity()});
  spec.rule.constrain(1, Interval{-std::numeric_limits<double>::infinity(), 0.6});
  return spec;
}

Dataset planted_dataset(const PlantedSpec& spec) {
  if (spec.rows == 0 || spec.attributes == 0) throw EmptyDataset("planted dataset needs rows and attributes");
  for (const auto& [attribute, interval] : spec.rule.constraints()) {
    if (attribute >= spec.attributes) throw IndexOutOfRange("planted rule names attribute " + std::to_string(attribute + 1));
  }
  std::vector<std::string> names;
  for (std::size_t j = 0; j < spec.attributes; ++j) names.push_back("x" + std::to_string(j + 1));

  Rng rng(spec.seed);
  std::vector<double> values(spec.rows * spec.attributes);
  std::vector<int> labels(spec.rows);
  for (std::size_t i = 0; i < spec.rows; ++i) {
    const auto first = values.begin() + static_cast<std::ptrdiff_t>(i * spec.attributes);
    for (std::size_t j = 0; j < spec.attributes; ++j) {
      // two decimals keep the csv readable and leave ties for the quantile rule
      first[static_cast<std::ptrdiff_t>(j)] = static_cast<double>(rng.index(100)) / 100.0;
    }
    labels[i] = spec.rule.contains({&*first, spec.attributes}) ? 1 : 2;
  }
  return Dataset(std::move(names), std::move(values), std::move(labels), {"planted", "other"});
}

}  // namespace rectx
