#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "rectx/rule_extractor.hpp"
#include "rectx/tabular_data.hpp"

namespace rectx {

// Attributes drawn uniformly from [0, 1); category 1 ("planted") is the set of
// rows inside `rule`, category 2 ("other") everything else.
struct PlantedSpec {
  std::size_t rows = 600;
  std::size_t attributes = 5;
  Rectangle rule;
  std::uint64_t seed = 0;
};

// x1 > 0.4 and x2 <= 0.6 over five attributes.
PlantedSpec default_planted_spec();

Dataset planted_dataset(const PlantedSpec& spec);

}  // namespace rectx
