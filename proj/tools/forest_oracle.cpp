// Serves the built-in forest described by a run configuration over the
// prediction-oracle protocol on stdin/stdout.

#include <iostream>

#include "rectx/blackbox.hpp"
#include "rectx/errors.hpp"
#include "rectx/pipeline.hpp"

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: forest_oracle <config>\n";
    return 1;
  }
  try {
    rectx::RunConfig config = rectx::load_config(argv[1]);
    config.model = "forest";
    config.validate();
    rectx::LoadOptions options;
    options.delimiter = config.delimiter;
    options.label_column = config.label_column;
    const auto full = rectx::load_dataset(config.dataset, options);
    const auto [train, test] = rectx::split(full, config.train_fraction, config.split_seed);
    auto forest = rectx::train_forest(train, config.forest);
    std::ios::sync_with_stdio(false);
    rectx::serve_oracle(*forest, std::cin, std::cout);
  } catch (const rectx::Error& e) {
    std::cerr << "forest_oracle: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
