// Writes the planted-rule dataset as csv (label column "class").
#include <CLI11.hpp>
#include <iostream>

#include "rectx/errors.hpp"
#include "rectx/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate data labeled by a known rectangle"};
  rectx::PlantedSpec spec = rectx::default_planted_spec();
  std::string output;
  app.add_option("-o,--output", output, "Destination csv")->required();
  app.add_option("--rows", spec.rows, "Number of rows");
  app.add_option("--attributes", spec.attributes, "Number of attributes (at least 2)");
  app.add_option("--seed", spec.seed, "Generator seed");
  CLI11_PARSE(app, argc, argv);
  try {
    rectx::save_dataset(output, rectx::planted_dataset(spec), "class");
  } catch (const rectx::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
