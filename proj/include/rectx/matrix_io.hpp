#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>

namespace rectx {

// Text matrix format:
//   matrix <rows> <cols> target=<category>
//   <rows> lines of <cols> space-separated reals (shortest round-trip form)
struct TaggedMatrix {
  Eigen::MatrixXd values;
  int target = 0;
};

void write_matrix(std::ostream& out, const Eigen::MatrixXd& values, int target);
TaggedMatrix read_matrix(std::istream& in);

void save_matrix(const std::string& path, const Eigen::MatrixXd& values, int target);
TaggedMatrix load_matrix(const std::string& path);

}  // namespace rectx
