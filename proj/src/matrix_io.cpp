#include "rectx/matrix_io.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "rectx/errors.hpp"
#include "rectx/text_io.hpp"

namespace rectx {

void write_matrix(std::ostream& out, const Eigen::MatrixXd& values, int target) {
  out << "matrix " << values.rows() << ' ' << values.cols() << " target=" << target << '\n';
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      out << (j ? " " : "") << format_real(values(i, j));
    }
    out << '\n';
  }
}

TaggedMatrix read_matrix(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("missing matrix header");
  const auto header = split_whitespace(line);
  if (header.size() != 4 || header[0] != "matrix" || header[3].rfind("target=", 0) != 0) {
    throw FormatError("malformed matrix header '" + line + "'");
  }
  const auto rows = parse_integer(header[1]);
  const auto cols = parse_integer(header[2]);
  const auto target = parse_integer(std::string_view(header[3]).substr(7));
  if (!rows || !cols || !target || *rows < 0 || *cols < 0) {
    throw FormatError("malformed matrix header '" + line + "'");
  }
  TaggedMatrix result;
  result.target = static_cast<int>(*target);
  result.values.resize(*rows, *cols);
  for (long long i = 0; i < *rows; ++i) {
    if (!std::getline(in, line)) throw FormatError("matrix truncated at row " + std::to_string(i + 1));
    const auto cells = split_whitespace(line);
    if (static_cast<long long>(cells.size()) != *cols) {
      throw ParseError("expected " + std::to_string(*cols) + " values", static_cast<std::size_t>(i + 2), cells.size());
    }
    for (long long j = 0; j < *cols; ++j) {
      const auto value = parse_real(cells[static_cast<std::size_t>(j)]);
      if (!value) throw ParseError("bad matrix entry", static_cast<std::size_t>(i + 2), static_cast<std::size_t>(j + 1));
      if (!std::isfinite(*value)) throw NonFiniteValue(static_cast<std::size_t>(i + 2), static_cast<std::size_t>(j + 1));
      result.values(i, j) = *value;
    }
  }
  return result;
}

void save_matrix(const std::string& path, const Eigen::MatrixXd& values, int target) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write '" + path + "'");
  write_matrix(out, values, target);
}

TaggedMatrix load_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path + "'");
  return read_matrix(in);
}

}  // namespace rectx
