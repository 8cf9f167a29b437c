#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rectx {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Cell-level input failure; row and column are 1-based file coordinates.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t row, std::size_t column)
      : Error(what + " at row " + std::to_string(row) + ", column " +
              std::to_string(column)),
        row_(row),
        column_(column) {}
  std::size_t row() const { return row_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t row_;
  std::size_t column_;
};

class NonFiniteValue : public ParseError {
 public:
  NonFiniteValue(std::size_t row, std::size_t column)
      : ParseError("non-finite value", row, column) {}
};

#define RECTX_DEFINE_ERROR(Name)  \
  class Name : public Error {     \
   public:                        \
    using Error::Error;           \
  };

RECTX_DEFINE_ERROR(EmptyDataset)
RECTX_DEFINE_ERROR(InvalidDataset)
RECTX_DEFINE_ERROR(DegenerateSplit)
RECTX_DEFINE_ERROR(OracleFailure)
RECTX_DEFINE_ERROR(SpawnFailure)
RECTX_DEFINE_ERROR(HandshakeFailure)
RECTX_DEFINE_ERROR(SingleClassTraining)
RECTX_DEFINE_ERROR(InsufficientData)
RECTX_DEFINE_ERROR(NoUsableFeatures)
RECTX_DEFINE_ERROR(IndexOutOfRange)
RECTX_DEFINE_ERROR(RankTooLarge)
RECTX_DEFINE_ERROR(TooManyClusters)
RECTX_DEFINE_ERROR(EmptyGrid)
RECTX_DEFINE_ERROR(ConfigError)
RECTX_DEFINE_ERROR(FormatError)

#undef RECTX_DEFINE_ERROR

}  // namespace rectx
