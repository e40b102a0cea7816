#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace fedids {

enum class ErrorCode {
  InvalidArgument,
  NonMonotoneTimestamps,
  EmptyFlow,
  DimensionMismatch,
  SchemaNotFitted,
  InsufficientRows,
  DimensionTooSmall,
  EmptyBatch,
  EmptyDataset,
  EmptyValidationSet,
  TooFewRows,
  ArchitectureMismatch,
  EmptyUpdateSet,
  MalformedHeader,
  NonNumericCell,
  MalformedDocument,
  EmptyConfusion,
  MissingClass,
  Io,
};

std::string_view to_string(ErrorCode code);

// Validation errors are caused by bad input; everything else is a runtime
// failure. The CLI maps the two onto exit codes 2 and 1.
bool is_validation_error(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Raised while reading tabular input. row is the 1-based data row (the header
// is row 0), column is 0-based.
class CellError : public Error {
 public:
  CellError(ErrorCode code, std::size_t row, std::size_t column,
            std::string column_name, const std::string& what);

  std::size_t row() const noexcept { return row_; }
  std::size_t column() const noexcept { return column_; }
  const std::string& column_name() const noexcept { return column_name_; }

 private:
  std::size_t row_;
  std::size_t column_;
  std::string column_name_;
};

}  // namespace fedids
