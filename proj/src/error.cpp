#include "fedids/error.hpp"

namespace fedids {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonMonotoneTimestamps: return "NonMonotoneTimestamps";
    case ErrorCode::EmptyFlow: return "EmptyFlow";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::SchemaNotFitted: return "SchemaNotFitted";
    case ErrorCode::InsufficientRows: return "InsufficientRows";
    case ErrorCode::DimensionTooSmall: return "DimensionTooSmall";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::EmptyValidationSet: return "EmptyValidationSet";
    case ErrorCode::TooFewRows: return "TooFewRows";
    case ErrorCode::ArchitectureMismatch: return "ArchitectureMismatch";
    case ErrorCode::EmptyUpdateSet: return "EmptyUpdateSet";
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::NonNumericCell: return "NonNumericCell";
    case ErrorCode::MalformedDocument: return "MalformedDocument";
    case ErrorCode::EmptyConfusion: return "EmptyConfusion";
    case ErrorCode::MissingClass: return "MissingClass";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

bool is_validation_error(ErrorCode code) { return code != ErrorCode::Io; }

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

CellError::CellError(ErrorCode code, std::size_t row, std::size_t column,
                     std::string column_name, const std::string& what)
    : Error(code, what + " (row " + std::to_string(row) + ", column " +
                      std::to_string(column) + " '" + column_name + "')"),
      row_(row),
      column_(column),
      column_name_(std::move(column_name)) {}

}  // namespace fedids
