#include "tcgen/error.hpp"

namespace tcgen {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedClause: return "MalformedClause";
    case ErrorCode::kNonNumericTime: return "NonNumericTime";
    case ErrorCode::kInvertedInterval: return "InvertedInterval";
    case ErrorCode::kOverlappingIntervals: return "OverlappingIntervals";
    case ErrorCode::kEmptyDescription: return "EmptyDescription";
    case ErrorCode::kInvalidDescription: return "InvalidDescription";
    case ErrorCode::kIntervalOutOfRange: return "IntervalOutOfRange";
    case ErrorCode::kSchemaViolation: return "SchemaViolation";
    case ErrorCode::kStrengthMismatch: return "StrengthMismatch";
    case ErrorCode::kPlacementOutOfBounds: return "PlacementOutOfBounds";
    case ErrorCode::kUnknownLabel: return "UnknownLabel";
    case ErrorCode::kEmptyBank: return "EmptyBank";
    case ErrorCode::kInvalidScene: return "InvalidScene";
    case ErrorCode::kDescriptionMismatch: return "DescriptionMismatch";
    case ErrorCode::kMissingGrounding: return "MissingGrounding";
    case ErrorCode::kEmptyPool: return "EmptyPool";
    case ErrorCode::kInvalidRatio: return "InvalidRatio";
    case ErrorCode::kEmbedderFailure: return "EmbedderFailure";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kFrameMismatch: return "FrameMismatch";
    case ErrorCode::kOutOfRange: return "OutOfRange";
    case ErrorCode::kGridMismatch: return "GridMismatch";
    case ErrorCode::kUnknownTemplate: return "UnknownTemplate";
    case ErrorCode::kUnknownKey: return "UnknownKey";
    case ErrorCode::kTypeError: return "TypeError";
    case ErrorCode::kConfigParse: return "ConfigParse";
    case ErrorCode::kIo: return "Io";
    case ErrorCode::kFormat: return "Format";
  }
  return "Unknown";
}

namespace {

std::string decorate(ErrorCode code, const std::string& message,
                     std::optional<std::size_t> position) {
  std::string out(to_string(code));
  if (position) out += " at " + std::to_string(*position);
  out += ": ";
  out += message;
  return out;
}

}  // namespace

Error::Error(ErrorCode code, const std::string& message,
             std::optional<std::size_t> position)
    : std::runtime_error(decorate(code, message, position)),
      code_(code),
      position_(position) {}

}  // namespace tcgen
