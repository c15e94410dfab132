#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace tcgen {

enum class ErrorCode {
  // caption grammar and manifests
  kMalformedClause,
  kNonNumericTime,
  kInvertedInterval,
  kOverlappingIntervals,
  kEmptyDescription,
  kInvalidDescription,
  kIntervalOutOfRange,
  kSchemaViolation,
  kStrengthMismatch,
  // simulation
  kPlacementOutOfBounds,
  kUnknownLabel,
  kEmptyBank,
  kInvalidScene,
  // curation
  kDescriptionMismatch,
  kMissingGrounding,
  kEmptyPool,
  kInvalidRatio,
  // encoder
  kEmbedderFailure,
  // numerics
  kShapeMismatch,
  kFrameMismatch,
  kOutOfRange,
  // evaluation
  kGridMismatch,
  kUnknownTemplate,
  // config and io
  kUnknownKey,
  kTypeError,
  kConfigParse,
  kIo,
  kFormat,
};

std::string_view to_string(ErrorCode code);

/// Every module error. `position` is a byte offset (parsers) or a 1-based
/// line number (line-oriented files), whichever the thrower documents.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::size_t> position = std::nullopt);

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> position() const noexcept { return position_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> position_;
};

}  // namespace tcgen
