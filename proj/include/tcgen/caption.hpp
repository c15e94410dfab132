#pragma once

// Timed captions (TDC), data records and the JSONL manifest.
//
// TDC grammar, exact:
//   caption      := event_clause (" and " event_clause)*
//   event_clause := description " at " interval ("," interval)*
//   interval     := onset "-" offset
// Times are decimal seconds; rendering always emits two fractional digits
// and joins intervals with ", ".

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tcgen/error.hpp"

namespace tcgen {

/// Half-open activity span [onset, offset) in seconds.
struct Interval {
  double onset = 0.0;
  double offset = 0.0;

  double length() const { return offset - onset; }
  bool operator==(const Interval&) const = default;
};

/// Length of the intersection of two half-open intervals (0 when disjoint).
double intersection_length(const Interval& a, const Interval& b);

struct TimedEvent {
  std::string description;
  std::vector<Interval> intervals;

  bool operator==(const TimedEvent&) const = default;
};

struct TimedCaption {
  std::vector<TimedEvent> events;
  double duration = 0.0;

  /// Throws Error if any invariant does not hold.
  void validate() const;
  double max_offset() const;
  bool operator==(const TimedCaption&) const = default;
};

/// Rejects descriptions the grammar could not re-parse unambiguously.
void validate_description(std::string_view description);

/// Parses a TDC string. Without `duration` the caption's duration is the
/// largest offset. Errors carry the byte offset of the offending clause.
TimedCaption parse_tdc(std::string_view text,
                       std::optional<double> duration = std::nullopt);

std::string render_tdc(const TimedCaption& caption);

/// Two-fractional-digit rendering used by the grammar.
std::string format_time(double seconds);

enum class Source { kSimulated, kReal };
enum class Strength { kWeak, kStrong };

std::string_view to_string(Source s);
std::string_view to_string(Strength s);

struct DataRecord {
  std::string audio_path;
  std::string tcc;
  std::optional<TimedCaption> tdc;
  Source source = Source::kSimulated;
  Strength strength = Strength::kWeak;
  /// Optional keys of the schema.
  std::optional<std::string> id;
  std::optional<double> duration;
  /// Single-event descriptions extracted from the TCC (ingested).
  std::optional<std::vector<std::string>> events;
  /// Keys this library does not interpret, preserved in input order.
  nlohmann::ordered_json extras = nlohmann::ordered_json::object();

  /// `id` when present, otherwise `audio_path`.
  std::string key() const;
  void validate() const;
  bool operator==(const DataRecord&) const = default;
};

/// Labeled activity intervals, e.g. the exact placements of a simulated
/// scene. Unlike TimedCaption, items of one label may overlap.
struct Annotation {
  std::vector<std::pair<std::string, Interval>> items;
  double duration = 0.0;

  /// Groups items by label in first-appearance order, merging overlapping
  /// intervals of the same label.
  TimedCaption to_caption() const;
  static Annotation from_caption(const TimedCaption& caption);
  bool operator==(const Annotation&) const = default;
};

/// Copy of `record` demoted to an audio + TCC pair.
DataRecord as_weak(DataRecord record);

struct ManifestError {
  std::size_t line = 0;
  ErrorCode code = ErrorCode::kSchemaViolation;
  std::string message;
};

struct ManifestReadResult {
  std::vector<DataRecord> records;
  std::vector<ManifestError> errors;
};

DataRecord record_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json record_to_json(const DataRecord& record);

/// Lenient read: malformed lines are reported with their 1-based line number
/// and skipped.
ManifestReadResult read_manifest_lenient(const std::filesystem::path& path);

/// Strict read: the first malformed line throws.
std::vector<DataRecord> read_manifest(const std::filesystem::path& path);

void write_manifest(const std::vector<DataRecord>& records,
                    const std::filesystem::path& path);

}  // namespace tcgen
