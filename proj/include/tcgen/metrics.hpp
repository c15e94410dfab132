#pragma once

// Segment-based event metrics and the template-correlation event detector
// used to score generated toy latents.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tcgen/caption.hpp"
#include "tcgen/tensor.hpp"

namespace tcgen {

inline constexpr double kDefaultSegmentSeconds = 1.0;

struct SegmentGrid {
  double segment_length = kDefaultSegmentSeconds;
  std::size_t segments = 0;
  std::vector<std::string> labels;
  /// activity[e][s]: label e active in segment s.
  std::vector<std::vector<bool>> activity;

  bool operator==(const SegmentGrid&) const = default;
};

/// Number of segments covering `duration` (ceil, robust to rounding).
std::size_t segment_count(double duration, double segment_length);

/// Segment s is active for a label iff one of its intervals overlaps
/// [s L, (s+1) L) with positive length. Rows follow `labels`; items whose
/// label is not listed are ignored.
SegmentGrid segment_activity(const Annotation& annotation, double segment_length, double duration,
                             const std::vector<std::string>& labels);
/// Same, with labels in first-appearance order.
SegmentGrid segment_activity(const Annotation& annotation, double segment_length, double duration);

struct SegmentCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;

  SegmentCounts& operator+=(const SegmentCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  bool operator==(const SegmentCounts&) const = default;
};

struct Scores {
  SegmentCounts counts;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Zero denominators give 0.
Scores scores_from_counts(const SegmentCounts& counts);

struct EvalResult {
  Scores micro;
  std::map<std::string, Scores> per_class;
  /// Set when the result only covers references with two or more events.
  bool multi_event = false;

  nlohmann::json to_json() const;
};

EvalResult segment_f1(const SegmentGrid& reference, const SegmentGrid& hypothesis);

struct EvalPair {
  Annotation reference;
  Annotation hypothesis;
};

struct SetEvaluation {
  EvalResult all;
  /// Absent when no reference has two or more distinct events.
  std::optional<EvalResult> multi_event;

  nlohmann::json to_json() const;
};

/// Counts pooled over all pairs. Each pair is gridded over its reference
/// duration (or the largest offset of either side when that is zero).
SetEvaluation evaluate_set(const std::vector<EvalPair>& pairs,
                           double segment_length = kDefaultSegmentSeconds);

/// Unit latent signatures, one per event label.
struct EventTemplates {
  std::vector<std::string> labels;
  std::vector<std::vector<double>> vectors;

  std::size_t dim() const { return vectors.empty() ? 0 : vectors.front().size(); }
  /// Throws UnknownTemplate.
  const std::vector<double>& of(const std::string& label) const;

  nlohmann::json to_json() const;
  static EventTemplates from_json(const nlohmann::json& j);
  static EventTemplates load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

/// Gram-Schmidt orthonormalized Gaussian vectors; needs labels.size() <= dim.
EventTemplates make_orthonormal_templates(const std::vector<std::string>& labels, std::size_t dim,
                                          std::uint64_t seed);

struct DetectorOptions {
  double threshold = 0.5;
  double frame_duration = 0.2;
  /// Inactive runs shorter than this many frames between two active runs
  /// are filled.
  std::size_t bridge_frames = 2;
};

/// Per frame, a label is active iff the dot product of the latent row with
/// its unit template exceeds the threshold.
Annotation detect_latent_events(const ad::Tensor& latent, const EventTemplates& templates,
                                const DetectorOptions& options = {});

}  // namespace tcgen
