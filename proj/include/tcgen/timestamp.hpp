#pragma once

// Timestamp matrix: a frames x channels matrix whose row t is the sum of the
// features of every event active at frame t, or a fixed placeholder sequence
// for captions without timestamps.

#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "tcgen/caption.hpp"
#include "tcgen/embedder.hpp"
#include "tcgen/kernels.hpp"

namespace tcgen {

inline constexpr double kDefaultFrameSeconds = 0.020;

struct TimestampMatrix {
  std::size_t frames = 0;
  std::size_t channels = 0;
  double frame_duration = kDefaultFrameSeconds;
  double duration = 0.0;
  std::vector<double> values;  // row-major frames x channels

  std::span<const double> row(std::size_t t) const {
    return {values.data() + t * channels, channels};
  }
  bool row_is_zero(std::size_t t) const;
  bool operator==(const TimestampMatrix&) const = default;
};

/// ceil(duration / frame_duration), robust to representation error in the
/// quotient (10 / 0.02 is 500 frames, not 501).
std::size_t frame_count(double duration, double frame_duration);

/// Center time of frame t.
inline double frame_center(std::size_t t, double frame_duration) {
  return (static_cast<double>(t) + 0.5) * frame_duration;
}

/// Event-level feature of one description.
std::vector<double> embed_event(std::string_view description, const Embedder& embedder);

/// Row t = sum of features of events with an interval containing the frame
/// center; rows with no active event are exactly zero.
TimestampMatrix build_timestamp_matrix(const TimedCaption& caption, const Embedder& embedder,
                                       double frame_duration = kDefaultFrameSeconds,
                                       Execution execution = Execution::kParallel);

/// Same, with the event features supplied (one per caption event).
TimestampMatrix build_timestamp_matrix(const TimedCaption& caption,
                                       const std::vector<std::vector<double>>& features,
                                       double frame_duration = kDefaultFrameSeconds,
                                       Execution execution = Execution::kParallel);

/// Fixed nonzero row used for captions without timestamps: all ones scaled
/// by C^-1/2.
std::vector<double> placeholder_row(std::size_t channels);

TimestampMatrix coarse_placeholder(double duration, double frame_duration, std::size_t channels);

/// Flat binary frame matrix: "TSMX", uint32 frames, uint32 channels,
/// float32 frame_ms, then frames*channels float32, all little-endian.
struct FrameMatrixFile {
  std::size_t frames = 0;
  std::size_t channels = 0;
  float frame_ms = 20.0f;
  std::vector<float> values;
};

void write_frame_matrix(const FrameMatrixFile& m, const std::filesystem::path& path);
FrameMatrixFile read_frame_matrix(const std::filesystem::path& path);
FrameMatrixFile to_file(const TimestampMatrix& m);

}  // namespace tcgen
