#include "tcgen/timestamp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

#include "tcgen/error.hpp"

namespace tcgen {

bool TimestampMatrix::row_is_zero(std::size_t t) const {
  const auto r = row(t);
  return std::all_of(r.begin(), r.end(), [](double v) { return v == 0.0; });
}

std::size_t frame_count(double duration, double frame_duration) {
  if (!(duration > 0.0) || !(frame_duration > 0.0))
    throw Error(ErrorCode::kOutOfRange, "duration and frame duration must be positive");
  const double q = duration / frame_duration;
  const double nearest = std::round(q);
  if (std::abs(q - nearest) <= 1e-9 * std::max(1.0, nearest))
    return static_cast<std::size_t>(nearest);
  return static_cast<std::size_t>(std::ceil(q));
}

std::vector<double> embed_event(std::string_view description, const Embedder& embedder) {
  if (description.empty())
    throw Error(ErrorCode::kEmbedderFailure, "cannot embed an empty description");
  auto v = embedder.embed(description);
  if (v.size() != embedder.dim())
    throw Error(ErrorCode::kEmbedderFailure, "embedder returned a vector of the wrong size");
  return v;
}

TimestampMatrix build_timestamp_matrix(const TimedCaption& caption, const Embedder& embedder,
                                       double frame_duration, Execution execution) {
  std::vector<std::vector<double>> features;
  features.reserve(caption.events.size());
  for (const auto& e : caption.events) features.push_back(embed_event(e.description, embedder));
  return build_timestamp_matrix(caption, features, frame_duration, execution);
}

TimestampMatrix build_timestamp_matrix(const TimedCaption& caption,
                                       const std::vector<std::vector<double>>& features,
                                       double frame_duration, Execution execution) {
  if (features.size() != caption.events.size())
    throw Error(ErrorCode::kShapeMismatch, "one feature per event is required");
  if (features.empty()) throw Error(ErrorCode::kShapeMismatch, "caption has no events");
  TimestampMatrix m;
  m.channels = features.front().size();
  for (const auto& f : features)
    if (f.size() != m.channels)
      throw Error(ErrorCode::kShapeMismatch, "event features differ in dimension");
  m.frame_duration = frame_duration;
  m.duration = caption.duration;
  m.frames = frame_count(caption.duration, frame_duration);
  m.values.assign(m.frames * m.channels, 0.0);
  const std::size_t channels = m.channels;

  if (execution == Execution::kSerial) {
    for (std::size_t t = 0; t < m.frames; ++t) {
      const double c = frame_center(t, frame_duration);
      double* row = m.values.data() + t * channels;
      for (std::size_t e = 0; e < caption.events.size(); ++e) {
        const bool active = std::any_of(
            caption.events[e].intervals.begin(), caption.events[e].intervals.end(),
            [c](const Interval& iv) { return iv.onset <= c && c < iv.offset; });
        if (active)
          for (std::size_t k = 0; k < channels; ++k) row[k] += features[e][k];
      }
    }
    return m;
  }

  // Chunks of frames; within a chunk each interval touches only the frames
  // whose centers it contains, and rows still accumulate in event order.
  const auto frames = static_cast<long>(m.frames);
  constexpr long kChunk = 64;
  const long chunks = (frames + kChunk - 1) / kChunk;
#pragma omp parallel for schedule(static) if (m.frames * channels >= 1u << 14)
  for (long ch = 0; ch < chunks; ++ch) {
    const auto lo = static_cast<std::size_t>(ch * kChunk);
    const auto hi = static_cast<std::size_t>(std::min(frames, (ch + 1) * kChunk));
    for (std::size_t e = 0; e < caption.events.size(); ++e) {
      for (const auto& iv : caption.events[e].intervals) {
        const double guess = std::floor(iv.onset / frame_duration - 0.5);
        std::size_t t = guess > 0.0 ? static_cast<std::size_t>(guess) : 0;
        while (t > 0 && frame_center(t - 1, frame_duration) >= iv.onset) --t;
        while (t < hi && frame_center(t, frame_duration) < iv.onset) ++t;
        t = std::max(t, lo);
        for (; t < hi && frame_center(t, frame_duration) < iv.offset; ++t) {
          double* row = m.values.data() + t * channels;
          for (std::size_t k = 0; k < channels; ++k) row[k] += features[e][k];
        }
      }
    }
  }
  return m;
}

std::vector<double> placeholder_row(std::size_t channels) {
  return std::vector<double>(channels, 1.0 / std::sqrt(static_cast<double>(channels)));
}

TimestampMatrix coarse_placeholder(double duration, double frame_duration, std::size_t channels) {
  if (channels == 0) throw Error(ErrorCode::kShapeMismatch, "channels must be > 0");
  TimestampMatrix m;
  m.channels = channels;
  m.frame_duration = frame_duration;
  m.duration = duration;
  m.frames = frame_count(duration, frame_duration);
  const auto row = placeholder_row(channels);
  m.values.reserve(m.frames * channels);
  for (std::size_t t = 0; t < m.frames; ++t) m.values.insert(m.values.end(), row.begin(), row.end());
  return m;
}

namespace {

void put32(std::ofstream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get32(const unsigned char* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 |
         std::uint32_t(p[3]) << 24;
}

std::uint32_t float_bits(float f) {
  std::uint32_t u;
  std::memcpy(&u, &f, 4);
  return u;
}

float bits_float(std::uint32_t u) {
  float f;
  std::memcpy(&f, &u, 4);
  return f;
}

}  // namespace

void write_frame_matrix(const FrameMatrixFile& m, const std::filesystem::path& path) {
  if (m.values.size() != m.frames * m.channels)
    throw Error(ErrorCode::kShapeMismatch, "matrix values do not match frames x channels");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.write("TSMX", 4);
  put32(out, static_cast<std::uint32_t>(m.frames));
  put32(out, static_cast<std::uint32_t>(m.channels));
  put32(out, float_bits(m.frame_ms));
  for (float v : m.values) put32(out, float_bits(v));
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

FrameMatrixFile read_frame_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 16 || std::memcmp(bytes.data(), "TSMX", 4) != 0)
    throw Error(ErrorCode::kFormat, path.string() + ": not a frame matrix file");
  FrameMatrixFile m;
  m.frames = get32(bytes.data() + 4);
  m.channels = get32(bytes.data() + 8);
  m.frame_ms = bits_float(get32(bytes.data() + 12));
  if (bytes.size() != 16 + 4 * m.frames * m.channels)
    throw Error(ErrorCode::kFormat, path.string() + ": payload size does not match header");
  m.values.resize(m.frames * m.channels);
  for (std::size_t i = 0; i < m.values.size(); ++i)
    m.values[i] = bits_float(get32(bytes.data() + 16 + 4 * i));
  return m;
}

FrameMatrixFile to_file(const TimestampMatrix& m) {
  FrameMatrixFile f;
  f.frames = m.frames;
  f.channels = m.channels;
  f.frame_ms = static_cast<float>(m.frame_duration * 1000.0);
  f.values.assign(m.values.begin(), m.values.end());
  return f;
}

}  // namespace tcgen
