#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace tcgen {

inline constexpr int kSampleRate = 16000;

struct Waveform {
  int sample_rate = kSampleRate;
  std::vector<float> samples;

  double duration() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

/// Reads mono RIFF/WAVE in 16-bit PCM or 32-bit IEEE float.
Waveform read_wav(const std::filesystem::path& path);

/// Writes mono 16-bit PCM. Samples are clamped to [-1, 1].
void write_wav(const Waveform& wave, const std::filesystem::path& path);

/// In-memory encoding used by write_wav.
std::vector<std::uint8_t> encode_wav_pcm16(const Waveform& wave);

}  // namespace tcgen
