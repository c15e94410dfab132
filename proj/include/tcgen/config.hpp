#pragma once

// Pipeline configuration: a flat TOML-style file of `key = value` lines
// (`#` comments, quoted or bare strings, numbers, true/false) plus
// `key=value` overrides that win over the file.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tcgen/curation.hpp"

namespace tcgen {

struct PipelineConfig {
  std::uint64_t seed = 0;
  std::uint32_t sample_rate = 16000;
  double frame_ms = 20.0;
  std::size_t min_events = 1;
  std::size_t max_events = 4;
  double clip_seconds = 10.0;
  MixRatio mix_ratio{1, 2};
  double cfg_scale = 7.5;
  std::size_t sample_steps = 50;
  double segment_sec = 1.0;
  std::string model = "desk";
  std::size_t train_steps = 800;
  std::size_t batch = 8;
  double lr = 1e-3;
  bool disjoint_only = false;

  double frame_seconds() const { return frame_ms / 1000.0; }
  void validate() const;
  nlohmann::json to_json() const;
};

/// Parses `text`; `origin` names the source in error messages.
PipelineConfig parse_config(std::string_view text, const std::string& origin = "<config>",
                            const std::vector<std::string>& overrides = {});

/// An empty path yields the defaults (plus overrides).
PipelineConfig load_config(const std::filesystem::path& path,
                           const std::vector<std::string>& overrides = {});

}  // namespace tcgen
