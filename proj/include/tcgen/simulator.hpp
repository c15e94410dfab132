#pragma once

// Multi-event scene simulation from a bank of single-event clips. Produces
// audio + coarse caption + timed caption triplets with exact annotations.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tcgen/caption.hpp"
#include "tcgen/kernels.hpp"
#include "tcgen/random.hpp"
#include "tcgen/wav.hpp"

namespace tcgen {

struct EventBankEntry {
  std::string label;
  std::string clip_path;
  double duration = 0.0;
};

class EventBank {
 public:
  EventBank() = default;

  /// Reads a JSONL descriptor of EventBankEntry and loads every clip.
  /// Relative clip paths resolve against the descriptor's directory.
  static EventBank load(const std::filesystem::path& descriptor);

  /// Adds an in-memory clip; `entry.duration` is taken from the waveform.
  void add(EventBankEntry entry, Waveform wave);

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const EventBankEntry& entry(std::size_t i) const { return entries_.at(i); }
  const Waveform& clip(std::size_t i) const { return clips_.at(i); }
  /// Indices of entries carrying `label`, in bank order.
  std::vector<std::size_t> indices_of(const std::string& label) const;
  /// Distinct labels in first-appearance order.
  std::vector<std::string> labels() const;

 private:
  std::vector<EventBankEntry> entries_;
  std::vector<Waveform> clips_;
};

/// label -> free-text descriptions.
class MappingTable {
 public:
  MappingTable() = default;
  explicit MappingTable(std::map<std::string, std::vector<std::string>> table);

  static MappingTable load(const std::filesystem::path& json_path);

  bool contains(const std::string& label) const { return table_.count(label) > 0; }
  const std::vector<std::string>& descriptions(const std::string& label) const;
  const std::map<std::string, std::vector<std::string>>& table() const { return table_; }

  /// Checks every list size lies in [min_size, max_size].
  void check_sizes(std::size_t min_size, std::size_t max_size) const;

 private:
  std::map<std::string, std::vector<std::string>> table_;
};

struct Placement {
  std::string label;
  double onset = 0.0;
  float gain = 1.0f;
  /// Bank entry to place; drawn from the label's entries when unset.
  std::optional<std::size_t> clip;
};

struct SceneSpec {
  double duration = 10.0;
  std::vector<Placement> placements;
  std::uint64_t seed = 0;
};

struct SceneLimits {
  double max_duration = 10.0;
  std::size_t max_events = 4;
};

struct SceneResult {
  Waveform wave;
  /// Factor applied to the whole mix to keep |x| <= 1 (1 when untouched).
  double peak_scale = 1.0;
  Annotation annotation;
  std::string tcc;
  TimedCaption tdc;
};

/// output[i] = timeline[i] + gain * clip[i - onset * sr] inside the window.
Waveform place_event(Waveform timeline, const Waveform& clip, double onset,
                     float gain);

const std::string& label_to_description(const std::string& label,
                                        const MappingTable& table, Rng& rng);

SceneResult simulate_scene(const SceneSpec& spec, const EventBank& bank,
                           const MappingTable& table,
                           const SceneLimits& limits = {});

struct SimulationConfig {
  std::filesystem::path out_dir;
  double clip_seconds = 10.0;
  std::size_t min_events = 1;
  std::size_t max_events = 4;
  bool disjoint_only = false;
  bool write_audio = true;
  Execution execution = Execution::kParallel;
};

/// The scene drawn for record `index`; exposed so callers can inspect specs
/// without synthesizing audio.
SceneSpec draw_scene(std::uint64_t seed, std::size_t index,
                     const SimulationConfig& config, const EventBank& bank,
                     const MappingTable& table);

/// n simulated strong records; audio files land in config.out_dir and the
/// records' audio paths are relative to it. Record i depends only on
/// (seed, i).
std::vector<DataRecord> generate_dataset(std::size_t n,
                                         const SimulationConfig& config,
                                         const EventBank& bank,
                                         const MappingTable& table,
                                         std::uint64_t seed);

}  // namespace tcgen
