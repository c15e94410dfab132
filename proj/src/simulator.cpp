#include "tcgen/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <set>

#include <json.hpp>

#include "tcgen/error.hpp"

namespace tcgen {

EventBank EventBank::load(const std::filesystem::path& descriptor) {
  std::ifstream in(descriptor);
  if (!in) throw Error(ErrorCode::kIo, "cannot open event bank " + descriptor.string());
  EventBank bank;
  std::string line;
  std::size_t lineno = 0;
  const auto base = descriptor.parent_path();
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    EventBankEntry entry;
    try {
      const auto j = nlohmann::json::parse(line);
      entry.label = j.at("label").get<std::string>();
      entry.clip_path = j.at("clip_path").get<std::string>();
      entry.duration = j.at("duration").get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kSchemaViolation,
                  descriptor.string() + ": " + e.what(), lineno);
    }
    if (!(entry.duration > 0.0))
      throw Error(ErrorCode::kSchemaViolation, "bank entry duration must be > 0", lineno);
    std::filesystem::path clip = entry.clip_path;
    if (clip.is_relative()) clip = base / clip;
    Waveform wave = read_wav(clip);
    if (wave.sample_rate != kSampleRate)
      throw Error(ErrorCode::kFormat,
                  clip.string() + ": sample rate " + std::to_string(wave.sample_rate) +
                      " differs from the pipeline rate",
                  lineno);
    bank.add(std::move(entry), std::move(wave));
  }
  return bank;
}

void EventBank::add(EventBankEntry entry, Waveform wave) {
  if (wave.samples.empty())
    throw Error(ErrorCode::kSchemaViolation, "bank clip '" + entry.clip_path + "' is empty");
  entry.duration = wave.duration();
  entries_.push_back(std::move(entry));
  clips_.push_back(std::move(wave));
}

std::vector<std::size_t> EventBank::indices_of(const std::string& label) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < entries_.size(); ++i)
    if (entries_[i].label == label) out.push_back(i);
  return out;
}

std::vector<std::string> EventBank::labels() const {
  std::vector<std::string> out;
  for (const auto& e : entries_)
    if (std::find(out.begin(), out.end(), e.label) == out.end()) out.push_back(e.label);
  return out;
}

MappingTable::MappingTable(std::map<std::string, std::vector<std::string>> table)
    : table_(std::move(table)) {
  for (const auto& [label, list] : table_) {
    if (list.empty())
      throw Error(ErrorCode::kSchemaViolation, "mapping for '" + label + "' is empty");
    for (const auto& d : list) validate_description(d);
  }
}

MappingTable MappingTable::load(const std::filesystem::path& json_path) {
  std::ifstream in(json_path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open mapping table " + json_path.string());
  try {
    const auto j = nlohmann::json::parse(in);
    return MappingTable(j.get<std::map<std::string, std::vector<std::string>>>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchemaViolation, json_path.string() + ": " + e.what());
  }
}

const std::vector<std::string>& MappingTable::descriptions(const std::string& label) const {
  auto it = table_.find(label);
  if (it == table_.end())
    throw Error(ErrorCode::kUnknownLabel, "label '" + label + "' not in mapping table");
  return it->second;
}

void MappingTable::check_sizes(std::size_t min_size, std::size_t max_size) const {
  for (const auto& [label, list] : table_)
    if (list.size() < min_size || list.size() > max_size)
      throw Error(ErrorCode::kSchemaViolation,
                  "label '" + label + "' maps to " + std::to_string(list.size()) +
                      " descriptions, expected " + std::to_string(min_size) + "-" +
                      std::to_string(max_size));
}

Waveform place_event(Waveform timeline, const Waveform& clip, double onset,
                     float gain) {
  if (clip.sample_rate != timeline.sample_rate)
    throw Error(ErrorCode::kFormat, "clip and timeline sample rates differ");
  if (!(onset >= 0.0) || !std::isfinite(onset))
    throw Error(ErrorCode::kPlacementOutOfBounds, "onset must be >= 0");
  const auto start = static_cast<std::size_t>(std::llround(onset * timeline.sample_rate));
  if (start + clip.samples.size() > timeline.samples.size())
    throw Error(ErrorCode::kPlacementOutOfBounds,
                "clip of " + format_time(clip.duration()) + " s at " + format_time(onset) +
                    " s exceeds the " + format_time(timeline.duration()) + " s timeline");
  for (std::size_t i = 0; i < clip.samples.size(); ++i)
    timeline.samples[start + i] += gain * clip.samples[i];
  return timeline;
}

const std::string& label_to_description(const std::string& label,
                                        const MappingTable& table, Rng& rng) {
  const auto& list = table.descriptions(label);
  return list[rng.below(list.size())];
}

namespace {

std::vector<std::string> distinct_labels(const std::vector<Placement>& placements) {
  std::vector<std::string> out;
  for (const auto& p : placements)
    if (std::find(out.begin(), out.end(), p.label) == out.end()) out.push_back(p.label);
  return out;
}

}  // namespace

SceneResult simulate_scene(const SceneSpec& spec, const EventBank& bank,
                           const MappingTable& table, const SceneLimits& limits) {
  if (spec.placements.empty())
    throw Error(ErrorCode::kInvalidScene, "scene has no placements");
  if (!(spec.duration > 0.0) || spec.duration > limits.max_duration + 1e-9)
    throw Error(ErrorCode::kInvalidScene,
                "scene duration must lie in (0, " + format_time(limits.max_duration) + "]");
  const auto labels = distinct_labels(spec.placements);
  if (labels.size() > limits.max_events)
    throw Error(ErrorCode::kInvalidScene,
                std::to_string(labels.size()) + " distinct events exceed the limit of " +
                    std::to_string(limits.max_events));

  Rng rng(spec.seed);
  std::map<std::string, std::string> description_of;
  for (const auto& label : labels) {
    if (bank.indices_of(label).empty())
      throw Error(ErrorCode::kUnknownLabel, "label '" + label + "' not in event bank");
    description_of[label] = label_to_description(label, table, rng);
  }

  SceneResult result;
  result.wave.sample_rate = kSampleRate;
  result.wave.samples.assign(
      static_cast<std::size_t>(std::llround(spec.duration * kSampleRate)), 0.0f);
  result.annotation.duration = spec.duration;
  for (const auto& p : spec.placements) {
    std::size_t index;
    if (p.clip) {
      index = *p.clip;
      if (index >= bank.size() || bank.entry(index).label != p.label)
        throw Error(ErrorCode::kUnknownLabel,
                    "bank entry " + std::to_string(index) + " is not a '" + p.label + "' clip");
    } else {
      const auto candidates = bank.indices_of(p.label);
      index = candidates[rng.below(candidates.size())];
    }
    const Waveform& clip = bank.clip(index);
    result.wave = place_event(std::move(result.wave), clip, p.onset, p.gain);
    result.annotation.items.emplace_back(p.label,
                                         Interval{p.onset, p.onset + clip.duration()});
  }

  float peak = 0.0f;
  for (float s : result.wave.samples) peak = std::max(peak, std::abs(s));
  if (peak > 1.0f) {
    result.peak_scale = 1.0 / peak;
    const float scale = 1.0f / peak;
    for (float& s : result.wave.samples) s *= scale;
  }

  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i > 0) result.tcc += " and ";
    result.tcc += description_of[labels[i]];
  }
  result.tdc = result.annotation.to_caption();
  for (auto& e : result.tdc.events) e.description = description_of[e.description];
  result.tdc.validate();
  return result;
}

SceneSpec draw_scene(std::uint64_t seed, std::size_t index,
                     const SimulationConfig& config, const EventBank& bank,
                     const MappingTable& table) {
  if (bank.empty()) throw Error(ErrorCode::kEmptyBank, "event bank is empty");
  struct Eligible {
    std::string label;
    std::vector<std::size_t> clips;
  };
  std::vector<Eligible> eligible;
  for (const auto& label : bank.labels()) {
    if (!table.contains(label)) continue;
    Eligible e{label, {}};
    for (auto i : bank.indices_of(label))
      if (bank.clip(i).duration() <= config.clip_seconds) e.clips.push_back(i);
    if (!e.clips.empty()) eligible.push_back(std::move(e));
  }
  if (eligible.empty())
    throw Error(ErrorCode::kEmptyBank,
                "no bank clip has a mapped label and fits in " +
                    format_time(config.clip_seconds) + " s");

  const std::uint64_t stream = derive_seed(seed, index);
  Rng rng(stream);
  const std::size_t hi = std::min(config.max_events, eligible.size());
  const std::size_t lo = std::clamp<std::size_t>(config.min_events, 1, hi);
  const std::size_t k = lo + rng.below(hi - lo + 1);

  for (int attempt = 0; attempt < 1000; ++attempt) {
    std::vector<std::size_t> order(eligible.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order.begin(), order.end());
    SceneSpec spec;
    spec.duration = config.clip_seconds;
    spec.seed = splitmix64(stream);
    std::vector<Interval> spans;
    for (std::size_t e = 0; e < k; ++e) {
      const auto& pick = eligible[order[e]];
      const std::size_t clip = pick.clips[rng.below(pick.clips.size())];
      const double length = bank.clip(clip).duration();
      const auto slots = static_cast<std::uint64_t>(
          std::floor((config.clip_seconds - length) * 100.0 + 1e-9));
      const double onset = static_cast<double>(rng.below(slots + 1)) / 100.0;
      spec.placements.push_back({pick.label, onset, 1.0f, clip});
      spans.push_back({onset, onset + length});
    }
    bool overlapping = false;
    if (config.disjoint_only)
      for (std::size_t a = 0; a < spans.size() && !overlapping; ++a)
        for (std::size_t b = a + 1; b < spans.size(); ++b)
          if (intersection_length(spans[a], spans[b]) > 0.0) {
            overlapping = true;
            break;
          }
    if (!overlapping) return spec;
  }
  throw Error(ErrorCode::kInvalidScene,
              "could not draw " + std::to_string(k) + " disjoint events in " +
                  format_time(config.clip_seconds) + " s");
}

namespace {

DataRecord make_record(std::size_t index, const SceneSpec& spec,
                       const SceneResult& scene, double clip_seconds) {
  char name[32];
  std::snprintf(name, sizeof name, "sim_%06zu", index);
  DataRecord r;
  r.id = name;
  r.audio_path = std::string(name) + ".wav";
  r.duration = clip_seconds;
  r.tcc = scene.tcc;
  r.tdc = parse_tdc(render_tdc(scene.tdc), clip_seconds);
  std::vector<std::string> events;
  for (const auto& e : r.tdc->events) events.push_back(e.description);
  r.events = std::move(events);
  r.source = Source::kSimulated;
  r.strength = Strength::kStrong;
  r.extras["annotation"] = render_tdc(scene.annotation.to_caption());
  r.extras["metadata"] = {{"peak_scale", scene.peak_scale}, {"scene_seed", spec.seed}};
  return r;
}

}  // namespace

std::vector<DataRecord> generate_dataset(std::size_t n, const SimulationConfig& config,
                                         const EventBank& bank, const MappingTable& table,
                                         std::uint64_t seed) {
  if (bank.empty()) throw Error(ErrorCode::kEmptyBank, "event bank is empty");
  if (config.write_audio && n > 0) std::filesystem::create_directories(config.out_dir);
  const SceneLimits limits{SceneLimits{}.max_duration, config.max_events};

  std::vector<DataRecord> records(n);
  std::vector<std::exception_ptr> failures(n);
  const auto build = [&](std::size_t i) {
    try {
      const SceneSpec spec = draw_scene(seed, i, config, bank, table);
      const SceneResult scene = simulate_scene(spec, bank, table, limits);
      records[i] = make_record(i, spec, scene, config.clip_seconds);
      if (config.write_audio) write_wav(scene.wave, config.out_dir / records[i].audio_path);
    } catch (...) {
      failures[i] = std::current_exception();
    }
  };
  const auto count = static_cast<long>(n);
  if (config.execution == Execution::kParallel) {
#pragma omp parallel for schedule(dynamic, 4)
    for (long i = 0; i < count; ++i) build(static_cast<std::size_t>(i));
  } else {
    for (long i = 0; i < count; ++i) build(static_cast<std::size_t>(i));
  }
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);
  return records;
}

}  // namespace tcgen
