#pragma once

// Real-data filtering and the weak/strong training mix.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "tcgen/caption.hpp"
#include "tcgen/random.hpp"

namespace tcgen {

/// Intervals detected by an external grounding model, per event description.
using GroundingOutput = std::map<std::string, std::vector<Interval>>;

/// Grounding file: {record id: {description: [[onset, offset], ...]}}.
std::map<std::string, GroundingOutput> read_groundings(const std::filesystem::path& path);

struct OverlapPair {
  std::size_t event_a = 0;
  std::size_t interval_a = 0;
  std::size_t event_b = 0;
  std::size_t interval_b = 0;
  Interval intersection;

  bool operator==(const OverlapPair&) const = default;
};

/// Every pair of intervals from distinct events whose intersection has
/// positive length. Ordered by (event_a, interval_a, event_b, interval_b).
std::vector<OverlapPair> detect_overlaps(const TimedCaption& caption);

/// Descriptions whose grounding is empty, in the order of `events`.
std::vector<std::string> detect_omissions(const std::vector<std::string>& events,
                                          const GroundingOutput& grounding);

enum class CurationVerdict { kKept, kRejectedOverlap, kRejectedOmission };

std::string_view to_string(CurationVerdict v);

struct CurationReport {
  std::size_t kept = 0;
  std::size_t rejected_overlap = 0;
  std::size_t rejected_omission = 0;
  /// (record key, verdict, reason) for every real record examined.
  struct Entry {
    std::string key;
    CurationVerdict verdict;
    std::string reason;
  };
  std::vector<Entry> entries;

  std::size_t total() const { return kept + rejected_overlap + rejected_omission; }
};

struct CurationResult {
  std::vector<DataRecord> strong;
  std::vector<DataRecord> weak;
  CurationReport report;
};

/// Builds TDC for real records from their grounding and keeps those without
/// overlaps or omissions (as strong); the rest stay as weak audio + TCC.
/// Simulated records pass through to the pool matching their strength.
/// Omission is checked before overlap.
CurationResult curate(const std::vector<DataRecord>& records,
                      const std::map<std::string, GroundingOutput>& groundings);

struct MixRatio {
  std::uint32_t weak = 1;
  std::uint32_t strong = 2;
};

/// Parses "w:s" with positive integers.
MixRatio parse_mix_ratio(std::string_view text);

/// Deterministic stream over two pools. Every aligned window of
/// (weak + strong) draws holds exactly `weak` weak and `strong` strong
/// records; each pool is visited in a seeded shuffle that is redrawn at the
/// end of every pass.
class MixSampler {
 public:
  MixSampler(std::vector<DataRecord> weak, std::vector<DataRecord> strong,
             MixRatio ratio, std::uint64_t seed);

  const DataRecord& next();
  /// Pool of the record `next()` will return.
  Strength peek_strength() const;
  std::uint64_t draws() const { return draws_; }

 private:
  struct Pool {
    std::vector<DataRecord> records;
    std::vector<std::size_t> order;
    std::size_t cursor = 0;
  };
  const DataRecord& take(Pool& pool);

  Pool weak_;
  Pool strong_;
  MixRatio ratio_;
  Rng rng_;
  std::uint64_t draws_ = 0;
};

}  // namespace tcgen
