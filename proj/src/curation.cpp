#include "tcgen/curation.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>

#include <json.hpp>

#include "tcgen/error.hpp"

namespace tcgen {

std::map<std::string, GroundingOutput> read_groundings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open groundings " + path.string());
  std::map<std::string, GroundingOutput> out;
  try {
    const auto j = nlohmann::json::parse(in);
    if (!j.is_object()) throw Error(ErrorCode::kSchemaViolation, "groundings must be an object");
    for (auto rec = j.begin(); rec != j.end(); ++rec) {
      GroundingOutput g;
      for (auto ev = rec->begin(); ev != rec->end(); ++ev) {
        auto& list = g[ev.key()];
        for (const auto& pair : ev.value()) {
          const Interval iv{pair.at(0).get<double>(), pair.at(1).get<double>()};
          if (!(iv.onset >= 0.0) || !(iv.onset < iv.offset))
            throw Error(ErrorCode::kSchemaViolation,
                        "bad interval for '" + ev.key() + "' in record '" + rec.key() + "'");
          list.push_back(iv);
        }
      }
      out.emplace(rec.key(), std::move(g));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchemaViolation, path.string() + ": " + e.what());
  }
  return out;
}

std::vector<OverlapPair> detect_overlaps(const TimedCaption& caption) {
  struct Span {
    Interval iv;
    std::size_t event;
    std::size_t index;
  };
  std::vector<Span> spans;
  for (std::size_t e = 0; e < caption.events.size(); ++e)
    for (std::size_t i = 0; i < caption.events[e].intervals.size(); ++i)
      spans.push_back({caption.events[e].intervals[i], e, i});
  std::sort(spans.begin(), spans.end(), [](const Span& a, const Span& b) {
    return a.iv.onset < b.iv.onset;
  });

  // Sweep by onset, keeping the spans that are still open.
  std::vector<OverlapPair> pairs;
  std::vector<const Span*> open;
  for (const auto& s : spans) {
    std::erase_if(open, [&](const Span* o) { return o->iv.offset <= s.iv.onset; });
    for (const Span* o : open) {
      if (o->event == s.event) continue;
      const double len = intersection_length(o->iv, s.iv);
      if (len <= 0.0) continue;
      OverlapPair p{o->event, o->index, s.event, s.index,
                    {std::max(o->iv.onset, s.iv.onset), std::min(o->iv.offset, s.iv.offset)}};
      if (std::tie(p.event_b, p.interval_b) < std::tie(p.event_a, p.interval_a)) {
        std::swap(p.event_a, p.event_b);
        std::swap(p.interval_a, p.interval_b);
      }
      pairs.push_back(p);
    }
    open.push_back(&s);
  }
  std::sort(pairs.begin(), pairs.end(), [](const OverlapPair& a, const OverlapPair& b) {
    return std::tie(a.event_a, a.interval_a, a.event_b, a.interval_b) <
           std::tie(b.event_a, b.interval_a, b.event_b, b.interval_b);
  });
  return pairs;
}

std::vector<std::string> detect_omissions(const std::vector<std::string>& events,
                                          const GroundingOutput& grounding) {
  const std::set<std::string> wanted(events.begin(), events.end());
  for (const auto& [desc, _] : grounding)
    if (!wanted.count(desc))
      throw Error(ErrorCode::kDescriptionMismatch,
                  "grounding has extra description '" + desc + "'");
  std::vector<std::string> omitted;
  for (const auto& desc : events) {
    auto it = grounding.find(desc);
    if (it == grounding.end())
      throw Error(ErrorCode::kDescriptionMismatch,
                  "grounding lacks description '" + desc + "'");
    if (it->second.empty()) omitted.push_back(desc);
  }
  return omitted;
}

std::string_view to_string(CurationVerdict v) {
  switch (v) {
    case CurationVerdict::kKept: return "kept";
    case CurationVerdict::kRejectedOverlap: return "rejected_overlap";
    case CurationVerdict::kRejectedOmission: return "rejected_omission";
  }
  return "unknown";
}

namespace {

std::vector<Interval> merged(std::vector<Interval> list) {
  std::sort(list.begin(), list.end(),
            [](const Interval& a, const Interval& b) { return a.onset < b.onset; });
  std::vector<Interval> out;
  for (const auto& iv : list) {
    if (!out.empty() && iv.onset < out.back().offset)
      out.back().offset = std::max(out.back().offset, iv.offset);
    else
      out.push_back(iv);
  }
  return out;
}

}  // namespace

CurationResult curate(const std::vector<DataRecord>& records,
                      const std::map<std::string, GroundingOutput>& groundings) {
  CurationResult result;
  for (const auto& record : records) {
    if (record.source == Source::kSimulated) {
      (record.strength == Strength::kStrong ? result.strong : result.weak).push_back(record);
      continue;
    }
    const std::string key = record.key();
    auto g = groundings.find(key);
    if (g == groundings.end())
      throw Error(ErrorCode::kMissingGrounding, "no grounding for record '" + key + "'");
    std::vector<std::string> events;
    if (record.events) {
      events = *record.events;
    } else {
      for (const auto& [desc, _] : g->second) events.push_back(desc);
    }

    const auto omitted = detect_omissions(events, g->second);
    if (!omitted.empty()) {
      ++result.report.rejected_omission;
      result.report.entries.push_back(
          {key, CurationVerdict::kRejectedOmission, "no occurrence of '" + omitted.front() + "'"});
      result.weak.push_back(as_weak(record));
      continue;
    }

    TimedCaption caption;
    for (const auto& desc : events)
      caption.events.push_back({desc, merged(g->second.at(desc))});
    caption.duration = record.duration.value_or(caption.max_offset());
    caption.validate();

    const auto overlaps = detect_overlaps(caption);
    if (!overlaps.empty()) {
      const auto& p = overlaps.front();
      ++result.report.rejected_overlap;
      result.report.entries.push_back(
          {key, CurationVerdict::kRejectedOverlap,
           "'" + caption.events[p.event_a].description + "' overlaps '" +
               caption.events[p.event_b].description + "' on [" +
               format_time(p.intersection.onset) + ", " + format_time(p.intersection.offset) + ")"});
      result.weak.push_back(as_weak(record));
      continue;
    }

    DataRecord kept = record;
    kept.tdc = std::move(caption);
    kept.strength = Strength::kStrong;
    ++result.report.kept;
    result.report.entries.push_back({key, CurationVerdict::kKept, ""});
    result.strong.push_back(std::move(kept));
  }
  return result;
}

MixRatio parse_mix_ratio(std::string_view text) {
  const auto colon = text.find(':');
  MixRatio r{0, 0};
  if (colon == std::string_view::npos)
    throw Error(ErrorCode::kInvalidRatio, "ratio must look like 'w:s'");
  const auto a = text.substr(0, colon);
  const auto b = text.substr(colon + 1);
  const auto ea = std::from_chars(a.data(), a.data() + a.size(), r.weak);
  const auto eb = std::from_chars(b.data(), b.data() + b.size(), r.strong);
  if (ea.ec != std::errc{} || ea.ptr != a.data() + a.size() || eb.ec != std::errc{} ||
      eb.ptr != b.data() + b.size())
    throw Error(ErrorCode::kInvalidRatio, "ratio must look like 'w:s'");
  if (r.weak == 0 || r.strong == 0)
    throw Error(ErrorCode::kInvalidRatio, "ratio terms must be positive");
  return r;
}

MixSampler::MixSampler(std::vector<DataRecord> weak, std::vector<DataRecord> strong,
                       MixRatio ratio, std::uint64_t seed)
    : ratio_(ratio), rng_(seed) {
  if (ratio.weak == 0 || ratio.strong == 0)
    throw Error(ErrorCode::kInvalidRatio, "ratio terms must be positive");
  if (weak.empty()) throw Error(ErrorCode::kEmptyPool, "weak pool is empty");
  if (strong.empty()) throw Error(ErrorCode::kEmptyPool, "strong pool is empty");
  weak_.records = std::move(weak);
  strong_.records = std::move(strong);
}

Strength MixSampler::peek_strength() const {
  const std::uint64_t cycle = ratio_.weak + ratio_.strong;
  const std::uint64_t p = draws_ % cycle;
  return (p + 1) * ratio_.weak / cycle > p * ratio_.weak / cycle ? Strength::kWeak
                                                                 : Strength::kStrong;
}

const DataRecord& MixSampler::take(Pool& pool) {
  if (pool.cursor == pool.order.size()) {
    pool.order.resize(pool.records.size());
    for (std::size_t i = 0; i < pool.order.size(); ++i) pool.order[i] = i;
    rng_.shuffle(pool.order.begin(), pool.order.end());
    pool.cursor = 0;
  }
  return pool.records[pool.order[pool.cursor++]];
}

const DataRecord& MixSampler::next() {
  const Strength s = peek_strength();
  ++draws_;
  return take(s == Strength::kWeak ? weak_ : strong_);
}

}  // namespace tcgen
