#include "tcgen/caption.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <sstream>

#include "tcgen/error.hpp"

namespace tcgen {

namespace {

constexpr std::string_view kAt = " at ";
constexpr std::string_view kAnd = " and ";
constexpr double kTimeSlack = 1e-9;

bool is_digit(char c) { return c >= '0' && c <= '9'; }

// digits ["." digits] "-" : the only thing allowed to follow " at " when it
// introduces an interval list.
bool starts_interval(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size() && is_digit(s[i])) ++i;
  if (i == 0) return false;
  if (i < s.size() && s[i] == '.') {
    std::size_t j = i + 1;
    while (j < s.size() && is_digit(s[j])) ++j;
    if (j == i + 1) return false;
    i = j;
  }
  return i < s.size() && s[i] == '-';
}

std::size_t find_anchor(std::string_view text, std::size_t from) {
  for (std::size_t p = text.find(kAt, from); p != std::string_view::npos;
       p = text.find(kAt, p + 1)) {
    if (starts_interval(text.substr(p + kAt.size()))) return p;
  }
  return std::string_view::npos;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

std::optional<double> parse_decimal(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size() && is_digit(s[i])) ++i;
  if (i == 0) return std::nullopt;
  if (i < s.size()) {
    if (s[i] != '.') return std::nullopt;
    std::size_t j = i + 1;
    while (j < s.size() && is_digit(s[j])) ++j;
    if (j == i + 1 || j != s.size()) return std::nullopt;
  }
  return std::strtod(std::string(s).c_str(), nullptr);
}

std::vector<Interval> parse_interval_list(std::string_view list,
                                          std::size_t base) {
  std::vector<Interval> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = list.find(',', start);
    const std::string_view item = trim(list.substr(
        start, comma == std::string_view::npos ? std::string_view::npos
                                               : comma - start));
    const std::size_t dash = item.find('-');
    if (dash == std::string_view::npos)
      throw Error(ErrorCode::kNonNumericTime,
                  "expected onset-offset, got '" + std::string(item) + "'",
                  base + start);
    const auto on = parse_decimal(item.substr(0, dash));
    const auto off = parse_decimal(item.substr(dash + 1));
    if (!on || !off)
      throw Error(ErrorCode::kNonNumericTime,
                  "non-numeric time in '" + std::string(item) + "'",
                  base + start);
    if (*on >= *off)
      throw Error(ErrorCode::kInvertedInterval,
                  "onset >= offset in '" + std::string(item) + "'",
                  base + start);
    out.push_back({*on, *off});
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  std::sort(out.begin(), out.end(),
            [](const Interval& a, const Interval& b) { return a.onset < b.onset; });
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i].onset < out[i - 1].offset)
      throw Error(ErrorCode::kOverlappingIntervals,
                  "intervals of one event overlap", base);
  }
  return out;
}

}  // namespace

double intersection_length(const Interval& a, const Interval& b) {
  const double lo = std::max(a.onset, b.onset);
  const double hi = std::min(a.offset, b.offset);
  return hi > lo ? hi - lo : 0.0;
}

void validate_description(std::string_view description) {
  if (description.empty())
    throw Error(ErrorCode::kEmptyDescription, "event description is empty");
  if (description.find('\n') != std::string_view::npos ||
      description.find('\r') != std::string_view::npos)
    throw Error(ErrorCode::kInvalidDescription,
                "description contains a line break");
  if (find_anchor(description, 0) != std::string_view::npos)
    throw Error(ErrorCode::kInvalidDescription,
                "description contains an interval introducer: '" +
                    std::string(description) + "'");
}

double TimedCaption::max_offset() const {
  double m = 0.0;
  for (const auto& e : events)
    for (const auto& iv : e.intervals) m = std::max(m, iv.offset);
  return m;
}

void TimedCaption::validate() const {
  if (events.empty())
    throw Error(ErrorCode::kMalformedClause, "caption has no events");
  for (const auto& e : events) {
    validate_description(e.description);
    if (e.intervals.empty())
      throw Error(ErrorCode::kMalformedClause,
                  "event '" + e.description + "' has no intervals");
    for (std::size_t i = 0; i < e.intervals.size(); ++i) {
      const auto& iv = e.intervals[i];
      if (!(iv.onset >= 0.0))
        throw Error(ErrorCode::kIntervalOutOfRange, "negative onset");
      if (iv.onset >= iv.offset)
        throw Error(ErrorCode::kInvertedInterval,
                    "onset >= offset in event '" + e.description + "'");
      if (iv.offset > duration + kTimeSlack)
        throw Error(ErrorCode::kIntervalOutOfRange,
                    "interval ends after caption duration");
      if (i > 0 && iv.onset < e.intervals[i - 1].offset)
        throw Error(ErrorCode::kOverlappingIntervals,
                    "intervals of event '" + e.description +
                        "' are unsorted or overlap");
    }
  }
}

TimedCaption parse_tdc(std::string_view text, std::optional<double> duration) {
  TimedCaption caption;
  std::size_t pos = 0;
  if (text.empty())
    throw Error(ErrorCode::kMalformedClause, "empty caption", 0);
  while (true) {
    const std::size_t anchor = find_anchor(text, pos);
    if (anchor == std::string_view::npos) {
      const std::string_view rest = text.substr(pos);
      const std::size_t last_at = rest.rfind(kAt);
      if (last_at != std::string_view::npos &&
          rest.find('-', last_at) != std::string_view::npos)
        throw Error(ErrorCode::kNonNumericTime,
                    "interval list is not numeric", pos + last_at + kAt.size());
      throw Error(ErrorCode::kMalformedClause,
                  "clause lacks ' at <onset>-<offset>'", pos);
    }
    TimedEvent event;
    event.description = std::string(text.substr(pos, anchor - pos));
    if (event.description.empty())
      throw Error(ErrorCode::kEmptyDescription, "empty event description", pos);
    const std::size_t list_start = anchor + kAt.size();
    const std::size_t list_end = text.find(kAnd, list_start);
    event.intervals = parse_interval_list(
        text.substr(list_start, list_end == std::string_view::npos
                                    ? std::string_view::npos
                                    : list_end - list_start),
        list_start);
    caption.events.push_back(std::move(event));
    if (list_end == std::string_view::npos) break;
    pos = list_end + kAnd.size();
    if (pos >= text.size())
      throw Error(ErrorCode::kMalformedClause, "dangling ' and '", list_end);
  }
  caption.duration = duration.value_or(caption.max_offset());
  for (const auto& e : caption.events)
    for (const auto& iv : e.intervals)
      if (iv.offset > caption.duration + kTimeSlack)
        throw Error(ErrorCode::kIntervalOutOfRange,
                    "interval ends after duration " +
                        format_time(caption.duration));
  return caption;
}

std::string format_time(double seconds) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", seconds);
  return buf;
}

std::string render_tdc(const TimedCaption& caption) {
  std::string out;
  for (std::size_t e = 0; e < caption.events.size(); ++e) {
    if (e > 0) out += kAnd;
    const auto& event = caption.events[e];
    out += event.description;
    out += kAt;
    for (std::size_t i = 0; i < event.intervals.size(); ++i) {
      if (i > 0) out += ", ";
      out += format_time(event.intervals[i].onset);
      out += '-';
      out += format_time(event.intervals[i].offset);
    }
  }
  return out;
}

std::string_view to_string(Source s) {
  return s == Source::kSimulated ? "simulated" : "real";
}

std::string_view to_string(Strength s) {
  return s == Strength::kStrong ? "strong" : "weak";
}

std::string DataRecord::key() const { return id.value_or(audio_path); }

void DataRecord::validate() const {
  if ((strength == Strength::kStrong) != tdc.has_value())
    throw Error(ErrorCode::kStrengthMismatch,
                strength == Strength::kStrong ? "strength is strong but tdc is absent"
                                              : "strength is weak but tdc is present");
  if (tdc) tdc->validate();
}

TimedCaption Annotation::to_caption() const {
  TimedCaption caption;
  caption.duration = duration;
  for (const auto& [label, interval] : items) {
    auto it = std::find_if(caption.events.begin(), caption.events.end(),
                           [&](const TimedEvent& e) { return e.description == label; });
    if (it == caption.events.end()) {
      caption.events.push_back({label, {}});
      it = std::prev(caption.events.end());
    }
    it->intervals.push_back(interval);
  }
  for (auto& e : caption.events) {
    std::sort(e.intervals.begin(), e.intervals.end(),
              [](const Interval& a, const Interval& b) { return a.onset < b.onset; });
    std::vector<Interval> merged;
    for (const auto& iv : e.intervals) {
      if (!merged.empty() && iv.onset < merged.back().offset)
        merged.back().offset = std::max(merged.back().offset, iv.offset);
      else
        merged.push_back(iv);
    }
    e.intervals = std::move(merged);
  }
  return caption;
}

Annotation Annotation::from_caption(const TimedCaption& caption) {
  Annotation a;
  a.duration = caption.duration;
  for (const auto& e : caption.events)
    for (const auto& iv : e.intervals) a.items.emplace_back(e.description, iv);
  return a;
}

DataRecord as_weak(DataRecord record) {
  record.tdc.reset();
  record.strength = Strength::kWeak;
  return record;
}

namespace {

const std::string& require_string(const nlohmann::ordered_json& j,
                                  const char* key) {
  auto it = j.find(key);
  if (it == j.end())
    throw Error(ErrorCode::kSchemaViolation, std::string("missing key '") + key + "'");
  if (!it->is_string())
    throw Error(ErrorCode::kSchemaViolation, std::string("key '") + key + "' must be a string");
  return it->get_ref<const std::string&>();
}

constexpr std::string_view kKnownKeys[] = {"id",  "audio_path", "duration", "tcc",
                                           "tdc", "events",     "source",   "strength"};

bool is_known(std::string_view key) {
  return std::find(std::begin(kKnownKeys), std::end(kKnownKeys), key) !=
         std::end(kKnownKeys);
}

}  // namespace

DataRecord record_from_json(const nlohmann::ordered_json& j) {
  if (!j.is_object())
    throw Error(ErrorCode::kSchemaViolation, "record must be a JSON object");
  DataRecord r;
  r.audio_path = require_string(j, "audio_path");
  r.tcc = require_string(j, "tcc");
  if (auto it = j.find("id"); it != j.end()) {
    if (!it->is_string()) throw Error(ErrorCode::kSchemaViolation, "'id' must be a string");
    r.id = it->get<std::string>();
  }
  if (auto it = j.find("duration"); it != j.end()) {
    if (!it->is_number() || it->get<double>() <= 0.0)
      throw Error(ErrorCode::kSchemaViolation, "'duration' must be a positive number");
    r.duration = it->get<double>();
  }
  if (auto it = j.find("events"); it != j.end()) {
    if (!it->is_array()) throw Error(ErrorCode::kSchemaViolation, "'events' must be an array");
    std::vector<std::string> ev;
    for (const auto& e : *it) {
      if (!e.is_string())
        throw Error(ErrorCode::kSchemaViolation, "'events' entries must be strings");
      ev.push_back(e.get<std::string>());
    }
    r.events = std::move(ev);
  }
  const std::string& source = require_string(j, "source");
  if (source == "simulated") r.source = Source::kSimulated;
  else if (source == "real") r.source = Source::kReal;
  else throw Error(ErrorCode::kSchemaViolation, "unknown source '" + source + "'");
  const std::string& strength = require_string(j, "strength");
  if (strength == "strong") r.strength = Strength::kStrong;
  else if (strength == "weak") r.strength = Strength::kWeak;
  else throw Error(ErrorCode::kSchemaViolation, "unknown strength '" + strength + "'");
  if (auto it = j.find("tdc"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw Error(ErrorCode::kSchemaViolation, "'tdc' must be a string");
    r.tdc = parse_tdc(it->get_ref<const std::string&>(), r.duration);
  }
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!is_known(it.key())) r.extras[it.key()] = it.value();
  r.validate();
  return r;
}

nlohmann::ordered_json record_to_json(const DataRecord& r) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  if (r.id) j["id"] = *r.id;
  j["audio_path"] = r.audio_path;
  if (r.duration) j["duration"] = *r.duration;
  j["tcc"] = r.tcc;
  if (r.tdc) j["tdc"] = render_tdc(*r.tdc);
  if (r.events) j["events"] = *r.events;
  j["source"] = std::string(to_string(r.source));
  j["strength"] = std::string(to_string(r.strength));
  for (auto it = r.extras.begin(); it != r.extras.end(); ++it) j[it.key()] = it.value();
  return j;
}

ManifestReadResult read_manifest_lenient(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open manifest " + path.string());
  ManifestReadResult result;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      auto j = nlohmann::ordered_json::parse(line);
      result.records.push_back(record_from_json(j));
    } catch (const nlohmann::json::exception& e) {
      result.errors.push_back({lineno, ErrorCode::kSchemaViolation, std::string("SchemaViolation: ") + e.what()});
    } catch (const Error& e) {
      result.errors.push_back({lineno, e.code(), e.what()});
    }
  }
  return result;
}

std::vector<DataRecord> read_manifest(const std::filesystem::path& path) {
  auto result = read_manifest_lenient(path);
  if (!result.errors.empty()) {
    const auto& first = result.errors.front();
    throw Error(first.code, path.string() + ":" + std::to_string(first.line) + ": " + first.message,
                first.line);
  }
  return std::move(result.records);
}

void write_manifest(const std::vector<DataRecord>& records,
                    const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write manifest " + path.string());
  for (const auto& r : records) out << record_to_json(r).dump() << '\n';
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

}  // namespace tcgen
