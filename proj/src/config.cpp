#include "tcgen/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "tcgen/dit.hpp"
#include "tcgen/error.hpp"

namespace tcgen {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct Value {
  std::string text;
  bool quoted = false;
};

// Where a value came from, for error messages.
struct Site {
  std::string origin;
  std::size_t line = 0;

  std::string describe() const { return origin + ":" + std::to_string(line); }
};

[[noreturn]] void type_error(const Site& site, const std::string& key, const std::string& expected,
                             const Value& v) {
  throw Error(ErrorCode::kTypeError,
              site.describe() + ": '" + key + "' expects " + expected + ", got '" + v.text + "'",
              site.line);
}

template <typename T>
T parse_number(const Site& site, const std::string& key, const Value& v, const char* expected) {
  if (v.quoted) type_error(site, key, expected, v);
  T out{};
  const char* first = v.text.data();
  const char* last = first + v.text.size();
  if (!v.text.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last || first == last) type_error(site, key, expected, v);
  return out;
}

using Setter = std::function<void(PipelineConfig&, const Site&, const std::string&, const Value&)>;

template <typename T>
Setter integer(T PipelineConfig::*field) {
  return [field](PipelineConfig& c, const Site& s, const std::string& k, const Value& v) {
    c.*field = parse_number<T>(s, k, v, "a non-negative integer");
  };
}

Setter real(double PipelineConfig::*field) {
  return [field](PipelineConfig& c, const Site& s, const std::string& k, const Value& v) {
    c.*field = parse_number<double>(s, k, v, "a number");
  };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"seed", integer(&PipelineConfig::seed)},
      {"sample_rate", integer(&PipelineConfig::sample_rate)},
      {"frame_ms", real(&PipelineConfig::frame_ms)},
      {"min_events", integer(&PipelineConfig::min_events)},
      {"max_events", integer(&PipelineConfig::max_events)},
      {"clip_seconds", real(&PipelineConfig::clip_seconds)},
      {"cfg_scale", real(&PipelineConfig::cfg_scale)},
      {"sample_steps", integer(&PipelineConfig::sample_steps)},
      {"segment_sec", real(&PipelineConfig::segment_sec)},
      {"train_steps", integer(&PipelineConfig::train_steps)},
      {"batch", integer(&PipelineConfig::batch)},
      {"lr", real(&PipelineConfig::lr)},
      {"mix_ratio",
       [](PipelineConfig& c, const Site& s, const std::string& k, const Value& v) {
         try {
           c.mix_ratio = parse_mix_ratio(v.text);
         } catch (const Error&) {
           type_error(s, k, "a ratio 'w:s'", v);
         }
       }},
      {"model",
       [](PipelineConfig& c, const Site& s, const std::string& k, const Value& v) {
         try {
           DiTConfig::preset(v.text);
         } catch (const Error&) {
           type_error(s, k, "one of desk, toy, large", v);
         }
         c.model = v.text;
       }},
      {"disjoint_only",
       [](PipelineConfig& c, const Site& s, const std::string& k, const Value& v) {
         if (v.quoted || (v.text != "true" && v.text != "false")) type_error(s, k, "true or false", v);
         c.disjoint_only = v.text == "true";
       }},
  };
  return table;
}

Value parse_value(std::string_view raw, const Site& site) {
  Value v;
  raw = trim(raw);
  if (!raw.empty() && raw.front() == '"') {
    const auto close = raw.find('"', 1);
    if (close == std::string_view::npos)
      throw Error(ErrorCode::kConfigParse, site.describe() + ": unterminated string", site.line);
    const auto rest = trim(raw.substr(close + 1));
    if (!rest.empty() && rest.front() != '#')
      throw Error(ErrorCode::kConfigParse, site.describe() + ": trailing text after string", site.line);
    v.text = std::string(raw.substr(1, close - 1));
    v.quoted = true;
    return v;
  }
  const auto hash = raw.find('#');
  v.text = std::string(trim(raw.substr(0, hash)));
  if (v.text.empty()) throw Error(ErrorCode::kConfigParse, site.describe() + ": missing value", site.line);
  return v;
}

void apply_line(PipelineConfig& c, std::string_view line, const Site& site) {
  const auto body = trim(line);
  if (body.empty() || body.front() == '#') return;
  const auto eq = body.find('=');
  if (eq == std::string_view::npos)
    throw Error(ErrorCode::kConfigParse, site.describe() + ": expected 'key = value'", site.line);
  const std::string key(trim(body.substr(0, eq)));
  if (key.empty()) throw Error(ErrorCode::kConfigParse, site.describe() + ": missing key", site.line);
  const auto it = setters().find(key);
  if (it == setters().end())
    throw Error(ErrorCode::kUnknownKey, site.describe() + ": unknown key '" + key + "'", site.line);
  it->second(c, site, key, parse_value(body.substr(eq + 1), site));
}

}  // namespace

void PipelineConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::kTypeError, msg); };
  if (sample_rate != 16000) fail("sample_rate: only 16000 Hz is supported");
  if (!(frame_ms > 0.0)) fail("frame_ms must be positive");
  if (!(clip_seconds > 0.0)) fail("clip_seconds must be positive");
  if (min_events == 0 || max_events < min_events) fail("need 1 <= min_events <= max_events");
  if (!(cfg_scale > 0.0)) fail("cfg_scale must be positive");
  if (sample_steps == 0) fail("sample_steps must be positive");
  if (!(segment_sec > 0.0)) fail("segment_sec must be positive");
  if (train_steps == 0 || batch == 0) fail("train_steps and batch must be positive");
  if (!(lr > 0.0)) fail("lr must be positive");
}

nlohmann::json PipelineConfig::to_json() const {
  return {{"seed", seed},
          {"sample_rate", sample_rate},
          {"frame_ms", frame_ms},
          {"min_events", min_events},
          {"max_events", max_events},
          {"clip_seconds", clip_seconds},
          {"mix_ratio", std::to_string(mix_ratio.weak) + ":" + std::to_string(mix_ratio.strong)},
          {"cfg_scale", cfg_scale},
          {"sample_steps", sample_steps},
          {"segment_sec", segment_sec},
          {"model", model},
          {"train_steps", train_steps},
          {"batch", batch},
          {"lr", lr},
          {"disjoint_only", disjoint_only}};
}

PipelineConfig parse_config(std::string_view text, const std::string& origin,
                            const std::vector<std::string>& overrides) {
  PipelineConfig c;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    const auto line = text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    apply_line(c, line, Site{origin, ++line_no});
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  for (std::size_t i = 0; i < overrides.size(); ++i)
    apply_line(c, overrides[i], Site{"override", i + 1});
  c.validate();
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  if (path.empty()) return parse_config("", "<defaults>", overrides);
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path.string(), overrides);
}

}  // namespace tcgen
