#include "tcgen/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "tcgen/error.hpp"
#include "tcgen/random.hpp"
#include "tcgen/timestamp.hpp"

namespace tcgen {

std::size_t segment_count(double duration, double segment_length) {
  if (!(segment_length > 0.0)) throw Error(ErrorCode::kOutOfRange, "segment length must be positive");
  if (!(duration > 0.0)) return 0;
  return frame_count(duration, segment_length);
}

SegmentGrid segment_activity(const Annotation& annotation, double segment_length, double duration,
                             const std::vector<std::string>& labels) {
  SegmentGrid grid;
  grid.segment_length = segment_length;
  grid.segments = segment_count(duration, segment_length);
  grid.labels = labels;
  grid.activity.assign(labels.size(), std::vector<bool>(grid.segments, false));
  for (const auto& [label, iv] : annotation.items) {
    const auto it = std::find(labels.begin(), labels.end(), label);
    if (it == labels.end() || !(iv.offset > iv.onset)) continue;
    auto& row = grid.activity[static_cast<std::size_t>(it - labels.begin())];
    for (std::size_t s = 0; s < grid.segments; ++s) {
      const Interval seg{static_cast<double>(s) * segment_length,
                         static_cast<double>(s + 1) * segment_length};
      if (intersection_length(seg, iv) > 0.0) row[s] = true;
    }
  }
  return grid;
}

SegmentGrid segment_activity(const Annotation& annotation, double segment_length, double duration) {
  std::vector<std::string> labels;
  for (const auto& [label, _] : annotation.items)
    if (std::find(labels.begin(), labels.end(), label) == labels.end()) labels.push_back(label);
  return segment_activity(annotation, segment_length, duration, labels);
}

Scores scores_from_counts(const SegmentCounts& c) {
  Scores s;
  s.counts = c;
  s.precision = c.tp + c.fp > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
  s.recall = c.tp + c.fn > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
  s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

namespace {

nlohmann::json scores_json(const Scores& s) {
  return {{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1},
          {"tp", s.counts.tp},        {"fp", s.counts.fp},  {"fn", s.counts.fn}};
}

void check_compatible(const SegmentGrid& a, const SegmentGrid& b) {
  if (a.segment_length != b.segment_length)
    throw Error(ErrorCode::kGridMismatch, "segment lengths differ");
  if (a.segments != b.segments)
    throw Error(ErrorCode::kGridMismatch, "segment counts differ (" + std::to_string(a.segments) +
                                              " vs " + std::to_string(b.segments) + ")");
  if (a.labels != b.labels) throw Error(ErrorCode::kGridMismatch, "event sets differ");
  for (const auto* g : {&a, &b}) {
    if (g->activity.size() != g->labels.size())
      throw Error(ErrorCode::kGridMismatch, "activity rows do not match labels");
    for (const auto& row : g->activity)
      if (row.size() != g->segments)
        throw Error(ErrorCode::kGridMismatch, "activity row length differs from segment count");
  }
}

std::map<std::string, SegmentCounts> class_counts(const SegmentGrid& ref, const SegmentGrid& hyp) {
  check_compatible(ref, hyp);
  std::map<std::string, SegmentCounts> out;
  for (std::size_t e = 0; e < ref.labels.size(); ++e) {
    SegmentCounts& c = out[ref.labels[e]];
    for (std::size_t s = 0; s < ref.segments; ++s) {
      const bool r = ref.activity[e][s];
      const bool h = hyp.activity[e][s];
      c.tp += r && h;
      c.fp += !r && h;
      c.fn += r && !h;
    }
  }
  return out;
}

EvalResult result_from(const std::map<std::string, SegmentCounts>& per_class) {
  EvalResult r;
  SegmentCounts total;
  for (const auto& [label, c] : per_class) {
    r.per_class[label] = scores_from_counts(c);
    total += c;
  }
  r.micro = scores_from_counts(total);
  return r;
}

}  // namespace

nlohmann::json EvalResult::to_json() const {
  nlohmann::json j = scores_json(micro);
  j["multi_event"] = multi_event;
  auto& pc = j["per_class"] = nlohmann::json::object();
  for (const auto& [label, s] : per_class) pc[label] = scores_json(s);
  return j;
}

nlohmann::json SetEvaluation::to_json() const {
  nlohmann::json j;
  j["seg_f1"] = all.micro.f1;
  j["seg_f1_me"] = multi_event ? nlohmann::json(multi_event->micro.f1) : nlohmann::json(nullptr);
  j["all"] = all.to_json();
  j["multi_event_subset"] = multi_event ? multi_event->to_json() : nlohmann::json(nullptr);
  return j;
}

EvalResult segment_f1(const SegmentGrid& reference, const SegmentGrid& hypothesis) {
  return result_from(class_counts(reference, hypothesis));
}

SetEvaluation evaluate_set(const std::vector<EvalPair>& pairs, double segment_length) {
  std::map<std::string, SegmentCounts> all, multi;
  bool any_multi = false;
  for (const auto& [ref, hyp] : pairs) {
    std::vector<std::string> labels;
    for (const auto* a : {&ref, &hyp})
      for (const auto& [label, _] : a->items)
        if (std::find(labels.begin(), labels.end(), label) == labels.end()) labels.push_back(label);
    double duration = ref.duration;
    if (!(duration > 0.0))
      for (const auto* a : {&ref, &hyp})
        for (const auto& [_, iv] : a->items) duration = std::max(duration, iv.offset);
    const auto counts = class_counts(segment_activity(ref, segment_length, duration, labels),
                                     segment_activity(hyp, segment_length, duration, labels));
    std::size_t ref_events = 0;
    for (const auto& l : labels)
      ref_events += std::any_of(ref.items.begin(), ref.items.end(),
                                [&](const auto& item) { return item.first == l; });
    for (const auto& [label, c] : counts) {
      all[label] += c;
      if (ref_events >= 2) multi[label] += c;
    }
    any_multi = any_multi || ref_events >= 2;
  }
  SetEvaluation out;
  out.all = result_from(all);
  if (any_multi) {
    out.multi_event = result_from(multi);
    out.multi_event->multi_event = true;
  }
  return out;
}

const std::vector<double>& EventTemplates::of(const std::string& label) const {
  const auto it = std::find(labels.begin(), labels.end(), label);
  if (it == labels.end()) throw Error(ErrorCode::kUnknownTemplate, "no template for '" + label + "'");
  return vectors[static_cast<std::size_t>(it - labels.begin())];
}

nlohmann::json EventTemplates::to_json() const {
  nlohmann::json j = nlohmann::json::array();
  for (std::size_t i = 0; i < labels.size(); ++i)
    j.push_back({{"label", labels[i]}, {"vector", vectors[i]}});
  return j;
}

EventTemplates EventTemplates::from_json(const nlohmann::json& j) {
  EventTemplates t;
  try {
    for (const auto& e : j) {
      t.labels.push_back(e.at("label").get<std::string>());
      t.vectors.push_back(e.at("vector").get<std::vector<double>>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kUnknownTemplate, std::string("malformed templates: ") + e.what());
  }
  if (t.labels.empty()) throw Error(ErrorCode::kUnknownTemplate, "template set is empty");
  for (const auto& v : t.vectors)
    if (v.size() != t.dim()) throw Error(ErrorCode::kUnknownTemplate, "templates differ in dimension");
  return t;
}

EventTemplates EventTemplates::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kFormat, path.string() + ": " + e.what());
  }
}

void EventTemplates::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << to_json().dump(2) << '\n';
}

EventTemplates make_orthonormal_templates(const std::vector<std::string>& labels, std::size_t dim,
                                          std::uint64_t seed) {
  if (labels.empty() || labels.size() > dim)
    throw Error(ErrorCode::kUnknownTemplate, "need between 1 and " + std::to_string(dim) + " labels");
  Rng rng(seed);
  EventTemplates t;
  t.labels = labels;
  while (t.vectors.size() < labels.size()) {
    std::vector<double> v(dim);
    for (double& x : v) x = rng.normal();
    for (const auto& u : t.vectors) {
      double d = 0.0;
      for (std::size_t k = 0; k < dim; ++k) d += v[k] * u[k];
      for (std::size_t k = 0; k < dim; ++k) v[k] -= d * u[k];
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm < 1e-6) continue;
    for (double& x : v) x /= norm;
    t.vectors.push_back(std::move(v));
  }
  return t;
}

Annotation detect_latent_events(const ad::Tensor& latent, const EventTemplates& templates,
                                const DetectorOptions& options) {
  if (templates.labels.empty() || templates.vectors.size() != templates.labels.size())
    throw Error(ErrorCode::kUnknownTemplate, "template set is empty or inconsistent");
  const std::size_t frames = latent.rows();
  const std::size_t dim = latent.cols();
  if (templates.dim() != dim)
    throw Error(ErrorCode::kUnknownTemplate, "template dimension " + std::to_string(templates.dim()) +
                                                 " does not match latent width " + std::to_string(dim));
  Annotation out;
  out.duration = static_cast<double>(frames) * options.frame_duration;
  const auto values = latent.values();
  for (std::size_t e = 0; e < templates.labels.size(); ++e) {
    const auto& tpl = templates.vectors[e];
    std::vector<bool> active(frames);
    for (std::size_t t = 0; t < frames; ++t) {
      double dot = 0.0;
      for (std::size_t k = 0; k < dim; ++k) dot += values[t * dim + k] * tpl[k];
      active[t] = dot > options.threshold;
    }
    // Fill short inactive gaps enclosed by active frames.
    std::size_t t = 0;
    while (t < frames) {
      if (active[t]) {
        ++t;
        continue;
      }
      std::size_t end = t;
      while (end < frames && !active[end]) ++end;
      if (t > 0 && end < frames && end - t < options.bridge_frames)
        std::fill(active.begin() + static_cast<long>(t), active.begin() + static_cast<long>(end), true);
      t = end;
    }
    for (t = 0; t < frames;) {
      if (!active[t]) {
        ++t;
        continue;
      }
      std::size_t end = t;
      while (end < frames && active[end]) ++end;
      out.items.emplace_back(templates.labels[e],
                             Interval{static_cast<double>(t) * options.frame_duration,
                                      static_cast<double>(end) * options.frame_duration});
      t = end;
    }
  }
  return out;
}

}  // namespace tcgen
