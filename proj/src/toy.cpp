#include "tcgen/toy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <unordered_map>

#include "tcgen/error.hpp"
#include "tcgen/timestamp.hpp"

namespace tcgen {

using ad::Tensor;

std::vector<std::string> ToyVocabulary::labels() const {
  std::vector<std::string> out;
  for (const auto& [label, _] : simulated.table()) out.push_back(label);
  return out;
}

const std::string& ToyVocabulary::label_of(const std::string& description) const {
  for (const auto* table : {&simulated, &real})
    for (const auto& [label, descs] : table->table())
      if (std::find(descs.begin(), descs.end(), description) != descs.end()) return label;
  throw Error(ErrorCode::kUnknownLabel, "no label for description '" + description + "'");
}

ToyVocabulary ToyVocabulary::standard() {
  ToyVocabulary v;
  v.simulated = MappingTable({
      {"bell", {"bell ringing", "a bell rings"}},
      {"dog", {"dog barking", "a dog barks"}},
      {"engine", {"engine idling", "an engine idles"}},
      {"rain", {"rain falling", "rain falls steadily"}},
      {"siren", {"siren wailing", "a siren wails"}},
      {"speech", {"man speaking", "a man speaks"}},
  });
  v.real = MappingTable({
      {"bell", {"church chimes toll", "bell tower chiming", "clanging of metal chimes"}},
      {"dog", {"a hound yelps loudly", "puppy yapping nearby", "dog howls outside"}},
      {"engine", {"motor rumbling", "truck revving its motor", "car engine starting"}},
      {"rain", {"heavy downpour", "raindrops pattering on a roof", "storm with drizzle"}},
      {"siren", {"police alarm blaring", "emergency vehicle sirens", "ambulance passing by"}},
      {"speech", {"woman talking", "people conversing", "a person speaks softly"}},
  });
  return v;
}

Tensor synthesize_latent(const Annotation& truth, const EventTemplates& templates,
                         std::size_t frames, double frame_duration, double noise, Rng* rng) {
  const std::size_t dim = templates.dim();
  std::vector<double> values(frames * dim, 0.0);
  for (const auto& [label, iv] : truth.items) {
    const auto& tpl = templates.of(label);
    for (std::size_t t = 0; t < frames; ++t) {
      const double c = frame_center(t, frame_duration);
      if (iv.onset <= c && c < iv.offset)
        for (std::size_t k = 0; k < dim; ++k) values[t * dim + k] += tpl[k];
    }
  }
  if (rng != nullptr && noise > 0.0)
    for (double& x : values) x += noise * rng->normal();
  return Tensor::from({frames, dim}, std::move(values));
}

namespace {

// Boundary k of the frame grid as a two-decimal time.
double grid_time(std::size_t k, double frame_duration) {
  return std::round(static_cast<double>(k) * frame_duration * 100.0) / 100.0;
}

struct DrawnEvent {
  std::string label;
  std::size_t start = 0;  // frames
  std::size_t end = 0;
};

std::vector<DrawnEvent> draw_events(const ToyDataConfig& cfg, const std::vector<std::string>& labels,
                                    std::size_t min_events, std::size_t max_events, bool disjoint,
                                    Rng& rng) {
  const std::size_t n = min_events + rng.below(max_events - min_events + 1);
  for (int attempt = 0; attempt < 10000; ++attempt) {
    std::vector<std::string> pool = labels;
    rng.shuffle(pool.begin(), pool.end());
    std::vector<DrawnEvent> events;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t len =
          cfg.min_event_frames + rng.below(cfg.max_event_frames - cfg.min_event_frames + 1);
      const std::size_t start = rng.below(cfg.frames - len + 1);
      events.push_back({pool[i], start, start + len});
    }
    if (!disjoint) return events;
    bool clash = false;
    for (std::size_t i = 0; i < n && !clash; ++i)
      for (std::size_t j = i + 1; j < n && !clash; ++j)
        clash = events[i].start < events[j].end && events[j].start < events[i].end;
    if (!clash) return events;
  }
  throw Error(ErrorCode::kInvalidScene, "could not place " + std::to_string(n) + " disjoint events");
}

Annotation to_annotation(const std::vector<DrawnEvent>& events, const ToyDataConfig& cfg) {
  Annotation a;
  a.duration = cfg.clip_seconds();
  for (const auto& e : events)
    a.items.emplace_back(e.label, Interval{grid_time(e.start, cfg.frame_duration),
                                           grid_time(e.end, cfg.frame_duration)});
  return a;
}

ToyClip make_clip(const std::string& id, Source source, const std::vector<DrawnEvent>& events,
                  const MappingTable& table, const ToyDataset& ds, bool with_tdc, Rng& rng) {
  const auto& cfg = ds.config;
  ToyClip clip;
  clip.truth = to_annotation(events, cfg);
  clip.latent = synthesize_latent(clip.truth, ds.templates, cfg.frames, cfg.frame_duration,
                                  cfg.noise, &rng);
  DataRecord& r = clip.record;
  r.id = id;
  r.audio_path = id + ".latent";
  r.duration = cfg.clip_seconds();
  r.source = source;
  std::vector<std::string> descriptions;
  TimedCaption tdc;
  tdc.duration = cfg.clip_seconds();
  for (const auto& [label, iv] : clip.truth.items) {
    descriptions.push_back(label_to_description(label, table, rng));
    tdc.events.push_back({descriptions.back(), {iv}});
    if (!r.tcc.empty()) r.tcc += " and ";
    r.tcc += descriptions.back();
  }
  r.events = descriptions;
  if (with_tdc) {
    tdc.validate();
    r.tdc = std::move(tdc);
    r.strength = Strength::kStrong;
  }
  r.extras["annotation"] = render_tdc(clip.truth.to_caption());
  return clip;
}

GroundingOutput noisy_grounding(const ToyClip& clip, const ToyDataConfig& cfg, Rng& rng) {
  GroundingOutput g;
  const auto& descs = *clip.record.events;
  const std::size_t last = cfg.frames;
  for (std::size_t i = 0; i < descs.size(); ++i) {
    const auto& iv = clip.truth.items[i].second;
    auto start = static_cast<std::size_t>(std::lround(iv.onset / cfg.frame_duration));
    auto end = static_cast<std::size_t>(std::lround(iv.offset / cfg.frame_duration));
    if (rng.bernoulli(cfg.jitter_rate)) {
      if (rng.bernoulli(0.5)) {
        if (rng.bernoulli(0.5) && start > 0) --start;
        else if (start + 1 < end) ++start;
      } else {
        if (rng.bernoulli(0.5) && end < last) ++end;
        else if (end > start + 1) --end;
      }
    }
    g[descs[i]].push_back({grid_time(start, cfg.frame_duration), grid_time(end, cfg.frame_duration)});
  }
  if (!descs.empty() && rng.bernoulli(cfg.omission_rate)) g[descs[rng.below(descs.size())]].clear();
  return g;
}

std::string clip_id(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%06zu", prefix, i);
  return buf;
}

}  // namespace

ToyDataset make_toy_dataset(const ToyDataConfig& config, std::uint64_t seed) {
  if (config.min_events == 0 || config.min_events > config.max_events ||
      config.test_min_events == 0 || config.test_min_events > config.test_max_events ||
      config.min_event_frames == 0 || config.min_event_frames > config.max_event_frames ||
      config.max_event_frames > config.frames)
    throw Error(ErrorCode::kInvalidScene, "inconsistent toy data configuration");
  ToyDataset ds;
  ds.config = config;
  ds.vocabulary = ToyVocabulary::standard();
  const auto labels = ds.vocabulary.labels();
  if (config.max_events > labels.size() || config.test_max_events > labels.size())
    throw Error(ErrorCode::kInvalidScene, "more events per clip than labels");
  ds.templates = make_orthonormal_templates(labels, config.latent_dim, derive_seed(seed, 0));

  for (std::size_t i = 0; i < config.simulated_clips; ++i) {
    Rng rng(derive_seed(derive_seed(seed, 1), i));
    const auto events = draw_events(config, labels, config.min_events, config.max_events, false, rng);
    ds.simulated.push_back(make_clip(clip_id("sim", i), Source::kSimulated, events,
                                     ds.vocabulary.simulated, ds, true, rng));
  }
  const std::size_t real_total = config.grounded_real_clips + config.caption_only_real_clips;
  for (std::size_t i = 0; i < real_total; ++i) {
    Rng rng(derive_seed(derive_seed(seed, 2), i));
    const auto events = draw_events(config, labels, config.min_events, config.max_events, false, rng);
    ds.real.push_back(make_clip(clip_id("real", i), Source::kReal, events, ds.vocabulary.real, ds,
                                false, rng));
    if (i < config.grounded_real_clips)
      ds.groundings[*ds.real.back().record.id] = noisy_grounding(ds.real.back(), config, rng);
  }
  for (std::size_t i = 0; i < config.test_clips; ++i) {
    Rng rng(derive_seed(derive_seed(seed, 3), i));
    const auto events =
        draw_events(config, labels, config.test_min_events, config.test_max_events, true, rng);
    ds.test.push_back(make_clip(clip_id("test", i), Source::kReal, events, ds.vocabulary.real, ds,
                                true, rng));
  }
  return ds;
}

std::string_view to_string(ToyArm arm) {
  switch (arm) {
    case ToyArm::kFull: return "full";
    case ToyArm::kWithoutTimestamps: return "without-timestamps";
    case ToyArm::kSimulatedOnly: return "simulated-only";
  }
  return "?";
}

ToyConditioner::ToyConditioner(std::size_t cond_dim, double frame_duration)
    : ToyConditioner(std::make_shared<StubEmbedder>(cond_dim), frame_duration) {}

ToyConditioner::ToyConditioner(std::shared_ptr<const Embedder> embedder, double frame_duration)
    : embedder_(std::move(embedder)), frame_duration_(frame_duration) {}

Tensor ToyConditioner::caption(const std::string& text) const {
  std::size_t tokens = 0;
  auto features = caption_features(text, *embedder_, &tokens);
  return Tensor::from({tokens, embedder_->dim()}, std::move(features));
}

Tensor ToyConditioner::timestamps(const TimedCaption& tdc) const {
  auto m = build_timestamp_matrix(tdc, *embedder_, frame_duration_, Execution::kSerial);
  return Tensor::from({m.frames, m.channels}, std::move(m.values));
}

TrainingItem ToyConditioner::item(const DataRecord& record, const Tensor& latent, ToyArm arm) const {
  TrainingItem item;
  item.latent = latent;
  if (arm == ToyArm::kWithoutTimestamps) {
    item.caption = caption(record.tdc ? render_tdc(*record.tdc) : record.tcc);
  } else {
    item.caption = caption(record.tcc);
    if (record.tdc) item.t_mat = timestamps(*record.tdc);
  }
  return item;
}

Tensor record_latent(const DataRecord& record, const EventTemplates& templates, std::size_t frames,
                     double frame_duration, double noise, Rng& rng) {
  const auto it = record.extras.find("annotation");
  if (it == record.extras.end() || !it->is_string())
    throw Error(ErrorCode::kSchemaViolation,
                "record '" + record.key() + "' has no label-level \"annotation\"");
  const double duration = record.duration.value_or(static_cast<double>(frames) * frame_duration);
  const auto truth = Annotation::from_caption(parse_tdc(it->get<std::string>(), duration));
  return synthesize_latent(truth, templates, frames, frame_duration, noise, &rng);
}

DiTModel train_toy_model(const std::vector<ToyExample>& strong, const std::vector<ToyExample>& weak,
                         ToyArm arm, const ToyTrainConfig& config, double frame_duration,
                         std::uint64_t seed, TrainLog* log) {
  if (strong.empty() && weak.empty()) throw Error(ErrorCode::kEmptyPool, "no training examples");
  DiTConfig mc = config.model;
  mc.frames = (strong.empty() ? weak : strong).front().latent.rows();
  mc.latent_dim = (strong.empty() ? weak : strong).front().latent.cols();
  mc.use_timestamps = arm != ToyArm::kWithoutTimestamps;
  DiTModel model(mc, derive_seed(seed, 10));
  const ToyConditioner cond(mc.cond_dim, frame_duration);

  std::unordered_map<std::string, TrainingItem> strong_items, weak_items;
  std::vector<DataRecord> strong_records, weak_records;
  for (const auto& e : strong) {
    strong_items.emplace(e.record.key(), cond.item(e.record, e.latent, arm));
    strong_records.push_back(e.record);
  }
  for (const auto& e : weak) {
    weak_items.emplace(e.record.key(), cond.item(e.record, e.latent, arm));
    weak_records.push_back(e.record);
  }

  std::optional<MixSampler> sampler;
  if (!strong.empty() && !weak.empty())
    sampler.emplace(weak_records, strong_records, config.ratio, derive_seed(seed, 11));
  const auto& only = strong.empty() ? weak_records : strong_records;
  auto& only_items = strong.empty() ? weak_items : strong_items;

  Rng rng(derive_seed(seed, 12));
  std::vector<std::size_t> order(only.size());
  std::size_t cursor = order.size();
  auto next_item = [&]() -> const TrainingItem& {
    if (sampler) {
      const DataRecord& r = sampler->next();
      const bool is_strong = r.strength == Strength::kStrong;
      if (log) ++(is_strong ? log->strong_draws : log->weak_draws);
      return (is_strong ? strong_items : weak_items).at(r.key());
    }
    if (cursor == order.size()) {
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      rng.shuffle(order.begin(), order.end());
      cursor = 0;
    }
    if (log) ++(strong.empty() ? log->weak_draws : log->strong_draws);
    return only_items.at(only[order[cursor++]].key());
  };

  Adam adam(model.parameters(), AdamConfig{.lr = config.lr, .total_steps = config.steps});
  std::vector<TrainingItem> batch;
  for (std::size_t step = 0; step < config.steps; ++step) {
    batch.clear();
    for (std::size_t b = 0; b < config.batch; ++b) batch.push_back(next_item());
    model.parameters().zero_grad();
    const double loss = training_step(model, batch, rng);
    adam.step();
    if (log) log->losses.push_back(loss);
  }
  return model;
}

DiTModel train_toy_arm(const ToyDataset& data, ToyArm arm, const ToyTrainConfig& config,
                       std::uint64_t seed, TrainLog* log) {
  std::vector<ToyExample> strong, weak;
  for (const auto& c : data.simulated) strong.push_back({c.record, c.latent});
  if (arm != ToyArm::kSimulatedOnly) {
    std::unordered_map<std::string, const Tensor*> latents;
    std::vector<DataRecord> grounded;
    for (const auto& c : data.real) {
      latents[c.record.key()] = &c.latent;
      if (data.groundings.count(c.record.key()))
        grounded.push_back(c.record);
      else
        weak.push_back({c.record, c.latent});
    }
    const auto curated = curate(grounded, data.groundings);
    for (const auto& r : curated.strong) strong.push_back({r, *latents.at(r.key())});
    for (const auto& r : curated.weak) weak.push_back({r, *latents.at(r.key())});
  }
  return train_toy_model(strong, weak, arm, config, data.config.frame_duration, seed, log);
}

SetEvaluation evaluate_toy_arm(const DiTModel& model, const ToyDataset& data, ToyArm arm,
                               const ToyTrainConfig& config, std::uint64_t seed) {
  const ToyConditioner cond(model.config().cond_dim, data.config.frame_duration);
  DetectorOptions detector = config.detector;
  detector.frame_duration = data.config.frame_duration;
  std::vector<EvalPair> pairs(data.test.size());
  const auto n = static_cast<long>(data.test.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    const auto& clip = data.test[static_cast<std::size_t>(i)];
    const TrainingItem item = cond.item(clip.record, clip.latent, arm);
    const SampleOptions options{config.sample_steps, config.cfg_scale,
                                derive_seed(seed, 1000 + static_cast<std::uint64_t>(i))};
    const Tensor sample = cfg_sample(model, &item.caption, item.t_mat.defined() ? &item.t_mat : nullptr,
                                     data.config.frames, options);
    pairs[static_cast<std::size_t>(i)] = {clip.truth, detect_latent_events(sample, data.templates, detector)};
  }
  return evaluate_set(pairs, config.segment_length);
}

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n == 0) return 0.0;
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

AblationSummary run_ablation(const std::vector<std::uint64_t>& seeds, const ToyDataConfig& data_config,
                             const ToyTrainConfig& train, const ProgressFn& progress) {
  AblationSummary summary;
  std::vector<double> full, without, sim_only;
  for (const std::uint64_t seed : seeds) {
    const ToyDataset data = make_toy_dataset(data_config, seed);
    AblationRun run;
    run.seed = seed;
    {
      std::vector<DataRecord> grounded;
      for (const auto& c : data.real)
        if (data.groundings.count(c.record.key())) grounded.push_back(c.record);
      run.curation = curate(grounded, data.groundings).report;
    }
    for (const ToyArm arm : {ToyArm::kFull, ToyArm::kWithoutTimestamps, ToyArm::kSimulatedOnly}) {
      TrainLog log;
      const DiTModel model = train_toy_arm(data, arm, train, seed, &log);
      const SetEvaluation eval = evaluate_toy_arm(model, data, arm, train, seed);
      ArmScore score{arm, eval.all.micro.f1, std::nullopt, 0.0};
      if (eval.multi_event) score.seg_f1_me = eval.multi_event->micro.f1;
      const std::size_t tail = std::min<std::size_t>(50, log.losses.size());
      for (std::size_t i = log.losses.size() - tail; i < log.losses.size(); ++i)
        score.final_loss += log.losses[i] / static_cast<double>(tail);
      run.arms.push_back(score);
      if (progress) {
        char line[160];
        std::snprintf(line, sizeof line, "seed %llu  %-18s  seg_f1 %.3f  loss %.4f",
                      static_cast<unsigned long long>(seed), std::string(to_string(arm)).c_str(),
                      score.seg_f1, score.final_loss);
        progress(line);
      }
    }
    full.push_back(run.arms[0].seg_f1);
    without.push_back(run.arms[1].seg_f1);
    sim_only.push_back(run.arms[2].seg_f1);
    summary.runs.push_back(std::move(run));
  }
  summary.median_full = median(full);
  summary.median_without_timestamps = median(without);
  summary.median_simulated_only = median(sim_only);
  return summary;
}

nlohmann::json AblationSummary::to_json() const {
  nlohmann::json j;
  auto& rs = j["runs"] = nlohmann::json::array();
  for (const auto& r : runs) {
    nlohmann::json jr{{"seed", r.seed},
                      {"curation",
                       {{"kept", r.curation.kept},
                        {"rejected_overlap", r.curation.rejected_overlap},
                        {"rejected_omission", r.curation.rejected_omission}}}};
    for (const auto& a : r.arms)
      jr["arms"][std::string(to_string(a.arm))] = {
          {"seg_f1", a.seg_f1},
          {"seg_f1_me", a.seg_f1_me ? nlohmann::json(*a.seg_f1_me) : nlohmann::json(nullptr)},
          {"final_loss", a.final_loss}};
    rs.push_back(std::move(jr));
  }
  j["median"] = {{"full", median_full},
                 {"without-timestamps", median_without_timestamps},
                 {"simulated-only", median_simulated_only}};
  j["timestamp_margin"] = timestamp_margin();
  j["data_margin"] = data_margin();
  return j;
}

std::string AblationSummary::table() const {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof line, "%-10s %10s %20s %16s\n", "seed", "full", "without-timestamps",
                "simulated-only");
  out += line;
  for (const auto& r : runs) {
    std::snprintf(line, sizeof line, "%-10llu %10.3f %20.3f %16.3f\n",
                  static_cast<unsigned long long>(r.seed), r.arms[0].seg_f1, r.arms[1].seg_f1,
                  r.arms[2].seg_f1);
    out += line;
  }
  std::snprintf(line, sizeof line, "%-10s %10.3f %20.3f %16.3f\n", "median", median_full,
                median_without_timestamps, median_simulated_only);
  out += line;
  std::snprintf(line, sizeof line, "margins: timestamps %+.3f, data %+.3f\n", timestamp_margin(),
                data_margin());
  out += line;
  return out;
}

}  // namespace tcgen
