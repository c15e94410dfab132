// Command-line front end: simulate, filter, encode, train-toy, sample, eval,
// eval-latents and ablate.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tcgen/caption.hpp"
#include "tcgen/checkpoint.hpp"
#include "tcgen/config.hpp"
#include "tcgen/curation.hpp"
#include "tcgen/embedder.hpp"
#include "tcgen/error.hpp"
#include "tcgen/metrics.hpp"
#include "tcgen/provenance.hpp"
#include "tcgen/simulator.hpp"
#include "tcgen/timestamp.hpp"
#include "tcgen/toy.hpp"

namespace fs = std::filesystem;
using namespace tcgen;

namespace {

constexpr double kToyLatentNoise = 0.05;

struct Globals {
  std::string config_path;
  std::vector<std::string> overrides;

  PipelineConfig load() const { return load_config(config_path, overrides); }
};

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::string safe_name(std::string key) {
  for (char& c : key)
    if (c == '/' || c == '\\' || c == ':' || c == ' ') c = '_';
  return key;
}

ToyArm parse_arm(const std::string& name) {
  for (const ToyArm arm : {ToyArm::kFull, ToyArm::kWithoutTimestamps, ToyArm::kSimulatedOnly})
    if (to_string(arm) == name) return arm;
  throw Error(ErrorCode::kTypeError, "unknown arm '" + name + "'");
}

ToyTrainConfig train_config_from(const PipelineConfig& c) {
  ToyTrainConfig t;
  t.model = DiTConfig::preset(c.model);
  t.steps = c.train_steps;
  t.batch = c.batch;
  t.lr = c.lr;
  t.ratio = c.mix_ratio;
  t.sample_steps = c.sample_steps;
  t.cfg_scale = c.cfg_scale;
  t.segment_length = c.segment_sec;
  return t;
}

/// Label-level annotation of a record: the "annotation" extra when present,
/// otherwise its timed caption.
Annotation record_annotation(const DataRecord& r) {
  const double duration = r.duration.value_or(r.tdc ? r.tdc->duration : 0.0);
  const auto it = r.extras.find("annotation");
  if (it != r.extras.end() && it->is_string())
    return Annotation::from_caption(
        parse_tdc(it->get<std::string>(), duration > 0.0 ? std::optional(duration) : std::nullopt));
  if (r.tdc) return Annotation::from_caption(*r.tdc);
  throw Error(ErrorCode::kSchemaViolation, "record '" + r.key() + "' has no timestamps to evaluate");
}

std::shared_ptr<const Embedder> make_embedder(const std::string& path, std::size_t dim) {
  if (path.empty()) return std::make_shared<StubEmbedder>(dim);
  auto e = std::make_shared<FileEmbedder>(FileEmbedder::load(path));
  if (e->dim() != dim)
    throw Error(ErrorCode::kEmbedderFailure, "embedding file has width " + std::to_string(e->dim()) +
                                                 ", expected " + std::to_string(dim));
  return e;
}

// ---- simulate ---------------------------------------------------------------

struct SimulateArgs {
  std::string bank, mapping, out_dir;
  std::size_t n = 100;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> max_events;
  bool disjoint_only = false;
  bool no_audio = false;
  bool serial = false;
};

int run_simulate(const Globals& g, const SimulateArgs& a) {
  PipelineConfig cfg = g.load();
  if (a.seed) cfg.seed = *a.seed;
  if (a.max_events) cfg.max_events = *a.max_events;
  if (a.disjoint_only) cfg.disjoint_only = true;
  cfg.validate();
  const EventBank bank = EventBank::load(a.bank);
  const MappingTable table = MappingTable::load(a.mapping);
  SimulationConfig sc;
  sc.out_dir = a.out_dir;
  sc.clip_seconds = cfg.clip_seconds;
  sc.min_events = cfg.min_events;
  sc.max_events = cfg.max_events;
  sc.disjoint_only = cfg.disjoint_only;
  sc.write_audio = !a.no_audio;
  sc.execution = a.serial ? Execution::kSerial : Execution::kParallel;
  fs::create_directories(a.out_dir);
  const auto records = generate_dataset(a.n, sc, bank, table, cfg.seed);
  const fs::path manifest = fs::path(a.out_dir) / "manifest.jsonl";
  write_manifest(records, manifest);
  Provenance p{"simulate", cfg.to_json(), cfg.seed, {a.bank, a.mapping}, {manifest}};
  if (sc.write_audio)
    for (const auto& r : records) p.outputs.push_back(fs::path(a.out_dir) / r.audio_path);
  write_provenance(manifest, p);
  std::printf("wrote %zu records to %s\n", records.size(), manifest.string().c_str());
  return 0;
}

// ---- filter -----------------------------------------------------------------

struct FilterArgs {
  std::string manifest, groundings, out, report;
};

int run_filter(const Globals& g, const FilterArgs& a) {
  const PipelineConfig cfg = g.load();
  const auto records = read_manifest(a.manifest);
  const auto groundings = read_groundings(a.groundings);
  const auto result = curate(records, groundings);
  std::vector<DataRecord> out = result.strong;
  out.insert(out.end(), result.weak.begin(), result.weak.end());
  write_manifest(out, a.out);
  const fs::path report = a.report.empty() ? fs::path(a.out + ".report.json") : fs::path(a.report);
  nlohmann::json j{{"kept", result.report.kept},
                   {"rejected_overlap", result.report.rejected_overlap},
                   {"rejected_omission", result.report.rejected_omission},
                   {"strong", result.strong.size()},
                   {"weak", result.weak.size()}};
  for (const auto& e : result.report.entries)
    j["entries"].push_back({{"key", e.key}, {"verdict", to_string(e.verdict)}, {"reason", e.reason}});
  write_json(report, j);
  write_provenance(a.out, {"filter", cfg.to_json(), cfg.seed, {a.manifest, a.groundings}, {a.out, report}});
  std::printf("kept %zu, rejected %zu (overlap) + %zu (omission); %zu strong, %zu weak\n",
              result.report.kept, result.report.rejected_overlap, result.report.rejected_omission,
              result.strong.size(), result.weak.size());
  return 0;
}

// ---- encode -----------------------------------------------------------------

struct EncodeArgs {
  std::string manifest, out_dir, embeddings, tdc, out;
  std::optional<double> frame_ms;
  std::size_t dim = 32;
  bool serial = false;
};

int run_encode(const Globals& g, const EncodeArgs& a) {
  PipelineConfig cfg = g.load();
  if (a.frame_ms) cfg.frame_ms = *a.frame_ms;
  cfg.validate();
  const auto embedder = make_embedder(a.embeddings, a.dim);
  if (!a.tdc.empty()) {
    if (a.out.empty()) throw Error(ErrorCode::kTypeError, "--tdc needs --out");
    const auto caption = parse_tdc(a.tdc, cfg.clip_seconds);
    const auto m = build_timestamp_matrix(caption, *embedder, cfg.frame_seconds(),
                                          a.serial ? Execution::kSerial : Execution::kParallel);
    write_frame_matrix(to_file(m), a.out);
    nlohmann::json pc = cfg.to_json();
    pc["tdc"] = a.tdc;
    pc["dim"] = embedder->dim();
    Provenance p{"encode", pc, cfg.seed, {}, {a.out}};
    if (!a.embeddings.empty()) p.inputs.push_back(a.embeddings);
    write_provenance(a.out, p);
    std::printf("wrote %zu x %zu matrix to %s\n", m.frames, m.channels, a.out.c_str());
    return 0;
  }
  if (a.manifest.empty() || a.out_dir.empty())
    throw Error(ErrorCode::kTypeError, "encode needs --tdc and --out, or --manifest and --out-dir");
  const auto records = read_manifest(a.manifest);
  fs::create_directories(a.out_dir);
  const fs::path index = fs::path(a.out_dir) / "index.jsonl";
  std::ofstream idx(index, std::ios::trunc);
  if (!idx) throw Error(ErrorCode::kIo, "cannot write " + index.string());
  Provenance p{"encode", cfg.to_json(), cfg.seed, {a.manifest}, {index}};
  if (!a.embeddings.empty()) p.inputs.push_back(a.embeddings);
  for (const auto& r : records) {
    TimestampMatrix m;
    if (r.tdc) {
      m = build_timestamp_matrix(*r.tdc, *embedder, cfg.frame_seconds(),
                                 a.serial ? Execution::kSerial : Execution::kParallel);
    } else {
      m = coarse_placeholder(r.duration.value_or(cfg.clip_seconds), cfg.frame_seconds(), embedder->dim());
    }
    const fs::path file = fs::path(a.out_dir) / (safe_name(r.key()) + ".tsmx");
    write_frame_matrix(to_file(m), file);
    nlohmann::ordered_json line{{"key", r.key()},
                                {"path", file.filename().string()},
                                {"frames", m.frames},
                                {"channels", m.channels},
                                {"frame_ms", cfg.frame_ms},
                                {"placeholder", !r.tdc.has_value()}};
    idx << line.dump() << '\n';
    p.outputs.push_back(file);
  }
  idx.close();
  write_provenance(index, p);
  std::printf("encoded %zu records into %s\n", records.size(), a.out_dir.c_str());
  return 0;
}

// ---- train-toy --------------------------------------------------------------

struct TrainArgs {
  std::string manifest, ckpt, templates, arm = "full";
  std::optional<std::size_t> steps;
  std::optional<std::uint64_t> seed;
};

int run_train(const Globals& g, const TrainArgs& a) {
  PipelineConfig cfg = g.load();
  if (a.steps) cfg.train_steps = *a.steps;
  if (a.seed) cfg.seed = *a.seed;
  const ToyArm arm = parse_arm(a.arm);
  const auto records = read_manifest(a.manifest);
  fs::path templates_path = a.templates;
  EventTemplates templates;
  if (!templates_path.empty() && fs::exists(templates_path)) {
    templates = EventTemplates::load(templates_path);
  } else {
    std::vector<std::string> labels;
    for (const auto& r : records)
      for (const auto& [label, _] : record_annotation(r).items)
        if (std::find(labels.begin(), labels.end(), label) == labels.end()) labels.push_back(label);
    std::sort(labels.begin(), labels.end());
    templates = make_orthonormal_templates(labels, std::max<std::size_t>(8, labels.size()),
                                           derive_seed(cfg.seed, 0));
    if (templates_path.empty()) templates_path = a.ckpt + ".templates.json";
    templates.save(templates_path);
  }
  const std::size_t frames = frame_count(cfg.clip_seconds, cfg.frame_seconds());
  std::vector<ToyExample> strong, weak;
  for (std::size_t i = 0; i < records.size(); ++i) {
    Rng rng(derive_seed(derive_seed(cfg.seed, 1), i));
    const auto& r = records[i];
    auto latent = record_latent(r, templates, frames, cfg.frame_seconds(), kToyLatentNoise, rng);
    (r.strength == Strength::kStrong ? strong : weak).push_back({r, std::move(latent)});
  }
  if (arm == ToyArm::kSimulatedOnly) {
    std::erase_if(strong, [](const ToyExample& e) { return e.record.source != Source::kSimulated; });
    weak.clear();
  }
  TrainLog log;
  const DiTModel model =
      train_toy_model(strong, weak, arm, train_config_from(cfg), cfg.frame_seconds(), cfg.seed, &log);
  nlohmann::json meta{{"arm", to_string(arm)},
                      {"frame_duration", cfg.frame_seconds()},
                      {"templates", fs::path(templates_path).filename().string()},
                      {"seed", cfg.seed},
                      {"final_loss", log.losses.empty() ? 0.0 : log.losses.back()}};
  save_checkpoint(model, a.ckpt, meta);
  write_provenance(a.ckpt, {"train-toy", cfg.to_json(), cfg.seed, {a.manifest, templates_path}, {a.ckpt}});
  std::printf("trained %zu steps (%zu strong / %zu weak draws), final loss %.5f -> %s\n",
              cfg.train_steps, log.strong_draws, log.weak_draws, log.losses.back(), a.ckpt.c_str());
  return 0;
}

struct LoadedModel {
  DiTModel model;
  ToyArm arm;
  double frame_duration;
  fs::path templates;
};

LoadedModel open_checkpoint(const fs::path& path) {
  nlohmann::json meta;
  DiTModel model = load_checkpoint(path, &meta);
  const ToyArm arm = parse_arm(meta.value("arm", std::string("full")));
  const double frame = meta.value("frame_duration", kDefaultFrameSeconds);
  fs::path templates;
  if (meta.contains("templates")) templates = path.parent_path() / meta["templates"].get<std::string>();
  return {std::move(model), arm, frame, templates};
}

// ---- sample -----------------------------------------------------------------

struct SampleArgs {
  std::string ckpt, tdc, tcc, out, embeddings;
  std::optional<std::size_t> steps;
  std::optional<double> scale;
  std::optional<std::uint64_t> seed;
};

int run_sample(const Globals& g, const SampleArgs& a) {
  PipelineConfig cfg = g.load();
  if (a.seed) cfg.seed = *a.seed;
  if (a.tdc.empty() && a.tcc.empty())
    throw Error(ErrorCode::kTypeError, "sample needs --tdc or --tcc");
  const LoadedModel lm = open_checkpoint(a.ckpt);
  const std::size_t frames = lm.model.config().frames;
  const double duration = static_cast<double>(frames) * lm.frame_duration;
  DataRecord r;
  r.audio_path = "sample";
  if (!a.tdc.empty()) {
    r.tdc = parse_tdc(a.tdc, duration);
    r.strength = Strength::kStrong;
    if (a.tcc.empty())
      for (const auto& e : r.tdc->events) r.tcc += (r.tcc.empty() ? "" : " and ") + e.description;
  }
  if (!a.tcc.empty()) r.tcc = a.tcc;
  const ToyConditioner cond(make_embedder(a.embeddings, lm.model.config().cond_dim), lm.frame_duration);
  const TrainingItem item = cond.item(r, ad::Tensor(), lm.arm);
  const SampleOptions options{a.steps.value_or(cfg.sample_steps), a.scale.value_or(cfg.cfg_scale), cfg.seed};
  const ad::Tensor latent = cfg_sample(lm.model, &item.caption,
                                       item.t_mat.defined() ? &item.t_mat : nullptr, frames, options);
  FrameMatrixFile f;
  f.frames = latent.rows();
  f.channels = latent.cols();
  f.frame_ms = static_cast<float>(lm.frame_duration * 1000.0);
  f.values.assign(latent.values().begin(), latent.values().end());
  write_frame_matrix(f, a.out);
  nlohmann::json pc = cfg.to_json();
  pc["tdc"] = a.tdc;
  pc["tcc"] = r.tcc;
  pc["steps"] = options.steps;
  pc["scale"] = options.scale;
  write_provenance(a.out, {"sample", pc, cfg.seed, {a.ckpt}, {a.out}});
  std::printf("wrote %zu x %zu latent to %s\n", f.frames, f.channels, a.out.c_str());
  return 0;
}

// ---- eval -------------------------------------------------------------------

struct EvalArgs {
  std::string ref, hyp, report = "json", out;
  std::optional<double> segment;
};

void emit_report(const SetEvaluation& eval, const std::string& format, const std::string& out) {
  std::string text;
  if (format == "json") {
    text = eval.to_json().dump(2) + "\n";
  } else {
    char line[160];
    std::snprintf(line, sizeof line, "Seg-F1     %.4f  (P %.4f, R %.4f)\n", eval.all.micro.f1,
                  eval.all.micro.precision, eval.all.micro.recall);
    text = line;
    if (eval.multi_event) {
      std::snprintf(line, sizeof line, "Seg-F1-ME  %.4f\n", eval.multi_event->micro.f1);
      text += line;
    } else {
      text += "Seg-F1-ME  n/a (no multi-event references)\n";
    }
  }
  std::fputs(text.c_str(), stdout);
  if (!out.empty()) {
    std::ofstream f(out, std::ios::trunc);
    if (!f) throw Error(ErrorCode::kIo, "cannot write " + out);
    f << text;
  }
}

int run_eval(const Globals& g, const EvalArgs& a) {
  const PipelineConfig cfg = g.load();
  if (a.report != "json" && a.report != "text")
    throw Error(ErrorCode::kTypeError, "--report must be json or text");
  const auto refs = read_manifest(a.ref);
  const auto hyps = read_manifest(a.hyp);
  std::map<std::string, const DataRecord*> by_key;
  for (const auto& h : hyps) by_key[h.key()] = &h;
  std::vector<EvalPair> pairs;
  for (const auto& r : refs) {
    const auto it = by_key.find(r.key());
    if (it == by_key.end())
      throw Error(ErrorCode::kSchemaViolation, "hypothesis manifest has no record '" + r.key() + "'");
    EvalPair p{record_annotation(r), record_annotation(*it->second)};
    p.hypothesis.duration = p.reference.duration;
    pairs.push_back(std::move(p));
  }
  const auto eval = evaluate_set(pairs, a.segment.value_or(cfg.segment_sec));
  emit_report(eval, a.report, a.out);
  if (!a.out.empty()) write_provenance(a.out, {"eval", cfg.to_json(), cfg.seed, {a.ref, a.hyp}, {a.out}});
  return 0;
}

// ---- eval-latents -----------------------------------------------------------

struct EvalLatentsArgs {
  std::string ckpt, test, templates, report = "json", out;
  std::optional<std::size_t> steps;
  std::optional<double> scale;
  std::optional<std::uint64_t> seed;
};

int run_eval_latents(const Globals& g, const EvalLatentsArgs& a) {
  PipelineConfig cfg = g.load();
  if (a.seed) cfg.seed = *a.seed;
  const LoadedModel lm = open_checkpoint(a.ckpt);
  const fs::path templates_path = a.templates.empty() ? lm.templates : fs::path(a.templates);
  if (templates_path.empty()) throw Error(ErrorCode::kUnknownTemplate, "no template file given");
  const EventTemplates templates = EventTemplates::load(templates_path);
  const auto records = read_manifest(a.test);
  const std::size_t frames = lm.model.config().frames;
  const ToyConditioner cond(lm.model.config().cond_dim, lm.frame_duration);
  DetectorOptions detector;
  detector.frame_duration = lm.frame_duration;
  std::vector<EvalPair> pairs;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const TrainingItem item = cond.item(r, ad::Tensor(), lm.arm);
    const SampleOptions options{a.steps.value_or(cfg.sample_steps), a.scale.value_or(cfg.cfg_scale),
                                derive_seed(cfg.seed, 1000 + i)};
    const ad::Tensor latent = cfg_sample(lm.model, &item.caption,
                                         item.t_mat.defined() ? &item.t_mat : nullptr, frames, options);
    pairs.push_back({record_annotation(r), detect_latent_events(latent, templates, detector)});
  }
  const auto eval = evaluate_set(pairs, cfg.segment_sec);
  emit_report(eval, a.report, a.out);
  if (!a.out.empty())
    write_provenance(a.out, {"eval-latents", cfg.to_json(), cfg.seed, {a.ckpt, a.test, templates_path}, {a.out}});
  return 0;
}

// ---- ablate -----------------------------------------------------------------

struct AblateArgs {
  std::uint64_t seed = 7;
  std::size_t seeds = 3;
  std::optional<std::size_t> steps;
  std::optional<double> scale;
  std::string out, export_dir;
};

void export_toy_data(const ToyDataset& data, const fs::path& dir) {
  fs::create_directories(dir);
  std::vector<DataRecord> grounded, train;
  for (const auto& c : data.simulated) train.push_back(c.record);
  for (const auto& c : data.real) {
    if (data.groundings.count(c.record.key()))
      grounded.push_back(c.record);
    else
      train.push_back(c.record);
  }
  const auto curated = curate(grounded, data.groundings);
  train.insert(train.end(), curated.strong.begin(), curated.strong.end());
  train.insert(train.end(), curated.weak.begin(), curated.weak.end());
  write_manifest(train, dir / "train.jsonl");
  std::vector<DataRecord> test;
  for (const auto& c : data.test) test.push_back(c.record);
  write_manifest(test, dir / "test.jsonl");
  data.templates.save(dir / "templates.json");
  std::ofstream cfg(dir / "toy.cfg", std::ios::trunc);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", data.config.frame_duration * 1000.0);
  cfg << "# settings matching the exported toy data\nmodel = \"toy\"\nframe_ms = " << buf
      << "\nclip_seconds = " << data.config.clip_seconds() << "\nlr = 0.002\nsample_steps = 20\n";
}

int run_ablate(const Globals& g, const AblateArgs& a) {
  const PipelineConfig cfg = g.load();
  ToyTrainConfig train;
  if (a.steps) train.steps = *a.steps;
  if (a.scale) train.cfg_scale = *a.scale;
  train.ratio = cfg.mix_ratio;
  std::vector<std::uint64_t> seeds;
  for (std::size_t i = 0; i < a.seeds; ++i) seeds.push_back(a.seed + i);
  if (!a.export_dir.empty()) export_toy_data(make_toy_dataset(ToyDataConfig{}, a.seed), a.export_dir);
  const auto summary = run_ablation(seeds, ToyDataConfig{}, train,
                                    [](const std::string& line) { std::fprintf(stderr, "%s\n", line.c_str()); });
  std::fputs(summary.table().c_str(), stdout);
  if (!a.out.empty()) {
    fs::create_directories(a.out);
    const fs::path report = fs::path(a.out) / "ablation.json";
    write_json(report, summary.to_json());
    nlohmann::json pc = cfg.to_json();
    pc["train_steps"] = train.steps;
    pc["cfg_scale"] = train.cfg_scale;
    pc["seeds"] = seeds;
    write_provenance(report, {"ablate", pc, a.seed, {}, {report}});
  }
  return 0;
}

bool is_config_error(ErrorCode c) {
  return c == ErrorCode::kUnknownKey || c == ErrorCode::kTypeError || c == ErrorCode::kConfigParse;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Timestamp-conditioned audio generation toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, "key = value configuration file");
  app.add_option("--set", g.overrides, "override a configuration key (key=value)");

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "mix single-event clips into timed scenes");
  simulate->add_option("--bank", sim.bank, "event bank descriptor (JSONL)")->required();
  simulate->add_option("--mapping", sim.mapping, "label -> descriptions table (JSON)")->required();
  simulate->add_option("--out-dir", sim.out_dir, "output directory")->required();
  simulate->add_option("-n,--n,--count", sim.n, "number of scenes");
  simulate->add_option("--max-events", sim.max_events, "events per scene upper bound");
  simulate->add_flag("--disjoint-only", sim.disjoint_only, "resample until events do not overlap");
  simulate->add_option("--seed", sim.seed, "random seed (overrides config)");
  simulate->add_flag("--no-audio", sim.no_audio, "write the manifest only");
  simulate->add_flag("--serial", sim.serial, "use the serial reference path");

  FilterArgs flt;
  auto* filter = app.add_subcommand("filter", "curate real records with grounding output");
  filter->add_option("--manifest", flt.manifest)->required();
  filter->add_option("--groundings", flt.groundings, "grounding JSON")->required();
  filter->add_option("--out", flt.out, "curated manifest")->required();
  filter->add_option("--report", flt.report, "curation report (JSON)");

  EncodeArgs enc;
  auto* encode = app.add_subcommand("encode", "write timestamp matrices for a manifest");
  encode->add_option("--manifest", enc.manifest, "encode every record of a manifest");
  encode->add_option("--out-dir", enc.out_dir, "directory for per-record matrices");
  encode->add_option("--tdc", enc.tdc, "encode a single timed caption");
  encode->add_option("--out", enc.out, "matrix file for --tdc");
  encode->add_option("--frame-ms", enc.frame_ms, "frame length in milliseconds");
  encode->add_option("--embeddings", enc.embeddings, "precomputed embeddings (JSONL)");
  encode->add_option("--dim", enc.dim, "stub embedder width");
  encode->add_flag("--serial", enc.serial, "use the serial reference path");

  TrainArgs tr;
  auto* train = app.add_subcommand("train-toy", "train a denoiser on toy latents");
  train->add_option("--manifest", tr.manifest)->required();
  train->add_option("--ckpt", tr.ckpt, "checkpoint to write")->required();
  train->add_option("--templates", tr.templates, "event templates (JSON)");
  train->add_option("--steps", tr.steps);
  train->add_option("--seed", tr.seed);
  train->add_option("--arm", tr.arm, "full | without-timestamps | simulated-only");

  SampleArgs sa;
  auto* sample = app.add_subcommand("sample", "generate a latent with guidance");
  sample->add_option("--ckpt", sa.ckpt)->required();
  sample->add_option("--tdc", sa.tdc, "timed caption");
  sample->add_option("--tcc,--tcc-embed", sa.tcc, "caption without timestamps");
  sample->add_option("--embeddings", sa.embeddings, "precomputed embeddings (JSONL)");
  sample->add_option("--steps", sa.steps);
  sample->add_option("--scale", sa.scale);
  sample->add_option("--seed", sa.seed);
  sample->add_option("--out", sa.out, "latent frame matrix to write")->required();

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "segment-based F1 between two manifests");
  eval->add_option("--ref-manifest", ev.ref)->required();
  eval->add_option("--hyp-manifest", ev.hyp)->required();
  eval->add_option("--segment-sec", ev.segment);
  eval->add_option("--report", ev.report, "json | text");
  eval->add_option("--out", ev.out, "also write the report here");

  EvalLatentsArgs el;
  auto* eval_latents = app.add_subcommand("eval-latents", "sample a test set and score detected events");
  eval_latents->add_option("--ckpt", el.ckpt)->required();
  eval_latents->add_option("--test-manifest", el.test)->required();
  eval_latents->add_option("--templates", el.templates);
  eval_latents->add_option("--steps", el.steps);
  eval_latents->add_option("--scale", el.scale);
  eval_latents->add_option("--seed", el.seed);
  eval_latents->add_option("--report", el.report, "json | text");
  eval_latents->add_option("--out", el.out);

  AblateArgs ab;
  auto* ablate = app.add_subcommand("ablate", "three-arm toy experiment");
  ablate->add_option("--seed", ab.seed, "first seed");
  ablate->add_option("--seeds", ab.seeds, "number of consecutive seeds");
  ablate->add_option("--steps", ab.steps, "training steps per arm");
  ablate->add_option("--scale", ab.scale, "guidance scale");
  ablate->add_option("--out", ab.out, "directory for ablation.json");
  ablate->add_option("--export", ab.export_dir, "also write the first seed's toy data here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (*simulate) return run_simulate(g, sim);
    if (*filter) return run_filter(g, flt);
    if (*encode) return run_encode(g, enc);
    if (*train) return run_train(g, tr);
    if (*sample) return run_sample(g, sa);
    if (*eval) return run_eval(g, ev);
    if (*eval_latents) return run_eval_latents(g, el);
    if (*ablate) return run_ablate(g, ab);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return is_config_error(e.code()) ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
