#pragma once

// Toy latent world for end-to-end experiments. Each event label owns an
// orthonormal template in R^D; a clip's latent frame is the sum of the
// templates active at that frame plus Gaussian noise. Simulated clips are
// captioned from one description vocabulary and "real" clips from a
// paraphrase vocabulary, with timestamps coming from an imperfect grounding
// pass that curation has to filter.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tcgen/caption.hpp"
#include "tcgen/curation.hpp"
#include "tcgen/diffusion.hpp"
#include "tcgen/dit.hpp"
#include "tcgen/embedder.hpp"
#include "tcgen/metrics.hpp"
#include "tcgen/simulator.hpp"

namespace tcgen {

struct ToyVocabulary {
  MappingTable simulated;
  MappingTable real;

  std::vector<std::string> labels() const;
  /// Label of a description from either vocabulary; throws UnknownLabel.
  const std::string& label_of(const std::string& description) const;

  static ToyVocabulary standard();
};

struct ToyDataConfig {
  std::size_t frames = 32;
  double frame_duration = 0.2;
  std::size_t latent_dim = 8;
  std::size_t simulated_clips = 300;
  std::size_t grounded_real_clips = 200;
  std::size_t caption_only_real_clips = 100;
  std::size_t test_clips = 48;
  std::size_t min_events = 1;
  std::size_t max_events = 4;
  std::size_t test_min_events = 2;
  std::size_t test_max_events = 4;
  std::size_t min_event_frames = 3;
  std::size_t max_event_frames = 10;
  double noise = 0.05;
  /// Probability that the grounding pass misses one event of a clip.
  double omission_rate = 0.15;
  /// Probability that a grounded interval boundary is off by one frame.
  double jitter_rate = 0.3;

  double clip_seconds() const { return static_cast<double>(frames) * frame_duration; }
};

struct ToyClip {
  DataRecord record;
  Annotation truth;  // label-level ground truth
  ad::Tensor latent; // (frames, latent_dim)
};

struct ToyDataset {
  ToyDataConfig config;
  ToyVocabulary vocabulary;
  EventTemplates templates;
  std::vector<ToyClip> simulated;
  std::vector<ToyClip> real;  // grounded first, then caption-only
  std::map<std::string, GroundingOutput> groundings;
  std::vector<ToyClip> test;

  std::size_t training_clips() const { return simulated.size() + real.size(); }
};

/// Sum of the templates active at each frame center, plus N(0, noise^2)
/// per element when `rng` is given.
ad::Tensor synthesize_latent(const Annotation& truth, const EventTemplates& templates,
                             std::size_t frames, double frame_duration, double noise = 0.0,
                             Rng* rng = nullptr);

ToyDataset make_toy_dataset(const ToyDataConfig& config, std::uint64_t seed);

enum class ToyArm { kFull, kWithoutTimestamps, kSimulatedOnly };
std::string_view to_string(ToyArm arm);

struct ToyTrainConfig {
  DiTConfig model = DiTConfig::toy();
  std::size_t steps = 1500;
  std::size_t batch = 8;
  double lr = 2e-3;
  MixRatio ratio;
  std::size_t sample_steps = 20;
  double cfg_scale = 7.5;
  DetectorOptions detector;
  double segment_length = kDefaultSegmentSeconds;
};

/// Turns records into model conditioning with a stub embedder of width
/// cond_dim.
class ToyConditioner {
 public:
  ToyConditioner(std::size_t cond_dim, double frame_duration);
  ToyConditioner(std::shared_ptr<const Embedder> embedder, double frame_duration);
  ad::Tensor caption(const std::string& text) const;
  ad::Tensor timestamps(const TimedCaption& tdc) const;
  /// Conditioning the arm sees for a record.
  TrainingItem item(const DataRecord& record, const ad::Tensor& latent, ToyArm arm) const;

 private:
  std::shared_ptr<const Embedder> embedder_;
  double frame_duration_;
};

struct TrainLog {
  std::vector<double> losses;
  std::size_t strong_draws = 0;
  std::size_t weak_draws = 0;
};

struct ToyExample {
  DataRecord record;
  ad::Tensor latent;
};

/// Trains on strong and weak examples drawn in `config.ratio`; with no weak
/// examples it cycles over reshuffled passes of the strong ones.
DiTModel train_toy_model(const std::vector<ToyExample>& strong, const std::vector<ToyExample>& weak,
                         ToyArm arm, const ToyTrainConfig& config, double frame_duration,
                         std::uint64_t seed, TrainLog* log = nullptr);

/// Latent of a record whose "annotation" extra holds its label-level
/// timed caption; throws SchemaViolation when the extra is missing.
ad::Tensor record_latent(const DataRecord& record, const EventTemplates& templates,
                         std::size_t frames, double frame_duration, double noise, Rng& rng);

/// Trains one arm. kFull and kWithoutTimestamps draw from the curated
/// weak/strong mix; kSimulatedOnly cycles over the simulated clips only.
DiTModel train_toy_arm(const ToyDataset& data, ToyArm arm, const ToyTrainConfig& config,
                       std::uint64_t seed, TrainLog* log = nullptr);

/// Samples every test clip with guidance and scores the detected events.
SetEvaluation evaluate_toy_arm(const DiTModel& model, const ToyDataset& data, ToyArm arm,
                               const ToyTrainConfig& config, std::uint64_t seed);

struct ArmScore {
  ToyArm arm;
  double seg_f1 = 0.0;
  std::optional<double> seg_f1_me;
  double final_loss = 0.0;
};

struct AblationRun {
  std::uint64_t seed = 0;
  std::vector<ArmScore> arms;  // full, w/o T, simulated-only
  CurationReport curation;
};

struct AblationSummary {
  std::vector<AblationRun> runs;
  double median_full = 0.0;
  double median_without_timestamps = 0.0;
  double median_simulated_only = 0.0;

  double timestamp_margin() const { return median_full - median_without_timestamps; }
  double data_margin() const { return median_full - median_simulated_only; }
  nlohmann::json to_json() const;
  std::string table() const;
};

using ProgressFn = std::function<void(const std::string&)>;

AblationSummary run_ablation(const std::vector<std::uint64_t>& seeds, const ToyDataConfig& data,
                             const ToyTrainConfig& train, const ProgressFn& progress = {});

}  // namespace tcgen
