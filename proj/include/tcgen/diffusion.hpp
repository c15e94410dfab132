#pragma once

// Cosine variance-preserving schedule, velocity parameterization, the
// training objective, Adam, and a deterministic guided DDIM sampler.
//
//   x_t = alpha(t) x0 + sigma(t) eps,   v = alpha(t) eps - sigma(t) x0

#include <cstdint>
#include <span>
#include <vector>

#include "tcgen/dit.hpp"
#include "tcgen/random.hpp"
#include "tcgen/tensor.hpp"

namespace tcgen {

struct ScheduleValues {
  double alpha = 1.0;
  double sigma = 0.0;
};

/// alpha = cos(pi t / 2), sigma = sin(pi t / 2); the endpoints are exact.
ScheduleValues noise_schedule(double t);

// Value-level algebra (no graph is recorded).
ad::Tensor noisy_latent(const ad::Tensor& x0, const ad::Tensor& eps, double t);
ad::Tensor velocity_target(const ad::Tensor& x0, const ad::Tensor& eps, double t);
ad::Tensor x0_from_velocity(const ad::Tensor& x_t, const ad::Tensor& v, double t);
ad::Tensor eps_from_velocity(const ad::Tensor& x_t, const ad::Tensor& v, double t);

/// One training example. An undefined `t_mat` marks a weak (caption-only)
/// item, which always sees the placeholder sequence.
struct TrainingItem {
  ad::Tensor latent;   // (T, D)
  ad::Tensor t_mat;    // (T, C) or undefined
  ad::Tensor caption;  // (L, C) or undefined
};

/// Loss of one item for a fixed draw of (t, eps, dropout).
ad::Tensor item_loss(const DiTModel& model, const TrainingItem& item, double t,
                     const ad::Tensor& eps, bool drop_condition);

/// Draws t ~ U(0,1), eps ~ N(0, I) and the dropout coin per item, averages
/// the item losses, and back-propagates into the model parameters
/// (accumulating; zero them first). Returns the batch loss.
double training_step(DiTModel& model, std::span<const TrainingItem> batch, Rng& rng);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-6;
  /// Learning rate decays linearly to zero over this many steps (0: constant).
  std::size_t total_steps = 0;
};

class Adam {
 public:
  Adam(ParameterSet& params, AdamConfig config);
  /// Applies one update from the current gradients.
  void step();
  std::size_t steps_taken() const { return t_; }
  double current_lr() const;

 private:
  ParameterSet* params_;
  AdamConfig config_;
  std::size_t t_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

/// v_uncond + scale (v_cond - v_uncond). Scale 1 returns the conditional
/// prediction and scale 0 the unconditional one without evaluating the other.
ad::Tensor guided_velocity(const DiTModel& model, const ad::Tensor& x_t, double t,
                           const ad::Tensor* t_mat, const ad::Tensor* caption, double scale);

struct SampleOptions {
  std::size_t steps = 50;
  double scale = 7.5;
  std::uint64_t seed = 0;
};

/// Deterministic DDIM on a uniform grid from t = 1 to t = 0; returns the
/// final clean-latent estimate (frames x latent_dim).
ad::Tensor cfg_sample(const DiTModel& model, const ad::Tensor* caption, const ad::Tensor* t_mat,
                      std::size_t frames, const SampleOptions& options);

}  // namespace tcgen
