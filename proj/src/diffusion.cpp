#include "tcgen/diffusion.hpp"

#include <cmath>
#include <numbers>

#include "tcgen/error.hpp"

namespace tcgen {

using ad::Tensor;

ScheduleValues noise_schedule(double t) {
  if (!(t >= 0.0 && t <= 1.0))
    throw Error(ErrorCode::kOutOfRange, "diffusion time " + std::to_string(t) + " outside [0, 1]");
  if (t == 0.0) return {1.0, 0.0};
  if (t == 1.0) return {0.0, 1.0};
  const double angle = 0.5 * std::numbers::pi * t;
  return {std::cos(angle), std::sin(angle)};
}

namespace {

// a * x + b * y elementwise, value only.
Tensor combine(double a, const Tensor& x, double b, const Tensor& y, const char* what) {
  if (x.shape() != y.shape())
    throw Error(ErrorCode::kShapeMismatch, std::string(what) + ": " + ad::shape_string(x.shape()) +
                                               " vs " + ad::shape_string(y.shape()));
  std::vector<double> out(x.size());
  const auto xv = x.values();
  const auto yv = y.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * xv[i] + b * yv[i];
  return Tensor::from(x.shape(), std::move(out));
}

}  // namespace

Tensor noisy_latent(const Tensor& x0, const Tensor& eps, double t) {
  const auto s = noise_schedule(t);
  return combine(s.alpha, x0, s.sigma, eps, "noisy_latent");
}

Tensor velocity_target(const Tensor& x0, const Tensor& eps, double t) {
  const auto s = noise_schedule(t);
  return combine(s.alpha, eps, -s.sigma, x0, "velocity_target");
}

Tensor x0_from_velocity(const Tensor& x_t, const Tensor& v, double t) {
  const auto s = noise_schedule(t);
  return combine(s.alpha, x_t, -s.sigma, v, "x0_from_velocity");
}

Tensor eps_from_velocity(const Tensor& x_t, const Tensor& v, double t) {
  const auto s = noise_schedule(t);
  return combine(s.sigma, x_t, s.alpha, v, "eps_from_velocity");
}

Tensor item_loss(const DiTModel& model, const TrainingItem& item, double t, const Tensor& eps,
                 bool drop_condition) {
  const Tensor x_t = noisy_latent(item.latent, eps, t);
  const Tensor target = velocity_target(item.latent, eps, t);
  const Tensor* t_mat = (!drop_condition && item.t_mat.defined()) ? &item.t_mat : nullptr;
  const Tensor* caption = (!drop_condition && item.caption.defined()) ? &item.caption : nullptr;
  return ad::mse(model.forward(x_t, t, t_mat, caption), target);
}

double training_step(DiTModel& model, std::span<const TrainingItem> batch, Rng& rng) {
  if (batch.empty()) throw Error(ErrorCode::kShapeMismatch, "empty training batch");
  const double dropout = model.config().cfg_dropout;
  Tensor total;
  for (const auto& item : batch) {
    const double t = rng.uniform();
    std::vector<double> noise(item.latent.size());
    for (double& x : noise) x = rng.normal();
    const Tensor eps = Tensor::from(item.latent.shape(), std::move(noise));
    const bool drop = rng.bernoulli(dropout);
    const Tensor loss = item_loss(model, item, t, eps, drop);
    total = total.defined() ? ad::add(total, loss) : loss;
  }
  const Tensor mean_loss = ad::scale(total, 1.0 / static_cast<double>(batch.size()));
  mean_loss.backward();
  return mean_loss.item();
}

Adam::Adam(ParameterSet& params, AdamConfig config) : params_(&params), config_(config) {
  for (const auto& [_, p] : params.items()) {
    m_.emplace_back(p.size(), 0.0);
    v_.emplace_back(p.size(), 0.0);
  }
}

double Adam::current_lr() const {
  if (config_.total_steps == 0) return config_.lr;
  const double remaining =
      1.0 - static_cast<double>(t_) / static_cast<double>(config_.total_steps);
  return config_.lr * std::max(0.0, remaining);
}

void Adam::step() {
  const double lr = current_lr();
  ++t_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  auto& items = params_->items();
  for (std::size_t i = 0; i < items.size(); ++i) {
    Tensor& p = items[i].second;
    if (!p.has_grad()) continue;
    auto w = p.mutable_values();
    const auto g = p.grad();
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t k = 0; k < w.size(); ++k) {
      const double grad = g[k] + config_.weight_decay * w[k];
      m[k] = config_.beta1 * m[k] + (1.0 - config_.beta1) * grad;
      v[k] = config_.beta2 * v[k] + (1.0 - config_.beta2) * grad * grad;
      w[k] -= lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + config_.eps);
    }
  }
}

Tensor guided_velocity(const DiTModel& model, const Tensor& x_t, double t, const Tensor* t_mat,
                       const Tensor* caption, double scale) {
  if (!(scale >= 0.0)) throw Error(ErrorCode::kOutOfRange, "guidance scale must be >= 0");
  if (scale == 1.0) return model.forward(x_t, t, t_mat, caption);
  if (scale == 0.0) return model.forward(x_t, t, nullptr, nullptr);
  const Tensor cond = model.forward(x_t, t, t_mat, caption);
  const Tensor uncond = model.forward(x_t, t, nullptr, nullptr);
  std::vector<double> out(cond.size());
  const auto c = cond.values();
  const auto u = uncond.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = u[i] + scale * (c[i] - u[i]);
  return Tensor::from(cond.shape(), std::move(out));
}

Tensor cfg_sample(const DiTModel& model, const Tensor* caption, const Tensor* t_mat,
                  std::size_t frames, const SampleOptions& options) {
  if (options.steps == 0) throw Error(ErrorCode::kOutOfRange, "sampler needs at least one step");
  ad::NoGradGuard no_grad;
  Rng rng(options.seed);
  std::vector<double> init(frames * model.config().latent_dim);
  for (double& x : init) x = rng.normal();
  Tensor x = Tensor::from({frames, model.config().latent_dim}, std::move(init));
  Tensor x0;
  const auto steps = static_cast<double>(options.steps);
  for (std::size_t i = 0; i < options.steps; ++i) {
    const double t = 1.0 - static_cast<double>(i) / steps;
    const double t_next = 1.0 - static_cast<double>(i + 1) / steps;
    const Tensor v = guided_velocity(model, x, t, t_mat, caption, options.scale);
    x0 = x0_from_velocity(x, v, t);
    const Tensor eps = eps_from_velocity(x, v, t);
    x = noisy_latent(x0, eps, std::max(0.0, t_next));
  }
  return x0;
}

}  // namespace tcgen
