#include <doctest.h>

#include <cmath>
#include <numbers>

#include "../support.hpp"
#include "tcgen/diffusion.hpp"
#include "tcgen/error.hpp"

using namespace tcgen;
using ad::Tensor;
using testing::random_tensor;

namespace {

double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
  return m;
}

bool bitwise_equal(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape() && std::equal(a.values().begin(), a.values().end(), b.values().begin());
}

DiTConfig small_config() {
  DiTConfig c = DiTConfig::toy();
  c.frames = 8;
  c.hidden = 16;
  c.cond_dim = 8;
  c.layers = 1;
  return c;
}

}  // namespace

TEST_CASE("schedule values") {
  CHECK(noise_schedule(0.0).alpha == 1.0);
  CHECK(noise_schedule(0.0).sigma == 0.0);
  CHECK(noise_schedule(1.0).alpha == 0.0);
  CHECK(noise_schedule(1.0).sigma == 1.0);
  const auto mid = noise_schedule(0.5);
  CHECK(std::abs(mid.alpha - std::sqrt(2.0) / 2.0) < 1e-15);
  CHECK(std::abs(mid.sigma - std::sqrt(2.0) / 2.0) < 1e-15);
  for (int i = 0; i <= 1000; ++i) {
    const auto s = noise_schedule(i / 1000.0);
    CHECK(std::abs(s.alpha * s.alpha + s.sigma * s.sigma - 1.0) < 1e-12);
  }
  CHECK_THROWS_AS(noise_schedule(-0.01), Error);
  CHECK_THROWS_AS(noise_schedule(1.01), Error);
}

TEST_CASE("velocity target endpoints and recovery identities") {
  Rng rng(1);
  const Tensor x0 = random_tensor(rng, {6, 4});
  const Tensor eps = random_tensor(rng, {6, 4});
  CHECK(bitwise_equal(velocity_target(x0, eps, 0.0), eps));
  CHECK(bitwise_equal(velocity_target(x0, eps, 1.0), ad::scale(x0, -1.0)));
  for (int i = 0; i < 100; ++i) {
    const double t = rng.uniform();
    const Tensor xt = noisy_latent(x0, eps, t);
    const Tensor v = velocity_target(x0, eps, t);
    CHECK(max_abs_diff(x0_from_velocity(xt, v, t), x0) < 1e-12);
    CHECK(max_abs_diff(eps_from_velocity(xt, v, t), eps) < 1e-12);
  }
  CHECK_THROWS_AS(velocity_target(x0, random_tensor(rng, {6, 3}), 0.5), Error);
}

TEST_CASE("guidance endpoints are exact and the blend is affine") {
  DiTModel model(small_config(), 4);
  Rng rng(2);
  const Tensor x = random_tensor(rng, {8, 8});
  const Tensor cap = random_tensor(rng, {3, 8});
  const Tensor tm = random_tensor(rng, {8, 8});
  const Tensor cond = model.forward(x, 0.4, &tm, &cap);
  const Tensor uncond = model.forward(x, 0.4, nullptr, nullptr);
  CHECK(bitwise_equal(guided_velocity(model, x, 0.4, &tm, &cap, 1.0), cond));
  CHECK(bitwise_equal(guided_velocity(model, x, 0.4, &tm, &cap, 0.0), uncond));
  for (double s : {0.5, 3.0, 7.5}) {
    const Tensor g = guided_velocity(model, x, 0.4, &tm, &cap, s);
    for (std::size_t i = 0; i < g.size(); ++i)
      CHECK(std::abs(g.values()[i] - (uncond.values()[i] + s * (cond.values()[i] - uncond.values()[i]))) < 1e-12);
  }
  CHECK_THROWS_AS(guided_velocity(model, x, 0.4, &tm, &cap, -1.0), Error);
}

TEST_CASE("sampler endpoints match single-branch sampling") {
  DiTModel model(small_config(), 5);
  Rng rng(3);
  const Tensor cap = random_tensor(rng, {3, 8});
  const Tensor tm = random_tensor(rng, {8, 8});
  SampleOptions opt{6, 1.0, 99};

  // Independent DDIM loop over one conditioning branch.
  auto reference = [&](const Tensor* t_mat, const Tensor* caption) {
    ad::NoGradGuard guard;
    Rng noise(opt.seed);
    std::vector<double> init(8 * 8);
    for (double& v : init) v = noise.normal();
    Tensor x = Tensor::from({8, 8}, init), x0;
    for (std::size_t i = 0; i < opt.steps; ++i) {
      const double t = 1.0 - double(i) / double(opt.steps);
      const double tn = 1.0 - double(i + 1) / double(opt.steps);
      const Tensor v = model.forward(x, t, t_mat, caption);
      const auto s = noise_schedule(t), sn = noise_schedule(std::max(0.0, tn));
      std::vector<double> next(x.size()), est(x.size());
      for (std::size_t k = 0; k < x.size(); ++k) {
        est[k] = s.alpha * x.values()[k] - s.sigma * v.values()[k];
        const double e = s.sigma * x.values()[k] + s.alpha * v.values()[k];
        next[k] = sn.alpha * est[k] + sn.sigma * e;
      }
      x0 = Tensor::from({8, 8}, est);
      x = Tensor::from({8, 8}, next);
    }
    return x0;
  };

  CHECK(bitwise_equal(cfg_sample(model, &cap, &tm, 8, opt), reference(&tm, &cap)));
  opt.scale = 0.0;
  CHECK(bitwise_equal(cfg_sample(model, &cap, &tm, 8, opt), reference(nullptr, nullptr)));
}

TEST_CASE("sampler is deterministic for a fixed seed") {
  DiTModel model(small_config(), 6);
  Rng rng(4);
  const Tensor cap = random_tensor(rng, {2, 8});
  const Tensor tm = random_tensor(rng, {8, 8});
  const SampleOptions opt{10, 7.5, 123};
  const Tensor a = cfg_sample(model, &cap, &tm, 8, opt);
  CHECK(bitwise_equal(a, cfg_sample(model, &cap, &tm, 8, opt)));
  CHECK_FALSE(bitwise_equal(a, cfg_sample(model, &cap, &tm, 8, {10, 7.5, 124})));
  CHECK_THROWS_AS(cfg_sample(model, &cap, &tm, 8, {0, 7.5, 1}), Error);
}

TEST_CASE("exact prediction has zero loss") {
  Rng rng(5);
  const Tensor v = random_tensor(rng, {8, 8});
  CHECK(ad::mse(v, v).item() == 0.0);
}

TEST_CASE("whole-model gradient spot check on 10 parameters") {
  DiTConfig cfg = small_config();
  DiTModel model(cfg, 7);
  Rng rng(8);
  // Wake up the zero-initialized branches so every parameter matters.
  for (auto& [_, p] : model.parameters().items())
    for (double& v : p.mutable_values()) v += 0.1 * rng.normal();
  TrainingItem item{random_tensor(rng, {8, 8}), random_tensor(rng, {8, 8}), random_tensor(rng, {3, 8})};
  const Tensor eps = random_tensor(rng, {8, 8});
  const double t = 0.37;

  model.parameters().zero_grad();
  item_loss(model, item, t, eps, false).backward();

  auto& items = model.parameters().items();
  double worst = 0.0;
  const double h = 1e-3;
  for (int n = 0; n < 10; ++n) {
    auto& p = items[rng.below(items.size())].second;
    const std::size_t k = rng.below(p.size());
    const double analytic = p.has_grad() ? p.grad()[k] : 0.0;
    ad::NoGradGuard guard;
    const double saved = p.mutable_values()[k];
    auto at = [&](double offset) {
      p.mutable_values()[k] = saved + offset;
      return item_loss(model, item, t, eps, false).item();
    };
    const double numeric = (8.0 * (at(h) - at(-h)) - (at(2 * h) - at(-2 * h))) / (12.0 * h);
    p.mutable_values()[k] = saved;
    worst = std::max(worst, testing::relative_error(analytic, numeric));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("training populates gradients and memorizes one sample") {
  DiTConfig cfg = small_config();
  cfg.cfg_dropout = 0.0;
  DiTModel model(cfg, 9);
  Rng data(10);
  const std::vector<TrainingItem> batch = {
      {random_tensor(data, {8, 8}), random_tensor(data, {8, 8}), random_tensor(data, {3, 8})}};

  // Fixed probe points, so progress is not hidden by the per-step noise draw.
  std::vector<std::pair<double, Tensor>> probes;
  for (int i = 0; i < 16; ++i) probes.emplace_back((i + 0.5) / 16.0, random_tensor(data, {8, 8}));
  auto probe_loss = [&] {
    ad::NoGradGuard guard;
    double total = 0.0;
    for (const auto& [t, eps] : probes) total += item_loss(model, batch[0], t, eps, false).item();
    return total / static_cast<double>(probes.size());
  };

  const double before = probe_loss();
  Adam adam(model.parameters(), {.lr = 3e-3, .total_steps = 0});
  Rng rng(11);
  for (int step = 0; step < 200; ++step) {
    model.parameters().zero_grad();
    training_step(model, batch, rng);
    if (step == 0) {
      std::size_t with_grad = 0;
      for (const auto& [name, p] : model.parameters().items())
        with_grad += p.has_grad() || name == "null_caption" || name == "timestamp_placeholder";
      CHECK(with_grad == model.parameters().items().size());
    }
    adam.step();
  }
  const double after = probe_loss();
  INFO("probe loss " << before << " -> " << after);
  CHECK(after < 0.5 * before);
}

TEST_CASE("adam schedule and first step") {
  ParameterSet params;
  Tensor& w = params.add("w", Tensor::full({1, 2}, 1.0, true));
  Adam adam(params, {.lr = 0.1, .weight_decay = 0.0, .total_steps = 10});
  CHECK(adam.current_lr() == 0.1);
  w.mutable_grad()[0] = 2.0;
  w.mutable_grad()[1] = -0.5;
  adam.step();
  CHECK(w.values()[0] == doctest::Approx(0.9).epsilon(1e-6));
  CHECK(w.values()[1] == doctest::Approx(1.1).epsilon(1e-6));
  CHECK(adam.current_lr() == doctest::Approx(0.09));
  CHECK(adam.steps_taken() == 1);
}
