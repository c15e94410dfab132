#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "../support.hpp"
#include "tcgen/dit.hpp"
#include "tcgen/error.hpp"

using namespace tcgen;
using namespace tcgen::ad;
using testing::check_gradients;
using testing::random_tensor;

namespace {

constexpr double kTolerance = 1e-4;

// Builds parameters with random values and remembers every tensor so the
// gradient checker can perturb them in place.
struct ParamFactory {
  Rng rng;
  std::vector<Tensor> all;
  double scale = 0.4;

  nn::Linear linear(std::size_t in, std::size_t out) {
    nn::Linear l{random_tensor(rng, {in, out}, true, scale), random_tensor(rng, {1, out}, true, scale)};
    all.push_back(l.weight);
    all.push_back(l.bias);
    return l;
  }
  nn::AdaLNParams adaln(std::size_t h) { return {linear(h, h), linear(h, h)}; }
  nn::AttentionParams attention(std::size_t h) { return {linear(h, h), linear(h, h), linear(h, h), linear(h, h)}; }
  nn::BlockParams block(std::size_t h, std::size_t c, std::size_t ffn) {
    nn::BlockParams b;
    b.adaln1 = adaln(h);
    b.self_attn = attention(h);
    b.fusion.proj = linear(h + c, h);
    b.cross_attn = attention(h);
    b.adaln2 = adaln(h);
    b.ffn_in = linear(h, ffn);
    b.ffn_out = linear(ffn, h);
    return b;
  }
};

void zero_all(std::vector<Tensor>& tensors) {
  for (auto& t : tensors) std::fill(t.mutable_values().begin(), t.mutable_values().end(), 0.0);
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
  return m;
}

double row_delta(const Tensor& a, const Tensor& b, std::size_t r) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.cols(); ++k) m = std::max(m, std::abs(a.at(r, k) - b.at(r, k)));
  return m;
}

}  // namespace

TEST_CASE("config validation and presets") {
  CHECK_NOTHROW(DiTConfig::desk().validate());
  CHECK_NOTHROW(DiTConfig::toy().validate());
  const auto large = DiTConfig::large();
  CHECK(large.layers == 24);
  CHECK(large.heads == 16);
  CHECK(large.hidden == 1024);
  DiTConfig bad = DiTConfig::toy();
  bad.heads = 3;
  CHECK_THROWS_AS(bad.validate(), Error);
  CHECK(DiTConfig::from_json(DiTConfig::toy().to_json()) == DiTConfig::toy());
  CHECK(DiTConfig::preset("toy") == DiTConfig::toy());
  CHECK_THROWS(DiTConfig::preset("huge"));
}

TEST_CASE("adaln with identity modulation is plain layer norm") {
  Rng rng(1);
  const std::size_t h = 8;
  nn::AdaLNParams p{{Tensor::zeros({h, h}), Tensor::full({1, h}, 1.0)}, {Tensor::zeros({h, h}), Tensor::zeros({1, h})}};
  const Tensor x = random_tensor(rng, {5, h});
  const Tensor tau = random_tensor(rng, {1, h});
  CHECK(max_abs_diff(nn::adaln(x, tau, p), layer_norm_rows(x)) == 0.0);

  const Tensor normalized = layer_norm_rows(Tensor::full({2, h}, 3.0));
  for (double v : normalized.values()) CHECK(v == 0.0);
  CHECK_THROWS_AS(nn::adaln(x, random_tensor(rng, {1, 4}), p), Error);
}

TEST_CASE("adaln gradients") {
  ParamFactory f{Rng(2), {}};
  const auto p = f.adaln(8);
  auto inputs = f.all;
  inputs.push_back(random_tensor(f.rng, {3, 8}, true));
  inputs.push_back(random_tensor(f.rng, {1, 8}, true));
  const auto r = check_gradients([&](auto& x) { return nn::adaln(x[x.size() - 2], x.back(), p); }, inputs);
  CHECK(r.max_rel_error < kTolerance);
}

TEST_CASE("attention gradients on 3x8 shapes") {
  ParamFactory f{Rng(3), {}};
  const auto p = f.attention(8);
  auto inputs = f.all;
  inputs.push_back(random_tensor(f.rng, {3, 8}, true));
  inputs.push_back(random_tensor(f.rng, {4, 8}, true));
  const std::size_t nq = inputs.size() - 2;
  for (std::size_t heads : {1, 2}) {
    const auto r = check_gradients(
        [&](auto& x) { return nn::attention(x[nq], x[nq + 1], x[nq + 1], p, heads); }, inputs);
    CHECK(r.max_rel_error < kTolerance);
  }
}

TEST_CASE("attention over a single key returns its value projection") {
  ParamFactory f{Rng(4), {}};
  const auto p = f.attention(8);
  const Tensor q = random_tensor(f.rng, {5, 8});
  const Tensor kv = random_tensor(f.rng, {1, 8});
  const Tensor out = nn::attention(q, kv, kv, p, 2);
  const Tensor expected = p.out(p.value(kv));
  for (std::size_t r = 0; r < 5; ++r)
    for (std::size_t k = 0; k < 8; ++k) CHECK(out.at(r, k) == doctest::Approx(expected.at(0, k)).epsilon(1e-12));
}

TEST_CASE("attention is invariant to key/value row permutations") {
  ParamFactory f{Rng(5), {}};
  const auto p = f.attention(8);
  const Tensor q = random_tensor(f.rng, {3, 8});
  const Tensor kv = random_tensor(f.rng, {6, 8});
  std::vector<std::size_t> perm = {3, 0, 5, 1, 4, 2};
  std::vector<double> permuted;
  for (auto r : perm) permuted.insert(permuted.end(), kv.values().begin() + r * 8, kv.values().begin() + (r + 1) * 8);
  const Tensor kv2 = Tensor::from({6, 8}, permuted);
  CHECK(max_abs_diff(nn::attention(q, kv, kv, p, 2), nn::attention(q, kv2, kv2, p, 2)) < 1e-12);
  CHECK_THROWS_AS(nn::attention(q, random_tensor(f.rng, {6, 4}), kv, p, 2), Error);
}

TEST_CASE("time-aligned fusion") {
  ParamFactory f{Rng(6), {}};
  auto p = nn::FusionParams{f.linear(16 + 8, 16)};
  const Tensor a = random_tensor(f.rng, {6, 16}, true);
  const Tensor t = random_tensor(f.rng, {6, 8}, true);

  auto inputs = f.all;
  inputs.push_back(a);
  inputs.push_back(t);
  CHECK(check_gradients([&](auto&) { return nn::concat_time_aligned(a, t, p); }, inputs).max_rel_error < kTolerance);

  SUBCASE("rows swap with their inputs") {
    auto swap_rows = [](const Tensor& x, std::size_t i, std::size_t j) {
      std::vector<double> v(x.values().begin(), x.values().end());
      for (std::size_t k = 0; k < x.cols(); ++k) std::swap(v[i * x.cols() + k], v[j * x.cols() + k]);
      return Tensor::from(x.shape(), v);
    };
    const Tensor out = nn::concat_time_aligned(a, t, p);
    const Tensor swapped = nn::concat_time_aligned(swap_rows(a, 1, 4), swap_rows(t, 1, 4), p);
    CHECK(max_abs_diff(swap_rows(out, 1, 4), swapped) == 0.0);
  }
  SUBCASE("zero timestamp block and zero projection leave a unchanged") {
    zero_all(f.all);
    const Tensor out = nn::concat_time_aligned(a, Tensor::zeros({6, 8}), p);
    CHECK(max_abs_diff(out, a) == 0.0);
  }
  CHECK_THROWS_AS(nn::concat_time_aligned(a, Tensor::zeros({5, 8}), p), Error);
}

TEST_CASE("full block gradient at T=6, hidden=16, C=8") {
  ParamFactory f{Rng(7), {}};
  const std::size_t T = 6, H = 16, C = 8;
  const auto p = f.block(H, C, 2 * H);
  const Tensor a = random_tensor(f.rng, {T, H}, true);
  const Tensor tm = random_tensor(f.rng, {T, C}, true);
  const Tensor c = random_tensor(f.rng, {3, H}, true);
  const Tensor tau = random_tensor(f.rng, {1, H}, true);
  auto inputs = f.all;
  for (const auto& x : {a, tm, c, tau}) inputs.push_back(x);
  const auto r = check_gradients([&](auto&) { return nn::dit_block(a, tm, c, tau, p, 2); }, inputs);
  CHECK(r.checked > 2000);
  INFO("worst at input " << r.worst_input << "[" << r.worst_index << "]: analytic " << r.worst_analytic
                         << ", numeric " << r.worst_numeric);
  CHECK(r.max_rel_error < kTolerance);
}

TEST_CASE("block with zero residual branches is the identity") {
  ParamFactory f{Rng(8), {}};
  const auto p = f.block(16, 8, 32);
  zero_all(f.all);
  const Tensor a = random_tensor(f.rng, {6, 16});
  const Tensor out = nn::dit_block(a, random_tensor(f.rng, {6, 8}), random_tensor(f.rng, {3, 16}),
                                   random_tensor(f.rng, {1, 16}), p, 2);
  CHECK(max_abs_diff(out, a) == 0.0);
}

TEST_CASE("a timestamp change at one frame moves that frame most") {
  DiTModel model(DiTConfig::toy(), 3);
  // Give the zero-initialized fusion projections some weight so T is visible.
  Rng rng(9);
  for (auto& [name, t] : model.parameters().items())
    if (name.find("fusion") != std::string::npos)
      for (double& v : t.mutable_values()) v = 0.2 * rng.normal();

  const std::size_t T = 32, frame = 11;
  const Tensor x = random_tensor(rng, {T, 8});
  const Tensor cap = random_tensor(rng, {4, model.config().cond_dim});
  Tensor tm = random_tensor(rng, {T, model.config().cond_dim});
  const Tensor before = model.forward(x, 0.5, &tm, &cap);
  for (std::size_t k = 0; k < tm.cols(); ++k) tm.mutable_values()[frame * tm.cols() + k] += 1.0;
  const Tensor after = model.forward(x, 0.5, &tm, &cap);
  const double at_frame = row_delta(before, after, frame);
  CHECK(at_frame > 0.0);
  for (std::size_t r = 0; r < T; ++r)
    if (r != frame) CHECK(row_delta(before, after, r) < at_frame);

  SUBCASE("inside one block the effect is strictly local") {
    ParamFactory f{Rng(10), {}};
    const auto p = f.block(16, 8, 32);
    const Tensor a = random_tensor(f.rng, {6, 16});
    const Tensor c = random_tensor(f.rng, {3, 16});
    const Tensor tau = random_tensor(f.rng, {1, 16});
    Tensor t1 = random_tensor(f.rng, {6, 8});
    const Tensor o1 = nn::dit_block(a, t1, c, tau, p, 2);
    t1.mutable_values()[2 * 8 + 3] += 0.5;
    const Tensor o2 = nn::dit_block(a, t1, c, tau, p, 2);
    for (std::size_t r = 0; r < 6; ++r) {
      if (r == 2) CHECK(row_delta(o1, o2, r) > 0.0);
      else CHECK(row_delta(o1, o2, r) == 0.0);
    }
  }
}

TEST_CASE("model forward shapes and conditioning paths") {
  DiTModel model(DiTConfig::toy(), 1);
  Rng rng(2);
  const Tensor x = random_tensor(rng, {32, 8});
  const Tensor cap = random_tensor(rng, {3, model.config().cond_dim});
  const Tensor out = model.forward(x, 0.3, nullptr, &cap);
  CHECK(out.shape() == Shape{32, 8});
  CHECK(max_abs_diff(out, model.forward(x, 0.3, nullptr, &cap)) == 0.0);

  const Tensor placeholder = model.placeholder_matrix(32);
  CHECK(max_abs_diff(model.forward(x, 0.3, &placeholder, &cap), out) == 0.0);
  CHECK(placeholder.at(0, 0) == doctest::Approx(1.0 / std::sqrt(double(model.config().cond_dim))));

  const Tensor wrong_frames = random_tensor(rng, {31, model.config().cond_dim});
  CHECK_THROWS_AS(model.forward(x, 0.3, &wrong_frames, &cap), Error);

  DiTConfig no_t = DiTConfig::toy();
  no_t.use_timestamps = false;
  DiTModel blind(no_t, 1);
  const Tensor tm = random_tensor(rng, {32, no_t.cond_dim});
  CHECK(max_abs_diff(blind.forward(x, 0.3, &tm, &cap), blind.forward(x, 0.3, nullptr, &cap)) == 0.0);
}

TEST_CASE("timestep features") {
  const auto f = nn::timestep_features(0.0, 8);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(f[i] == 0.0);
    CHECK(f[4 + i] == 1.0);
  }
  CHECK(nn::timestep_features(0.25, 8) != nn::timestep_features(0.5, 8));
}
