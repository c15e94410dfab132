#include <doctest.h>

#include "../support.hpp"
#include "tcgen/error.hpp"
#include "tcgen/tensor.hpp"

using namespace tcgen;
using namespace tcgen::ad;
using testing::check_gradients;
using testing::random_tensor;

namespace {

constexpr double kTolerance = 1e-4;

using Fn = std::function<Tensor(const std::vector<Tensor>&)>;

void expect_gradients(const Fn& f, std::vector<Tensor> inputs) {
  const auto r = check_gradients(f, std::move(inputs));
  CHECK(r.checked > 0);
  CHECK(r.max_rel_error < kTolerance);
}

}  // namespace

TEST_CASE("elementwise ops") {
  Rng rng(1);
  auto a = [&] { return random_tensor(rng, {3, 4}, true); };
  expect_gradients([](auto& x) { return add(x[0], x[1]); }, {a(), a()});
  expect_gradients([](auto& x) { return sub(x[0], x[1]); }, {a(), a()});
  expect_gradients([](auto& x) { return mul(x[0], x[1]); }, {a(), a()});
  expect_gradients([](auto& x) { return scale(x[0], -2.5); }, {a()});
  expect_gradients([](auto& x) { return gelu(x[0]); }, {a()});
  expect_gradients([](auto& x) { return silu(x[0]); }, {a()});
}

TEST_CASE("row broadcasts") {
  Rng rng(2);
  expect_gradients([](auto& x) { return add_row(x[0], x[1]); },
                   {random_tensor(rng, {4, 3}, true), random_tensor(rng, {1, 3}, true)});
  expect_gradients([](auto& x) { return mul_row(x[0], x[1]); },
                   {random_tensor(rng, {4, 3}, true), random_tensor(rng, {1, 3}, true)});
  expect_gradients([](auto& x) { return repeat_rows(x[0], 5); }, {random_tensor(rng, {1, 3}, true)});
}

TEST_CASE("linear algebra") {
  Rng rng(3);
  expect_gradients([](auto& x) { return matmul(x[0], x[1]); },
                   {random_tensor(rng, {3, 8}, true), random_tensor(rng, {8, 5}, true)});
  expect_gradients([](auto& x) { return matmul_nt(x[0], x[1]); },
                   {random_tensor(rng, {3, 8}, true), random_tensor(rng, {6, 8}, true)});
  expect_gradients([](auto& x) { return transpose(x[0]); }, {random_tensor(rng, {3, 8}, true)});
}

TEST_CASE("slicing and concatenation") {
  Rng rng(4);
  expect_gradients([](auto& x) { return slice_cols(x[0], 2, 3); }, {random_tensor(rng, {4, 7}, true)});
  expect_gradients([](auto& x) { return concat_cols({x[0], x[1], x[0]}); },
                   {random_tensor(rng, {4, 2}, true), random_tensor(rng, {4, 3}, true)});
}

TEST_CASE("softmax, layer norm and reductions") {
  Rng rng(5);
  expect_gradients([](auto& x) { return softmax_rows(x[0]); }, {random_tensor(rng, {3, 8}, true)});
  expect_gradients([](auto& x) { return layer_norm_rows(x[0]); }, {random_tensor(rng, {3, 8}, true)});
  expect_gradients([](auto& x) { return sum(x[0]); }, {random_tensor(rng, {3, 8}, true)});
  expect_gradients([](auto& x) { return mean(x[0]); }, {random_tensor(rng, {3, 8}, true)});
  expect_gradients([](auto& x) { return mse(x[0], x[1]); },
                   {random_tensor(rng, {3, 8}, true), random_tensor(rng, {3, 8}, true)});
}

TEST_CASE("shared subexpressions accumulate gradients") {
  Rng rng(6);
  expect_gradients(
      [](auto& x) {
        const Tensor h = gelu(matmul(x[0], x[1]));
        return add(mul(h, h), matmul(h, x[1]));
      },
      {random_tensor(rng, {3, 4}, true), random_tensor(rng, {4, 4}, true)});
}

TEST_CASE("forward values") {
  const Tensor a = Tensor::from({2, 2}, {1, 2, 3, 4});
  const Tensor b = Tensor::from({2, 2}, {5, 6, 7, 8});
  const Tensor c = matmul(a, b);
  CHECK(std::vector<double>(c.values().begin(), c.values().end()) == std::vector<double>{19, 22, 43, 50});
  const Tensor s = softmax_rows(Tensor::from({1, 2}, {0.0, 0.0}));
  CHECK(s.at(0, 0) == 0.5);
  const Tensor n = layer_norm_rows(Tensor::from({1, 4}, {1, 2, 3, 4}));
  double mean_v = 0.0;
  for (double v : n.values()) mean_v += v / 4.0;
  CHECK(std::abs(mean_v) < 1e-12);
  CHECK_THROWS_AS(add(a, Tensor::zeros({3, 2})), Error);
  CHECK_THROWS_AS(matmul(a, Tensor::zeros({3, 2})), Error);
}

TEST_CASE("no-grad guard records nothing") {
  Tensor a = Tensor::full({2, 2}, 1.0, true);
  Tensor out;
  {
    NoGradGuard guard;
    CHECK_FALSE(grad_enabled());
    out = mul(a, a);
  }
  CHECK(grad_enabled());
  CHECK_FALSE(out.requires_grad());
  CHECK(out.node()->parents.empty());
}

TEST_CASE("detach cuts the graph") {
  Tensor a = Tensor::full({1, 3}, 2.0, true);
  const Tensor loss = sum(mul(a, mul(a, a).detach()));
  loss.backward();
  for (double g : a.grad()) CHECK(g == 4.0);
}
