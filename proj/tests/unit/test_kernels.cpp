#include <doctest.h>

#include "../support.hpp"
#include "tcgen/kernels.hpp"

using namespace tcgen;

namespace {

std::vector<double> random_values(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

using Kernel = void (*)(std::span<const double>, std::span<const double>, std::span<double>,
                        std::size_t, std::size_t, std::size_t, bool);

void compare(Kernel serial, Kernel parallel, std::size_t m, std::size_t k, std::size_t n, Rng& rng) {
  const auto a = random_values(rng, m * k), b = random_values(rng, k * n);
  auto c0 = random_values(rng, m * n);
  auto c1 = c0;
  for (bool accumulate : {false, true}) {
    serial(a, b, c0, m, k, n, accumulate);
    parallel(a, b, c1, m, k, n, accumulate);
    CHECK(c0 == c1);
  }
}

}  // namespace

TEST_CASE("gemm matches a naive triple loop") {
  Rng rng(1);
  const std::size_t m = 5, k = 7, n = 3;
  const auto a = random_values(rng, m * k), b = random_values(rng, k * n);
  std::vector<double> c(m * n), at(k * m), bt(n * k);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) at[p * m + i] = a[i * k + p];
  for (std::size_t p = 0; p < k; ++p)
    for (std::size_t j = 0; j < n; ++j) bt[j * k + p] = b[p * n + j];

  kernels::serial::gemm(a, b, c, m, k, n, false);
  std::vector<double> c_tn(m * n), c_nt(m * n);
  kernels::serial::gemm_tn(at, b, c_tn, m, k, n, false);
  kernels::serial::gemm_nt(a, bt, c_nt, m, k, n, false);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double ref = 0.0;
      for (std::size_t p = 0; p < k; ++p) ref += a[i * k + p] * b[p * n + j];
      CHECK(c[i * n + j] == doctest::Approx(ref).epsilon(1e-13));
      CHECK(c_tn[i * n + j] == doctest::Approx(ref).epsilon(1e-13));
      CHECK(c_nt[i * n + j] == doctest::Approx(ref).epsilon(1e-13));
    }
}

TEST_CASE("parallel kernels are bitwise identical to the serial ones") {
  Rng rng(2);
  for (auto [m, k, n] : {std::tuple{3, 4, 5}, {64, 64, 64}, {97, 130, 71}, {200, 33, 150}}) {
    compare(kernels::serial::gemm, kernels::parallel::gemm, m, k, n, rng);
    compare(kernels::serial::gemm_tn, kernels::parallel::gemm_tn, m, k, n, rng);
    compare(kernels::serial::gemm_nt, kernels::parallel::gemm_nt, m, k, n, rng);
  }
  CHECK(kernels::max_threads() >= 1);
}
