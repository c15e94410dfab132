#pragma once

// Dense row-major kernels. Each kernel has a serial reference in
// `kernels::serial` and an OpenMP version in `kernels::parallel`. Both
// accumulate every output element over k in ascending order, so their
// results are bitwise identical; the tests rely on that.

#include <cstddef>
#include <span>

namespace tcgen {

enum class Execution { kSerial, kParallel };

namespace kernels {

namespace serial {

/// C[m,n] (+)= A[m,k] * B[k,n]
void gemm(std::span<const double> a, std::span<const double> b,
          std::span<double> c, std::size_t m, std::size_t k, std::size_t n,
          bool accumulate);

/// C[m,n] (+)= A[k,m]^T * B[k,n]
void gemm_tn(std::span<const double> a, std::span<const double> b,
             std::span<double> c, std::size_t m, std::size_t k, std::size_t n,
             bool accumulate);

/// C[m,n] (+)= A[m,k] * B[n,k]^T
void gemm_nt(std::span<const double> a, std::span<const double> b,
             std::span<double> c, std::size_t m, std::size_t k, std::size_t n,
             bool accumulate);

}  // namespace serial

namespace parallel {

void gemm(std::span<const double> a, std::span<const double> b,
          std::span<double> c, std::size_t m, std::size_t k, std::size_t n,
          bool accumulate);
void gemm_tn(std::span<const double> a, std::span<const double> b,
             std::span<double> c, std::size_t m, std::size_t k, std::size_t n,
             bool accumulate);
void gemm_nt(std::span<const double> a, std::span<const double> b,
             std::span<double> c, std::size_t m, std::size_t k, std::size_t n,
             bool accumulate);

}  // namespace parallel

/// Below this many multiply-adds the parallel kernels run on one thread.
inline constexpr std::size_t kParallelThreshold = std::size_t{1} << 16;

int max_threads();

}  // namespace kernels

}  // namespace tcgen
