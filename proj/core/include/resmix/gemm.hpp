#pragma once

#include <cstddef>

namespace resmix::detail {

// Row-major GEMM kernels. Each adds its product into C.
//   gemm_nn: C[M x N] += A[M x K]   * B[K x N]
//   gemm_nt: C[M x N] += A[M x K]   * B[N x K]^T
//   gemm_tn: C[M x N] += A[K x M]^T * B[K x N]
// float goes through Eigen. double uses plain loops that accumulate each
// output element over k in ascending order, which makes the f64 convolution
// reproduce a direct summation bit for bit.
template <typename T>
void gemm_nn(std::size_t M, std::size_t N, std::size_t K, const T* A, const T* B, T* C);
template <typename T>
void gemm_nt(std::size_t M, std::size_t N, std::size_t K, const T* A, const T* B, T* C);
template <typename T>
void gemm_tn(std::size_t M, std::size_t N, std::size_t K, const T* A, const T* B, T* C);

}  // namespace resmix::detail
