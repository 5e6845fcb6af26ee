#include "resmix/gemm.hpp"

#include <Eigen/Core>

namespace resmix::detail {

namespace {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

Eigen::Index idx(std::size_t v) { return static_cast<Eigen::Index>(v); }

}  // namespace

template <>
void gemm_nn<float>(std::size_t M, std::size_t N, std::size_t K, const float* A, const float* B,
                    float* C) {
  MutMap(C, idx(M), idx(N)).noalias() += ConstMap(A, idx(M), idx(K)) * ConstMap(B, idx(K), idx(N));
}

template <>
void gemm_nt<float>(std::size_t M, std::size_t N, std::size_t K, const float* A, const float* B,
                    float* C) {
  MutMap(C, idx(M), idx(N)).noalias() +=
      ConstMap(A, idx(M), idx(K)) * ConstMap(B, idx(N), idx(K)).transpose();
}

template <>
void gemm_tn<float>(std::size_t M, std::size_t N, std::size_t K, const float* A, const float* B,
                    float* C) {
  MutMap(C, idx(M), idx(N)).noalias() +=
      ConstMap(A, idx(K), idx(M)).transpose() * ConstMap(B, idx(K), idx(N));
}

template <>
void gemm_nn<double>(std::size_t M, std::size_t N, std::size_t K, const double* A,
                     const double* B, double* C) {
  for (std::size_t i = 0; i < M; ++i) {
    double* c = C + i * N;
    for (std::size_t k = 0; k < K; ++k) {
      const double a = A[i * K + k];
      const double* b = B + k * N;
      for (std::size_t j = 0; j < N; ++j) c[j] += a * b[j];
    }
  }
}

template <>
void gemm_nt<double>(std::size_t M, std::size_t N, std::size_t K, const double* A,
                     const double* B, double* C) {
  for (std::size_t i = 0; i < M; ++i) {
    for (std::size_t j = 0; j < N; ++j) {
      double acc = C[i * N + j];
      for (std::size_t k = 0; k < K; ++k) acc += A[i * K + k] * B[j * K + k];
      C[i * N + j] = acc;
    }
  }
}

template <>
void gemm_tn<double>(std::size_t M, std::size_t N, std::size_t K, const double* A,
                     const double* B, double* C) {
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t i = 0; i < M; ++i) {
      const double a = A[k * M + i];
      double* c = C + i * N;
      const double* b = B + k * N;
      for (std::size_t j = 0; j < N; ++j) c[j] += a * b[j];
    }
  }
}

}  // namespace resmix::detail
