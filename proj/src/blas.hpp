/* Copyright 2026 The seqdiff Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef SEQDIFF_SRC_BLAS_HPP_
#define SEQDIFF_SRC_BLAS_HPP_

#include <cblas.h>

#include <cstddef>

namespace seqdiff::blas {

// Row-major C = alpha * op(A) * op(B) + beta * C, with op(A): MxK, op(B): KxN.
template <typename T>
void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n,
          std::size_t k, T alpha, const T* a, const T* b, T beta, T* c);

template <>
inline void gemm<float>(bool trans_a, bool trans_b, std::size_t m,
                        std::size_t n, std::size_t k, float alpha,
                        const float* a, const float* b, float beta, float* c) {
  cblas_sgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
              trans_b ? CblasTrans : CblasNoTrans, static_cast<int>(m),
              static_cast<int>(n), static_cast<int>(k), alpha, a,
              static_cast<int>(trans_a ? m : k), b,
              static_cast<int>(trans_b ? k : n), beta, c, static_cast<int>(n));
}

// Double stays off OpenBLAS: 0.3.20's dgemm returns wrong products for some
// shapes on AVX-512 (Cooperlake) cores. Double only backs gradient checks and
// oracles, so a plain loop is fast enough.
template <>
inline void gemm<double>(bool trans_a, bool trans_b, std::size_t m,
                         std::size_t n, std::size_t k, double alpha,
                         const double* a, const double* b, double beta,
                         double* c) {
  for (std::size_t i = 0; i < m * n; ++i) c[i] = beta == 0.0 ? 0.0 : beta * c[i];
  for (std::size_t i = 0; i < m; ++i) {
    double* row = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = alpha * (trans_a ? a[p * m + i] : a[i * k + p]);
      if (av == 0.0) continue;
      if (trans_b) {
        for (std::size_t j = 0; j < n; ++j) row[j] += av * b[j * k + p];
      } else {
        const double* brow = b + p * n;
        for (std::size_t j = 0; j < n; ++j) row[j] += av * brow[j];
      }
    }
  }
}

}  // namespace seqdiff::blas

#endif  // SEQDIFF_SRC_BLAS_HPP_
