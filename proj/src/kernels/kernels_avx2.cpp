// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include "hebrain/kernels.hpp"

#include <immintrin.h>

#include <cmath>

namespace hebrain::kernels {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4),
                           acc1);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i),
                                            _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] = std::fma(alpha, x[i], y[i]);
}

void mul_avx2(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i,
                     _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

void add_avx2(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i,
                     _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] + b[i];
}

void scale_avx2(double alpha, const double* x, double* out, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) out[i] = alpha * x[i];
}

void gemm_avx2(std::size_t m, std::size_t n, std::size_t k, const double* a,
               const double* b, double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a[i * k + p];
      if (aip == 0.0) continue;
      const __m256d va = _mm256_set1_pd(aip);
      const double* brow = b + p * n;
      std::size_t j = 0;
      for (; j + 8 <= n; j += 8) {
        _mm256_storeu_pd(crow + j, _mm256_fmadd_pd(va, _mm256_loadu_pd(brow + j),
                                                   _mm256_loadu_pd(crow + j)));
        _mm256_storeu_pd(crow + j + 4,
                         _mm256_fmadd_pd(va, _mm256_loadu_pd(brow + j + 4),
                                         _mm256_loadu_pd(crow + j + 4)));
      }
      for (; j + 4 <= n; j += 4) {
        _mm256_storeu_pd(crow + j, _mm256_fmadd_pd(va, _mm256_loadu_pd(brow + j),
                                                   _mm256_loadu_pd(crow + j)));
      }
      for (; j < n; ++j) crow[j] = std::fma(aip, brow[j], crow[j]);
    }
  }
}

}  // namespace

const KernelTable& avx2_table_impl() {
  static const KernelTable table{Isa::Avx2, "avx2",   dot_avx2,  axpy_avx2,
                                 mul_avx2,  add_avx2, scale_avx2, gemm_avx2};
  return table;
}

}  // namespace hebrain::kernels
