#include <immintrin.h>

#include "hyrank/kernels.hpp"

// AVX2 kernel variants. Four lanes of double per vector; remainders run the
// scalar tail. No FMA: mul followed by add keeps every elementwise op
// bit-identical to the scalar reference.

namespace hyrank::kernels {

namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    acc1 = _mm256_add_pd(acc1,
                         _mm256_mul_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4)));
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpy_avx2(std::size_t n, double a, const double* x, double* y) {
  __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d t = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), t));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void scale_avx2(std::size_t n, double a, double* x) {
  __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(x + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), va));
  }
  for (; i < n; ++i) x[i] *= a;
}

void hadamard_avx2(std::size_t n, const double* a, const double* b, double* out) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

void hadamard_acc_avx2(std::size_t n, const double* a, const double* b, double* out) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d t = _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(out + i), t));
  }
  for (; i < n; ++i) out[i] += a[i] * b[i];
}

void gemv_avx2(std::size_t rows, std::size_t cols, const double* a, const double* x, double* y) {
  for (std::size_t i = 0; i < rows; ++i) y[i] += dot_avx2(a + i * cols, x, cols);
}

void gemv_t_avx2(std::size_t rows, std::size_t cols, const double* a, const double* x, double* y) {
  for (std::size_t i = 0; i < rows; ++i) axpy_avx2(cols, x[i], a + i * cols, y);
}

void ger_avx2(std::size_t rows, std::size_t cols, double alpha, const double* x, const double* y,
              double* a) {
  for (std::size_t i = 0; i < rows; ++i) axpy_avx2(cols, alpha * x[i], y, a + i * cols);
}

void adagrad_avx2(std::size_t n, double lr, double eps, const double* g, double* acc, double* v) {
  __m256d vlr = _mm256_set1_pd(lr);
  __m256d veps = _mm256_set1_pd(eps);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vg = _mm256_loadu_pd(g + i);
    __m256d va = _mm256_add_pd(_mm256_loadu_pd(acc + i), _mm256_mul_pd(vg, vg));
    _mm256_storeu_pd(acc + i, va);
    __m256d step = _mm256_div_pd(_mm256_mul_pd(vlr, vg), _mm256_add_pd(_mm256_sqrt_pd(va), veps));
    _mm256_storeu_pd(v + i, _mm256_sub_pd(_mm256_loadu_pd(v + i), step));
  }
  for (; i < n; ++i) {
    acc[i] += g[i] * g[i];
    v[i] -= lr * g[i] / (__builtin_sqrt(acc[i]) + eps);
  }
}

}  // namespace

const Ops& avx2_ops_table() {
  static const Ops ops = {
      "avx2",          dot_avx2,    axpy_avx2, scale_avx2, hadamard_avx2,
      hadamard_acc_avx2, gemv_avx2, gemv_t_avx2, ger_avx2, adagrad_avx2,
  };
  return ops;
}

}  // namespace hyrank::kernels
