#include <arm_neon.h>

#include <cmath>

#include "hyrank/kernels.hpp"

// NEON (aarch64) kernel variants, two lanes of double per vector. Same
// mul-then-add sequencing as the scalar reference for the elementwise ops.

namespace hyrank::kernels {

namespace {

double dot_neon(const double* x, const double* y, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vaddq_f64(acc0, vmulq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
    acc1 = vaddq_f64(acc1, vmulq_f64(vld1q_f64(x + i + 2), vld1q_f64(y + i + 2)));
  }
  for (; i + 2 <= n; i += 2) {
    acc0 = vaddq_f64(acc0, vmulq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpy_neon(std::size_t n, double a, const double* x, double* y) {
  float64x2_t va = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t t = vmulq_f64(va, vld1q_f64(x + i));
    vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), t));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void scale_neon(std::size_t n, double a, double* x) {
  float64x2_t va = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(x + i, vmulq_f64(vld1q_f64(x + i), va));
  for (; i < n; ++i) x[i] *= a;
}

void hadamard_neon(std::size_t n, const double* a, const double* b, double* out) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

void hadamard_acc_neon(std::size_t n, const double* a, const double* b, double* out) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t t = vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
    vst1q_f64(out + i, vaddq_f64(vld1q_f64(out + i), t));
  }
  for (; i < n; ++i) out[i] += a[i] * b[i];
}

void gemv_neon(std::size_t rows, std::size_t cols, const double* a, const double* x, double* y) {
  for (std::size_t i = 0; i < rows; ++i) y[i] += dot_neon(a + i * cols, x, cols);
}

void gemv_t_neon(std::size_t rows, std::size_t cols, const double* a, const double* x, double* y) {
  for (std::size_t i = 0; i < rows; ++i) axpy_neon(cols, x[i], a + i * cols, y);
}

void ger_neon(std::size_t rows, std::size_t cols, double alpha, const double* x, const double* y,
              double* a) {
  for (std::size_t i = 0; i < rows; ++i) axpy_neon(cols, alpha * x[i], y, a + i * cols);
}

void adagrad_neon(std::size_t n, double lr, double eps, const double* g, double* acc, double* v) {
  float64x2_t vlr = vdupq_n_f64(lr);
  float64x2_t veps = vdupq_n_f64(eps);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t vg = vld1q_f64(g + i);
    float64x2_t va = vaddq_f64(vld1q_f64(acc + i), vmulq_f64(vg, vg));
    vst1q_f64(acc + i, va);
    float64x2_t step = vdivq_f64(vmulq_f64(vlr, vg), vaddq_f64(vsqrtq_f64(va), veps));
    vst1q_f64(v + i, vsubq_f64(vld1q_f64(v + i), step));
  }
  for (; i < n; ++i) {
    acc[i] += g[i] * g[i];
    v[i] -= lr * g[i] / (std::sqrt(acc[i]) + eps);
  }
}

}  // namespace

const Ops& neon_ops_table() {
  static const Ops ops = {
      "neon",          dot_neon,    axpy_neon, scale_neon, hadamard_neon,
      hadamard_acc_neon, gemv_neon, gemv_t_neon, ger_neon, adagrad_neon,
  };
  return ops;
}

}  // namespace hyrank::kernels
