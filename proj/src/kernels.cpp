#include "hyrank/kernels.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace hyrank::kernels {

// ---------------------------------------------------------------------------
// Scalar reference kernels. These define the semantics; the SIMD variants
// are checked against them.
// ---------------------------------------------------------------------------

namespace {

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpy_scalar(std::size_t n, double a, const double* x, double* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scale_scalar(std::size_t n, double a, double* x) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

void hadamard_scalar(std::size_t n, const double* a, const double* b, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void hadamard_acc_scalar(std::size_t n, const double* a, const double* b, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] += a[i] * b[i];
}

void gemv_scalar(std::size_t rows, std::size_t cols, const double* a, const double* x, double* y) {
  for (std::size_t i = 0; i < rows; ++i) y[i] += dot_scalar(a + i * cols, x, cols);
}

// Aᵀx as a row sweep of axpys: every y[j] accumulates x[i]*A[i][j] in row
// order, the same order the SIMD variants use.
void gemv_t_scalar(std::size_t rows, std::size_t cols, const double* a, const double* x,
                   double* y) {
  for (std::size_t i = 0; i < rows; ++i) axpy_scalar(cols, x[i], a + i * cols, y);
}

void ger_scalar(std::size_t rows, std::size_t cols, double alpha, const double* x, const double* y,
                double* a) {
  for (std::size_t i = 0; i < rows; ++i) axpy_scalar(cols, alpha * x[i], y, a + i * cols);
}

void adagrad_scalar(std::size_t n, double lr, double eps, const double* g, double* acc,
                    double* v) {
  for (std::size_t i = 0; i < n; ++i) {
    acc[i] += g[i] * g[i];
    v[i] -= lr * g[i] / (std::sqrt(acc[i]) + eps);
  }
}

}  // namespace

const Ops& scalar_ops() {
  static const Ops ops = {
      "scalar",        dot_scalar,    axpy_scalar, scale_scalar, hadamard_scalar,
      hadamard_acc_scalar, gemv_scalar, gemv_t_scalar, ger_scalar, adagrad_scalar,
  };
  return ops;
}

// ---------------------------------------------------------------------------
// Runtime dispatch.
// ---------------------------------------------------------------------------

#if defined(HYRANK_HAVE_AVX2)
const Ops& avx2_ops_table();  // kernels_avx2.cpp, compiled with -mavx2
#endif
#if defined(HYRANK_HAVE_NEON)
const Ops& neon_ops_table();  // kernels_neon.cpp
#endif

const Ops* avx2_ops() {
#if defined(HYRANK_HAVE_AVX2)
  if (__builtin_cpu_supports("avx2")) return &avx2_ops_table();
#endif
  return nullptr;
}

const Ops* neon_ops() {
#if defined(HYRANK_HAVE_NEON)
  return &neon_ops_table();  // NEON is baseline on aarch64
#else
  return nullptr;
#endif
}

namespace {

const Ops& pick_active() {
  const char* env = std::getenv("HYRANK_SIMD");
  std::string want = env ? env : "auto";
  if (want == "scalar") return scalar_ops();
  if (want == "avx2" || want == "neon") {
    const Ops* o = (want == "avx2") ? avx2_ops() : neon_ops();
    if (o) return *o;
    std::fprintf(stderr, "hyrank: HYRANK_SIMD=%s unavailable, using scalar kernels\n",
                 want.c_str());
    return scalar_ops();
  }
  if (const Ops* o = avx2_ops()) return *o;
  if (const Ops* o = neon_ops()) return *o;
  return scalar_ops();
}

}  // namespace

const Ops& active() {
  static const Ops& selected = pick_active();
  return selected;
}

std::vector<const Ops*> available_ops() {
  std::vector<const Ops*> all = {&scalar_ops()};
  if (const Ops* o = avx2_ops()) all.push_back(o);
  if (const Ops* o = neon_ops()) all.push_back(o);
  return all;
}

}  // namespace hyrank::kernels
