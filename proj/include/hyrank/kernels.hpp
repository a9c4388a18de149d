#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace hyrank::kernels {

// Dense double-precision primitives behind every encoder forward/backward
// pass, the cosine scorer and the optimizer. Each operation has a scalar
// reference implementation plus SIMD variants (AVX2 on x86-64, NEON on
// aarch64) selected once at runtime. Matrices are row-major.
//
// Rounding contract, relied on by the equivalence tests:
//   - elementwise ops (axpy, scale, hadamard*, ger, gemv_t, adagrad_update)
//     perform the same mul/add sequence per element in every variant and
//     are bit-identical to the scalar path (FMA contraction is disabled
//     project-wide);
//   - reductions (dot, gemv) reassociate the sum and agree with the scalar
//     path only up to rounding.
struct Ops {
  const char* name;

  /// sum_i x[i] * y[i]
  double (*dot)(const double* x, const double* y, std::size_t n);
  /// y += a * x
  void (*axpy)(std::size_t n, double a, const double* x, double* y);
  /// x *= a
  void (*scale)(std::size_t n, double a, double* x);
  /// out = a ⊙ b
  void (*hadamard)(std::size_t n, const double* a, const double* b, double* out);
  /// out += a ⊙ b
  void (*hadamard_acc)(std::size_t n, const double* a, const double* b, double* out);
  /// y += A x          (A: rows×cols)
  void (*gemv)(std::size_t rows, std::size_t cols, const double* a, const double* x, double* y);
  /// y += Aᵀ x         (A: rows×cols, x: rows, y: cols)
  void (*gemv_t)(std::size_t rows, std::size_t cols, const double* a, const double* x, double* y);
  /// A += alpha x yᵀ   (A: rows×cols)
  void (*ger)(std::size_t rows, std::size_t cols, double alpha, const double* x, const double* y,
              double* a);
  /// Per element: acc += g²; v -= lr * g / (sqrt(acc) + eps)
  void (*adagrad_update)(std::size_t n, double lr, double eps, const double* g, double* acc,
                         double* v);
};

/// Portable reference implementation. Always available.
const Ops& scalar_ops();

/// AVX2 table, or nullptr when the build or the CPU lacks it.
const Ops* avx2_ops();

/// NEON table, or nullptr off aarch64.
const Ops* neon_ops();

/// The table the rest of the project calls through. Picks the widest
/// available variant once; the HYRANK_SIMD environment variable
/// (scalar|avx2|neon|auto) overrides the choice.
const Ops& active();

/// Every table available on this machine, scalar first. Test hook.
std::vector<const Ops*> available_ops();

}  // namespace hyrank::kernels
