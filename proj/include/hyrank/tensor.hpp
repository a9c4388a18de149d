#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hyrank/common.hpp"
#include "hyrank/rng.hpp"

namespace hyrank {

/// A trainable tensor: values plus the gradient and AdaGrad accumulator
/// buffers of the same shape. Single writer during training; forward
/// passes only read values.
struct ParamTensor {
  std::string name;
  std::vector<std::size_t> shape;
  Vec values;
  Vec grad;
  Vec adagrad_acc;

  std::size_t size() const { return values.size(); }
  std::size_t rows() const { return shape.front(); }
  std::size_t cols() const { return size() / shape.front(); }
  void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }
};

enum class InitScheme { XavierUniform, Zeros };

/// Allocates a tensor. XavierUniform draws from
/// [-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out))] with
/// fan_out = shape[0] and fan_in = product of the remaining dims
/// (fan_in = fan_out = shape[0] for vectors); identical (shape, seed,
/// scheme) gives identical bits. Grad and accumulator start at zero.
ParamTensor init_params(std::string name, std::vector<std::size_t> shape, std::uint64_t seed,
                        InitScheme scheme);

struct OptimizerConfig {
  double learning_rate = 1e-2;
  double epsilon = 1e-6;
};

/// Diagonal AdaGrad: per element acc += g^2, value -= lr*g/(sqrt(acc)+eps),
/// then the gradient buffer is cleared. Throws NumericError naming the
/// tensor on a non-finite gradient.
void adagrad_step(ParamTensor& p, const OptimizerConfig& cfg);

/// Inverted dropout. training=false (or p=0) returns the input unchanged
/// without consuming random draws; otherwise each element is zeroed with
/// probability p and survivors are scaled by 1/(1-p) so the expectation is
/// preserved. Requires 0 <= p < 1.
Vec dropout(const Vec& v, double p, Rng& rng, bool training);

}  // namespace hyrank
