#include "hyrank/tensor.hpp"

#include <cmath>
#include <numeric>

#include "hyrank/kernels.hpp"

namespace hyrank {

ParamTensor init_params(std::string name, std::vector<std::size_t> shape, std::uint64_t seed,
                        InitScheme scheme) {
  if (shape.empty()) throw std::invalid_argument("tensor '" + name + "': empty shape");
  std::size_t n = 1;
  for (std::size_t d : shape) {
    if (d == 0) throw std::invalid_argument("tensor '" + name + "': zero-size dimension");
    n *= d;
  }
  ParamTensor p;
  p.name = std::move(name);
  p.shape = std::move(shape);
  p.values.assign(n, 0.0);
  p.grad.assign(n, 0.0);
  p.adagrad_acc.assign(n, 0.0);
  if (scheme == InitScheme::XavierUniform) {
    double fan_out = static_cast<double>(p.shape.front());
    double fan_in = p.shape.size() == 1 ? fan_out : static_cast<double>(n) / fan_out;
    double bound = std::sqrt(6.0 / (fan_in + fan_out));
    Rng rng(seed);
    for (double& v : p.values) v = rng.uniform(-bound, bound);
  }
  return p;
}

void adagrad_step(ParamTensor& p, const OptimizerConfig& cfg) {
  for (double g : p.grad) {
    if (!std::isfinite(g)) throw NumericError("non-finite gradient in tensor '" + p.name + "'");
  }
  kernels::active().adagrad_update(p.size(), cfg.learning_rate, cfg.epsilon, p.grad.data(),
                                   p.adagrad_acc.data(), p.values.data());
  p.zero_grad();
}

Vec dropout(const Vec& v, double p, Rng& rng, bool training) {
  if (p < 0.0 || p >= 1.0) throw std::invalid_argument("dropout probability must be in [0, 1)");
  if (!training || p == 0.0) return v;
  Vec out(v.size());
  double keep_scale = 1.0 / (1.0 - p);
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = rng.bernoulli(p) ? 0.0 : v[i] * keep_scale;
  }
  return out;
}

}  // namespace hyrank
