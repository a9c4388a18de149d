#include <doctest.h>

#include <cmath>

#include "hyrank/gradcheck.hpp"
#include "hyrank/tensor.hpp"

using namespace hyrank;

TEST_CASE("init_params: zeros and xavier") {
  ParamTensor z = init_params("b", {3}, 1, InitScheme::Zeros);
  CHECK(z.values == Vec{0.0, 0.0, 0.0});
  CHECK(z.grad == Vec{0.0, 0.0, 0.0});
  CHECK(z.adagrad_acc == Vec{0.0, 0.0, 0.0});

  ParamTensor w = init_params("w", {200, 300}, 5, InitScheme::XavierUniform);
  double bound = std::sqrt(6.0 / 500.0);  // ~0.1095
  REQUIRE(w.size() == 60000);
  double max_abs = 0.0;
  for (double v : w.values) max_abs = std::max(max_abs, std::abs(v));
  CHECK(max_abs <= bound);
  CHECK(max_abs > 0.5 * bound);  // actually spread out, not stuck near zero

  ParamTensor w2 = init_params("w", {200, 300}, 5, InitScheme::XavierUniform);
  CHECK(w.values == w2.values);
  ParamTensor w3 = init_params("w", {200, 300}, 6, InitScheme::XavierUniform);
  CHECK(w.values != w3.values);

  CHECK_THROWS_AS(init_params("bad", {3, 0}, 1, InitScheme::Zeros), std::invalid_argument);
  CHECK_THROWS_AS(init_params("bad", {}, 1, InitScheme::Zeros), std::invalid_argument);
}

TEST_CASE("adagrad: zero gradient is a no-op") {
  ParamTensor p = init_params("p", {4}, 3, InitScheme::XavierUniform);
  Vec before = p.values;
  Vec acc_before = p.adagrad_acc;
  adagrad_step(p, OptimizerConfig{0.5, 1e-6});
  CHECK(p.values == before);
  CHECK(p.adagrad_acc == acc_before);
}

TEST_CASE("adagrad: two-step scalar trace") {
  ParamTensor p = init_params("p", {1}, 0, InitScheme::Zeros);
  p.values[0] = 1.0;
  OptimizerConfig cfg{0.1, 0.0};

  p.grad[0] = 1.0;
  adagrad_step(p, cfg);
  CHECK(p.adagrad_acc[0] == 1.0);
  CHECK(p.values[0] == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(p.grad[0] == 0.0);

  p.grad[0] = 1.0;
  adagrad_step(p, cfg);
  CHECK(p.adagrad_acc[0] == 2.0);
  CHECK(std::abs(p.values[0] - 0.829289) < 5e-7);  // 0.9 - 0.1/sqrt(2)
}

TEST_CASE("adagrad: flipping the gradient sign flips only the value delta") {
  ParamTensor a = init_params("a", {3}, 9, InitScheme::XavierUniform);
  ParamTensor b = a;
  Vec start = a.values;
  a.grad = {0.3, -0.7, 1.1};
  b.grad = {-0.3, 0.7, -1.1};
  OptimizerConfig cfg{0.05, 1e-8};
  adagrad_step(a, cfg);
  adagrad_step(b, cfg);
  CHECK(a.adagrad_acc == b.adagrad_acc);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(a.values[i] - start[i] == -(b.values[i] - start[i]));
  }
}

TEST_CASE("adagrad: accumulator never decreases and values stay finite") {
  Rng rng(17);
  ParamTensor p = init_params("p", {8}, 2, InitScheme::XavierUniform);
  OptimizerConfig cfg{0.1, 1e-6};
  Vec prev_acc = p.adagrad_acc;
  for (int step = 0; step < 50; ++step) {
    for (double& g : p.grad) g = rng.uniform(-4.0, 4.0);
    adagrad_step(p, cfg);
    for (std::size_t i = 0; i < p.size(); ++i) {
      CHECK(p.adagrad_acc[i] >= prev_acc[i]);
      CHECK(std::isfinite(p.values[i]));
    }
    prev_acc = p.adagrad_acc;
  }
}

TEST_CASE("adagrad: non-finite gradient names the tensor") {
  ParamTensor p = init_params("gate.w", {2}, 1, InitScheme::Zeros);
  p.grad[1] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_WITH_AS(adagrad_step(p, OptimizerConfig{}), doctest::Contains("gate.w"),
                       NumericError);
}

TEST_CASE("dropout: identity cases and validation") {
  Rng rng(5);
  Vec v = {1.0, -2.0, 3.0};
  CHECK(dropout(v, 0.0, rng, true) == v);
  CHECK(dropout(v, 0.7, rng, false) == v);
  CHECK_THROWS_AS(dropout(v, 1.0, rng, true), std::invalid_argument);
  CHECK_THROWS_AS(dropout(v, -0.1, rng, true), std::invalid_argument);
}

TEST_CASE("dropout: zero rate and expectation over a million draws") {
  const double p = 0.2;
  Rng rng(1234);
  Vec ones(1, 1.0);
  std::size_t zeros = 0;
  double sum = 0.0;
  const std::size_t trials = 1000000;
  for (std::size_t i = 0; i < trials; ++i) {
    Vec out = dropout(ones, p, rng, true);
    if (out[0] == 0.0) ++zeros;
    sum += out[0];
  }
  double zero_rate = static_cast<double>(zeros) / trials;
  CHECK(std::abs(zero_rate - p) < 0.01);
  CHECK(std::abs(sum / trials - 1.0) < 0.01);  // inverted scaling preserves E[x]
}

TEST_CASE("grad_check: quadratic, constant, corrupted") {
  ParamTensor theta = init_params("theta", {2}, 0, InitScheme::Zeros);
  theta.values = {1.0, 2.0};
  auto loss = [&theta] {
    return theta.values[0] * theta.values[0] + theta.values[1] * theta.values[1];
  };
  theta.grad = {2.0, 4.0};
  ParamTensor* tensors[] = {&theta};
  CHECK(grad_check(loss, tensors, 1e-4) < 1e-8);

  ParamTensor flat = init_params("flat", {3}, 0, InitScheme::Zeros);
  auto const_loss = [] { return 42.0; };
  ParamTensor* flat_tensors[] = {&flat};
  CHECK(grad_check(const_loss, flat_tensors, 1e-4) == 0.0);

  theta.grad[0] += 0.1;  // corrupt one element
  CHECK(grad_check(loss, tensors, 1e-4) > 1e-2);

  auto bad_loss = [] { return std::numeric_limits<double>::infinity(); };
  CHECK_THROWS_AS(grad_check(bad_loss, tensors, 1e-4), NumericError);
}
