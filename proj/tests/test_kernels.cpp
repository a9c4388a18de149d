#include <doctest.h>

#include <cmath>
#include <cstring>

#include "hyrank/common.hpp"
#include "hyrank/kernels.hpp"
#include "hyrank/rng.hpp"

using namespace hyrank;

namespace {

Vec random_vec(Rng& rng, std::size_t n, double lo = -2.0, double hi = 2.0) {
  Vec v(n);
  for (double& x : v) x = rng.uniform(lo, hi);
  return v;
}

bool bit_equal(const Vec& a, const Vec& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

// Sizes that hit the vector body, the 4-lane tail and the scalar remainder.
const std::size_t kSizes[] = {1, 2, 3, 4, 5, 7, 8, 9, 15, 16, 31, 64, 67, 200, 300};

}  // namespace

TEST_CASE("active kernel table is one of the available ones") {
  auto all = kernels::available_ops();
  REQUIRE(!all.empty());
  CHECK(std::string(all.front()->name) == "scalar");
  bool found = false;
  for (const auto* ops : all) found = found || (ops == &kernels::active());
  CHECK(found);
}

TEST_CASE("reductions match scalar up to rounding") {
  const auto& ref = kernels::scalar_ops();
  for (const auto* ops : kernels::available_ops()) {
    INFO("table: " << ops->name);
    Rng rng(11);
    for (std::size_t n : kSizes) {
      Vec x = random_vec(rng, n);
      Vec y = random_vec(rng, n);
      double got = ops->dot(x.data(), y.data(), n);
      double want = ref.dot(x.data(), y.data(), n);
      CHECK(got == doctest::Approx(want).epsilon(1e-13));

      std::size_t rows = 1 + n % 7;
      Vec a = random_vec(rng, rows * n);
      Vec out_ref(rows, 0.5), out_got(rows, 0.5);
      ref.gemv(rows, n, a.data(), x.data(), out_ref.data());
      ops->gemv(rows, n, a.data(), x.data(), out_got.data());
      for (std::size_t i = 0; i < rows; ++i) {
        CHECK(out_got[i] == doctest::Approx(out_ref[i]).epsilon(1e-13));
      }
    }
  }
}

TEST_CASE("elementwise kernels are bit-identical to scalar") {
  const auto& ref = kernels::scalar_ops();
  for (const auto* ops : kernels::available_ops()) {
    INFO("table: " << ops->name);
    Rng rng(23);
    for (std::size_t n : kSizes) {
      Vec x = random_vec(rng, n);
      Vec y = random_vec(rng, n);

      Vec got = y, want = y;
      ops->axpy(n, 1.7, x.data(), got.data());
      ref.axpy(n, 1.7, x.data(), want.data());
      CHECK(bit_equal(got, want));

      got = x;
      want = x;
      ops->scale(n, -0.3, got.data());
      ref.scale(n, -0.3, want.data());
      CHECK(bit_equal(got, want));

      Vec got2(n), want2(n);
      ops->hadamard(n, x.data(), y.data(), got2.data());
      ref.hadamard(n, x.data(), y.data(), want2.data());
      CHECK(bit_equal(got2, want2));

      got = y;
      want = y;
      ops->hadamard_acc(n, x.data(), x.data(), got.data());
      ref.hadamard_acc(n, x.data(), x.data(), want.data());
      CHECK(bit_equal(got, want));

      std::size_t rows = 1 + n % 5;
      Vec a = random_vec(rng, rows * n);
      Vec xr = random_vec(rng, rows);
      Vec got_t(n, 0.25), want_t(n, 0.25);
      ops->gemv_t(rows, n, a.data(), xr.data(), got_t.data());
      ref.gemv_t(rows, n, a.data(), xr.data(), want_t.data());
      CHECK(bit_equal(got_t, want_t));

      Vec got_a = a, want_a = a;
      ops->ger(rows, n, 0.9, xr.data(), x.data(), got_a.data());
      ref.ger(rows, n, 0.9, xr.data(), x.data(), want_a.data());
      CHECK(bit_equal(got_a, want_a));

      Vec g = random_vec(rng, n);
      Vec acc_got = random_vec(rng, n, 0.0, 1.0), acc_want = acc_got;
      Vec v_got = x, v_want = x;
      ops->adagrad_update(n, 0.01, 1e-6, g.data(), acc_got.data(), v_got.data());
      ref.adagrad_update(n, 0.01, 1e-6, g.data(), acc_want.data(), v_want.data());
      CHECK(bit_equal(acc_got, acc_want));
      CHECK(bit_equal(v_got, v_want));
    }
  }
}

TEST_CASE("kernel semantics on tiny hand cases") {
  for (const auto* ops : kernels::available_ops()) {
    INFO("table: " << ops->name);
    Vec x = {1.0, 2.0, 3.0};
    Vec y = {4.0, 5.0, 6.0};
    CHECK(ops->dot(x.data(), y.data(), 3) == 32.0);

    Vec a = {1.0, 0.0, 0.0, 1.0, 1.0, 1.0};  // 2x3 row-major
    Vec out = {0.0, 0.0};
    ops->gemv(2, 3, a.data(), x.data(), out.data());
    CHECK(out[0] == 1.0);
    CHECK(out[1] == 6.0);

    Vec out_t = {0.0, 0.0, 0.0};
    Vec xr = {2.0, 1.0};
    ops->gemv_t(2, 3, a.data(), xr.data(), out_t.data());
    CHECK(out_t[0] == 3.0);
    CHECK(out_t[1] == 1.0);
    CHECK(out_t[2] == 1.0);

    Vec acc = {0.0};
    Vec v = {1.0};
    Vec g = {1.0};
    ops->adagrad_update(1, 0.1, 0.0, g.data(), acc.data(), v.data());
    CHECK(acc[0] == 1.0);
    CHECK(v[0] == doctest::Approx(0.9).epsilon(1e-15));
  }
}
