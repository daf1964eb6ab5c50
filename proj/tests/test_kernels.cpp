#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "mdo/errors.hpp"
#include "mdo/kernels.hpp"
#include "mdo/rng.hpp"

using namespace mdo;

namespace {

std::vector<double> random_vec(CounterRng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-1, 1);
  return v;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("isa names") {
  CHECK(kernels::parse_isa("scalar") == kernels::Isa::Scalar);
  CHECK(kernels::parse_isa("avx2") == kernels::Isa::Avx2);
  CHECK_FALSE(kernels::parse_isa("neon").has_value());
  CHECK(kernels::isa_name(kernels::Isa::Scalar) == "scalar");
}

TEST_CASE("scalar table against naive loops") {
  const auto& k = kernels::scalar_table();
  auto rng = CounterRng::stream(0, StreamTag::Init, 1);
  const std::size_t rows = 7, cols = 11;
  const auto w = random_vec(rng, rows * cols), x = random_vec(rng, cols), b = random_vec(rng, rows);
  const auto dy = random_vec(rng, rows);
  std::vector<double> y(rows);
  k.affine(w.data(), b.data(), x.data(), y.data(), rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    double s = b[r];
    for (std::size_t c = 0; c < cols; ++c) s += w[r * cols + c] * x[c];
    CHECK(y[r] == doctest::Approx(s).epsilon(1e-14));
  }
  std::vector<double> dx(cols, 0.5);
  k.affine_t_acc(w.data(), dy.data(), dx.data(), rows, cols);
  for (std::size_t c = 0; c < cols; ++c) {
    double s = 0.5;
    for (std::size_t r = 0; r < rows; ++r) s += w[r * cols + c] * dy[r];
    CHECK(dx[c] == doctest::Approx(s).epsilon(1e-14));
  }
  std::vector<double> dw(rows * cols, 0.25);
  k.outer_acc(dy.data(), x.data(), dw.data(), rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) CHECK(dw[r * cols + c] == doctest::Approx(0.25 + dy[r] * x[c]).epsilon(1e-14));
  }
}

TEST_CASE("simd variant matches the scalar reference") {
  const auto* simd = kernels::avx2_table();
  if (simd == nullptr) {
    MESSAGE("AVX2 kernels unavailable on this host; nothing to compare");
    return;
  }
  const auto& ref = kernels::scalar_table();
  auto rng = CounterRng::stream(1, StreamTag::Init, 1);
  double worst = 0.0;
  for (int trial = 0; trial < 300; ++trial) {
    const auto rows = static_cast<std::size_t>(rng.uniform_int(1, 70));
    const auto cols = static_cast<std::size_t>(rng.uniform_int(0, 70));
    const auto a = random_vec(rng, cols), b = random_vec(rng, cols);
    worst = std::max(worst, std::abs(ref.dot(a.data(), b.data(), cols) - simd->dot(a.data(), b.data(), cols)));

    auto y1 = b, y2 = b;
    ref.axpy(-0.7, a.data(), y1.data(), cols);
    simd->axpy(-0.7, a.data(), y2.data(), cols);
    worst = std::max(worst, max_abs_diff(y1, y2));

    ref.scale(1.3, y1.data(), cols);
    simd->scale(1.3, y2.data(), cols);
    worst = std::max(worst, max_abs_diff(y1, y2));

    const auto w = random_vec(rng, rows * cols), bias = random_vec(rng, rows), dy = random_vec(rng, rows);
    std::vector<double> o1(rows), o2(rows);
    ref.affine(w.data(), bias.data(), a.data(), o1.data(), rows, cols);
    simd->affine(w.data(), bias.data(), a.data(), o2.data(), rows, cols);
    worst = std::max(worst, max_abs_diff(o1, o2));

    std::vector<double> dx1(cols, 0.1), dx2(cols, 0.1);
    ref.affine_t_acc(w.data(), dy.data(), dx1.data(), rows, cols);
    simd->affine_t_acc(w.data(), dy.data(), dx2.data(), rows, cols);
    worst = std::max(worst, max_abs_diff(dx1, dx2));

    std::vector<double> dw1(rows * cols, 0.2), dw2(rows * cols, 0.2);
    ref.outer_acc(dy.data(), a.data(), dw1.data(), rows, cols);
    simd->outer_acc(dy.data(), a.data(), dw2.data(), rows, cols);
    worst = std::max(worst, max_abs_diff(dw1, dw2));

    auto t1 = a, t2 = a, m1 = b, m2 = b;
    std::vector<double> v1(cols, 0.3), v2(cols, 0.3);
    const kernels::AdamCoeffs c{0.01, 0.9, 0.999, 1e-8, 1 - 0.9 * 0.9, 1 - 0.999 * 0.999};
    ref.adam(t1.data(), b.data(), m1.data(), v1.data(), cols, c);
    simd->adam(t2.data(), b.data(), m2.data(), v2.data(), cols, c);
    worst = std::max({worst, max_abs_diff(t1, t2), max_abs_diff(m1, m2), max_abs_diff(v1, v2)});
  }
  MESSAGE("max |avx2 - scalar| = " << worst);
  CHECK(worst <= 1e-12);
}

TEST_CASE("select switches the active table") {
  const auto original = kernels::active().isa;
  kernels::select(kernels::Isa::Scalar);
  CHECK(kernels::active().isa == kernels::Isa::Scalar);
  if (kernels::avx2_table() != nullptr) {
    kernels::select(kernels::Isa::Avx2);
    CHECK(kernels::active().isa == kernels::Isa::Avx2);
  } else {
    CHECK_THROWS_AS(kernels::select(kernels::Isa::Avx2), ConfigError);
  }
  kernels::select(original);
}

}
