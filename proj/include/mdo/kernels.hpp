#pragma once

// Dense double-precision kernels behind every inner loop of the policy,
// the optimizers and the gradient projection. A portable scalar table is
// always present; an AVX2/FMA table is compiled on x86-64 and picked at
// runtime when the CPU supports it. MDO_SIMD=scalar|avx2|auto overrides.

#include <cassert>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>

namespace mdo::kernels {

enum class Isa { Scalar, Avx2 };

std::string_view isa_name(Isa isa) noexcept;
std::optional<Isa> parse_isa(std::string_view name) noexcept;

struct AdamCoeffs {
  double lr;
  double beta1;
  double beta2;
  double eps;
  double bias1;  // 1 - beta1^t
  double bias2;  // 1 - beta2^t
};

struct KernelTable {
  Isa isa;
  double (*dot)(const double* a, const double* b, std::size_t n);
  /// y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  void (*scale)(double alpha, double* x, std::size_t n);
  /// y = W x + b, W row-major [rows x cols]
  void (*affine)(const double* w, const double* b, const double* x, double* y,
                 std::size_t rows, std::size_t cols);
  /// dx += W^T dy
  void (*affine_t_acc)(const double* w, const double* dy, double* dx, std::size_t rows,
                       std::size_t cols);
  /// dW += dy x^T
  void (*outer_acc)(const double* dy, const double* x, double* dw, std::size_t rows,
                    std::size_t cols);
  /// In-place Adam moment update and parameter step.
  void (*adam)(double* theta, const double* g, double* m, double* v, std::size_t n,
               const AdamCoeffs& c);
};

const KernelTable& scalar_table() noexcept;

/// nullptr when the AVX2 variant was not built or the CPU lacks AVX2/FMA.
const KernelTable* avx2_table() noexcept;

/// Table used by the span wrappers below.
const KernelTable& active() noexcept;

/// Force a variant; throws ConfigError if it is unavailable on this host.
void select(Isa isa);

inline double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  return active().dot(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  assert(x.size() == y.size());
  active().axpy(alpha, x.data(), y.data(), x.size());
}

inline void scale(double alpha, std::span<double> x) {
  active().scale(alpha, x.data(), x.size());
}

inline double squared_norm(std::span<const double> a) { return dot(a, a); }

}  // namespace mdo::kernels
