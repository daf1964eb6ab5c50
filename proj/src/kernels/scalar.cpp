#include <cmath>

#include "kernels_impl.hpp"

namespace mdo::kernels::scalar {

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scale(double alpha, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

void affine(const double* w, const double* b, const double* x, double* y, std::size_t rows,
            std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = b[r] + dot(w + r * cols, x, cols);
}

void affine_t_acc(const double* w, const double* dy, double* dx, std::size_t rows,
                  std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    if (dy[r] != 0.0) axpy(dy[r], w + r * cols, dx, cols);
  }
}

void outer_acc(const double* dy, const double* x, double* dw, std::size_t rows,
               std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    if (dy[r] != 0.0) axpy(dy[r], x, dw + r * cols, cols);
  }
}

void adam(double* theta, const double* g, double* m, double* v, std::size_t n,
          const AdamCoeffs& c) {
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
    v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
    const double m_hat = m[i] / c.bias1;
    const double v_hat = v[i] / c.bias2;
    theta[i] -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
  }
}

}  // namespace mdo::kernels::scalar

namespace mdo::kernels {

const KernelTable& scalar_table() noexcept {
  static constexpr KernelTable table{
      Isa::Scalar,         scalar::dot,       scalar::axpy, scalar::scale, scalar::affine,
      scalar::affine_t_acc, scalar::outer_acc, scalar::adam,
  };
  return table;
}

}  // namespace mdo::kernels
