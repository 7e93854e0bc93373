#include "spcatv/kernels.hpp"

#include <cmath>

namespace spcatv::simd {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sum_squares(const double* a, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * a[i];
  return s;
}

double abs_sum(const double* a, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::abs(a[i]);
  return s;
}

inline double shrink(double x, double t) {
  const double m = std::abs(x) - t;
  return m > 0.0 ? std::copysign(m, x) : 0.0;
}

void soft_threshold(const double* x, double t, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = shrink(x[i], t);
}

void extrapolate(const double* cur, const double* prev, double beta, double* out,
                 std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = cur[i] + beta * (cur[i] - prev[i]);
}

void prox_gradient_step(const double* z, const double* grad, double step, double t,
                        double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = shrink(z[i] - step * grad[i], t);
}

double shrink_sum_squares(const double* w, double t, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double m = std::abs(w[i]) - t;
    if (m > 0.0) s += m * m;
  }
  return s;
}

constexpr KernelTable kTable{Isa::scalar,  dot,         sum_squares,        abs_sum,
                             soft_threshold, extrapolate, prox_gradient_step, shrink_sum_squares};

}  // namespace

const KernelTable& scalar_kernels() { return kTable; }

}  // namespace spcatv::simd
