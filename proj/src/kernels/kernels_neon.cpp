// AArch64 only; NEON is part of the base ISA there.
#include "spcatv/kernels.hpp"

#include <arm_neon.h>

#include <cmath>

namespace spcatv::simd {
namespace {

inline float64x2_t shrink_pd(float64x2_t x, float64x2_t t) {
  const float64x2_t m = vsubq_f64(vabsq_f64(x), t);
  const uint64x2_t keep = vcgtq_f64(m, vdupq_n_f64(0.0));
  const uint64x2_t sign = vandq_u64(vreinterpretq_u64_f64(x), vdupq_n_u64(0x8000000000000000ULL));
  const uint64x2_t signed_m = vorrq_u64(vreinterpretq_u64_f64(m), sign);
  return vreinterpretq_f64_u64(vandq_u64(signed_m, keep));
}

inline double shrink(double x, double t) {
  const double m = std::abs(x) - t;
  return m > 0.0 ? std::copysign(m, x) : 0.0;
}

double dot(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vaddq_f64(acc0, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    acc1 = vaddq_f64(acc1, vmulq_f64(vld1q_f64(a + i + 2), vld1q_f64(b + i + 2)));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sum_squares(const double* a, std::size_t n) { return dot(a, a, n); }

double abs_sum(const double* a, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vabsq_f64(vld1q_f64(a + i)));
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) s += std::abs(a[i]);
  return s;
}

void soft_threshold(const double* x, double t, double* out, std::size_t n) {
  const float64x2_t tv = vdupq_n_f64(t);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(out + i, shrink_pd(vld1q_f64(x + i), tv));
  for (; i < n; ++i) out[i] = shrink(x[i], t);
}

void extrapolate(const double* cur, const double* prev, double beta, double* out,
                 std::size_t n) {
  const float64x2_t b = vdupq_n_f64(beta);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t c = vld1q_f64(cur + i);
    vst1q_f64(out + i, vaddq_f64(c, vmulq_f64(b, vsubq_f64(c, vld1q_f64(prev + i)))));
  }
  for (; i < n; ++i) out[i] = cur[i] + beta * (cur[i] - prev[i]);
}

void prox_gradient_step(const double* z, const double* grad, double step, double t,
                        double* out, std::size_t n) {
  const float64x2_t sv = vdupq_n_f64(step);
  const float64x2_t tv = vdupq_n_f64(t);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t y = vsubq_f64(vld1q_f64(z + i), vmulq_f64(sv, vld1q_f64(grad + i)));
    vst1q_f64(out + i, shrink_pd(y, tv));
  }
  for (; i < n; ++i) out[i] = shrink(z[i] - step * grad[i], t);
}

double shrink_sum_squares(const double* w, double t, std::size_t n) {
  const float64x2_t tv = vdupq_n_f64(t);
  const float64x2_t zero = vdupq_n_f64(0.0);
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t m = vmaxq_f64(vsubq_f64(vabsq_f64(vld1q_f64(w + i)), tv), zero);
    acc = vaddq_f64(acc, vmulq_f64(m, m));
  }
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) {
    const double m = std::abs(w[i]) - t;
    if (m > 0.0) s += m * m;
  }
  return s;
}

constexpr KernelTable kTable{Isa::neon,    dot,         sum_squares,        abs_sum,
                             soft_threshold, extrapolate, prox_gradient_step, shrink_sum_squares};

}  // namespace

const KernelTable* neon_kernels() { return &kTable; }

}  // namespace spcatv::simd
