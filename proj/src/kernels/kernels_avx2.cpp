// Compiled with -mavx2; only entered after a runtime CPU check.
#include "spcatv/kernels.hpp"

#include <immintrin.h>

#include <cmath>

namespace spcatv::simd {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

inline __m256d abs_pd(__m256d x) {
  return _mm256_andnot_pd(_mm256_set1_pd(-0.0), x);
}

// sign(x) * max(|x| - t, 0) with +0 where the magnitude does not exceed t.
inline __m256d shrink_pd(__m256d x, __m256d t) {
  const __m256d sign_bit = _mm256_set1_pd(-0.0);
  const __m256d m = _mm256_sub_pd(abs_pd(x), t);
  const __m256d keep = _mm256_cmp_pd(m, _mm256_setzero_pd(), _CMP_GT_OQ);
  const __m256d signed_m = _mm256_or_pd(m, _mm256_and_pd(x, sign_bit));
  return _mm256_and_pd(signed_m, keep);
}

inline double shrink(double x, double t) {
  const double m = std::abs(x) - t;
  return m > 0.0 ? std::copysign(m, x) : 0.0;
}

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    acc1 = _mm256_add_pd(acc1,
                         _mm256_mul_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4)));
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sum_squares(const double* a, std::size_t n) { return dot(a, a, n); }

double abs_sum(const double* a, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, abs_pd(_mm256_loadu_pd(a + i)));
  double s = hsum(acc);
  for (; i < n; ++i) s += std::abs(a[i]);
  return s;
}

void soft_threshold(const double* x, double t, double* out, std::size_t n) {
  const __m256d tv = _mm256_set1_pd(t);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(out + i, shrink_pd(_mm256_loadu_pd(x + i), tv));
  for (; i < n; ++i) out[i] = shrink(x[i], t);
}

void extrapolate(const double* cur, const double* prev, double beta, double* out,
                 std::size_t n) {
  const __m256d b = _mm256_set1_pd(beta);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d c = _mm256_loadu_pd(cur + i);
    const __m256d d = _mm256_sub_pd(c, _mm256_loadu_pd(prev + i));
    _mm256_storeu_pd(out + i, _mm256_add_pd(c, _mm256_mul_pd(b, d)));
  }
  for (; i < n; ++i) out[i] = cur[i] + beta * (cur[i] - prev[i]);
}

void prox_gradient_step(const double* z, const double* grad, double step, double t,
                        double* out, std::size_t n) {
  const __m256d sv = _mm256_set1_pd(step);
  const __m256d tv = _mm256_set1_pd(t);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d y =
        _mm256_sub_pd(_mm256_loadu_pd(z + i), _mm256_mul_pd(sv, _mm256_loadu_pd(grad + i)));
    _mm256_storeu_pd(out + i, shrink_pd(y, tv));
  }
  for (; i < n; ++i) out[i] = shrink(z[i] - step * grad[i], t);
}

double shrink_sum_squares(const double* w, double t, std::size_t n) {
  const __m256d tv = _mm256_set1_pd(t);
  const __m256d zero = _mm256_setzero_pd();
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d m = _mm256_max_pd(_mm256_sub_pd(abs_pd(_mm256_loadu_pd(w + i)), tv), zero);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(m, m));
  }
  double s = hsum(acc);
  for (; i < n; ++i) {
    const double m = std::abs(w[i]) - t;
    if (m > 0.0) s += m * m;
  }
  return s;
}

constexpr KernelTable kTable{Isa::avx2,    dot,         sum_squares,        abs_sum,
                             soft_threshold, extrapolate, prox_gradient_step, shrink_sum_squares};

}  // namespace

const KernelTable* avx2_kernels() { return &kTable; }

}  // namespace spcatv::simd
