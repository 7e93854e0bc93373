#pragma once

// Data-parallel inner loops of the solver. Every kernel has a portable scalar
// reference implementation; AVX2 (x86-64) and NEON (AArch64) variants are
// compiled when the target allows it and selected at runtime.
//
// Elementwise kernels are bit-identical across variants. Reductions may differ
// in the last bits because lane-wise accumulation changes summation order.

#include <cstddef>
#include <span>
#include <string_view>

namespace spcatv::simd {

enum class Isa { scalar, avx2, neon };

struct KernelTable {
  Isa isa;
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*sum_squares)(const double* a, std::size_t n);
  double (*abs_sum)(const double* a, std::size_t n);
  // out = sign(x) * max(|x| - t, 0), exact +0 below the threshold
  void (*soft_threshold)(const double* x, double t, double* out, std::size_t n);
  // out = cur + beta * (cur - prev)
  void (*extrapolate)(const double* cur, const double* prev, double beta, double* out,
                      std::size_t n);
  // out = soft_threshold(z - step * grad, t)
  void (*prox_gradient_step)(const double* z, const double* grad, double step, double t,
                             double* out, std::size_t n);
  // sum_j max(|w_j| - t, 0)^2
  double (*shrink_sum_squares)(const double* w, double t, std::size_t n);
};

const KernelTable& scalar_kernels();
// nullptr when the variant was not compiled in.
const KernelTable* avx2_kernels();
const KernelTable* neon_kernels();

bool supported(Isa isa);
std::string_view name(Isa isa);
Isa parse_isa(std::string_view text);

// Best supported variant, unless overridden by SPCATV_ISA=scalar|avx2|neon.
const KernelTable& active();
Isa active_isa();
// Throws std::invalid_argument for variants this machine cannot run.
void select(Isa isa);

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}
inline double sum_squares(std::span<const double> a) {
  return active().sum_squares(a.data(), a.size());
}
inline double abs_sum(std::span<const double> a) {
  return active().abs_sum(a.data(), a.size());
}
inline void soft_threshold(std::span<const double> x, double t, std::span<double> out) {
  active().soft_threshold(x.data(), t, out.data(), x.size());
}
inline void extrapolate(std::span<const double> cur, std::span<const double> prev, double beta,
                        std::span<double> out) {
  active().extrapolate(cur.data(), prev.data(), beta, out.data(), cur.size());
}
inline void prox_gradient_step(std::span<const double> z, std::span<const double> grad,
                               double step, double t, std::span<double> out) {
  active().prox_gradient_step(z.data(), grad.data(), step, t, out.data(), z.size());
}
inline double shrink_sum_squares(std::span<const double> w, double t) {
  return active().shrink_sum_squares(w.data(), t, w.size());
}

}  // namespace spcatv::simd
