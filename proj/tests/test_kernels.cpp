#include <doctest.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "spcatv/kernels.hpp"

using namespace spcatv::simd;

namespace {

std::vector<const KernelTable*> variants() {
  std::vector<const KernelTable*> out{&scalar_kernels()};
  if (avx2_kernels() && supported(Isa::avx2)) out.push_back(avx2_kernels());
  if (neon_kernels() && supported(Isa::neon)) out.push_back(neon_kernels());
  return out;
}

std::vector<double> sample(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> d(0.0, 2.0);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  // Exercise exact threshold hits and signed zeros.
  if (n > 3) {
    v[0] = 0.5;
    v[1] = -0.5;
    v[2] = -0.0;
  }
  return v;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_SUITE("kernels") {
  TEST_CASE("elementwise kernels are bit-identical across variants") {
    std::mt19937_64 rng(11);
    const auto ref = scalar_kernels();
    for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 16u, 33u, 1001u}) {
      const auto x = sample(rng, n);
      const auto y = sample(rng, n);
      for (const KernelTable* k : variants()) {
        CAPTURE(name(k->isa));
        CAPTURE(n);
        std::vector<double> a(n), b(n);
        ref.soft_threshold(x.data(), 0.5, a.data(), n);
        k->soft_threshold(x.data(), 0.5, b.data(), n);
        CHECK(same_bits(a, b));
        ref.extrapolate(x.data(), y.data(), 0.37, a.data(), n);
        k->extrapolate(x.data(), y.data(), 0.37, b.data(), n);
        CHECK(same_bits(a, b));
        ref.prox_gradient_step(x.data(), y.data(), 0.25, 0.3, a.data(), n);
        k->prox_gradient_step(x.data(), y.data(), 0.25, 0.3, b.data(), n);
        CHECK(same_bits(a, b));
      }
    }
  }

  TEST_CASE("reductions agree across variants") {
    std::mt19937_64 rng(12);
    const auto ref = scalar_kernels();
    for (std::size_t n : {0u, 1u, 5u, 8u, 127u, 4096u}) {
      const auto x = sample(rng, n);
      const auto y = sample(rng, n);
      for (const KernelTable* k : variants()) {
        CAPTURE(name(k->isa));
        const auto close = [](double a, double b) {
          return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a));
        };
        CHECK(close(ref.dot(x.data(), y.data(), n), k->dot(x.data(), y.data(), n)));
        CHECK(close(ref.sum_squares(x.data(), n), k->sum_squares(x.data(), n)));
        CHECK(close(ref.abs_sum(x.data(), n), k->abs_sum(x.data(), n)));
        CHECK(close(ref.shrink_sum_squares(x.data(), 0.7, n), k->shrink_sum_squares(x.data(), 0.7, n)));
      }
    }
  }

  TEST_CASE("scalar reference values") {
    const auto& k = scalar_kernels();
    const double x[] = {3.0, -0.5, 1.0, -4.0};
    double out[4];
    k.soft_threshold(x, 1.0, out, 4);
    CHECK(out[0] == 2.0);
    CHECK(out[1] == 0.0);
    CHECK_FALSE(std::signbit(out[1]));
    CHECK(out[2] == 0.0);
    CHECK(out[3] == -3.0);
    CHECK(k.shrink_sum_squares(x, 1.0, 4) == doctest::Approx(13.0));
    CHECK(k.abs_sum(x, 4) == 8.5);
    const double prev[] = {1.0, 1.0, 1.0, 1.0};
    k.extrapolate(x, prev, 0.5, out, 4);
    CHECK(out[0] == 4.0);
    CHECK(out[1] == -1.25);
  }

  TEST_CASE("runtime selection") {
    const Isa before = active_isa();
    CHECK(supported(Isa::scalar));
    select(Isa::scalar);
    CHECK(active_isa() == Isa::scalar);
    CHECK(parse_isa("avx2") == Isa::avx2);
    CHECK_THROWS_AS(parse_isa("sse9"), std::invalid_argument);
    if (!supported(Isa::neon)) CHECK_THROWS_AS(select(Isa::neon), std::invalid_argument);
    select(before);
    CHECK(active_isa() == before);
  }
}
