#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "spcatv/kernels.hpp"

namespace spcatv::simd {

#ifndef SPCATV_HAVE_AVX2
const KernelTable* avx2_kernels() { return nullptr; }
#endif
#ifndef SPCATV_HAVE_NEON
const KernelTable* neon_kernels() { return nullptr; }
#endif

namespace {

const KernelTable* table_for(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return &scalar_kernels();
    case Isa::avx2:
      return avx2_kernels();
    case Isa::neon:
      return neon_kernels();
  }
  return nullptr;
}

bool cpu_has(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(__x86_64__) || defined(__i386__)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
    case Isa::neon:
#if defined(__aarch64__)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const KernelTable* initial_table() {
  if (const char* env = std::getenv("SPCATV_ISA"); env != nullptr && *env != '\0') {
    const Isa requested = parse_isa(env);
    if (!supported(requested))
      throw std::runtime_error(std::string("SPCATV_ISA=") + env + " is not supported here");
    return table_for(requested);
  }
  for (Isa isa : {Isa::avx2, Isa::neon})
    if (supported(isa)) return table_for(isa);
  return &scalar_kernels();
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{initial_table()};
  return table;
}

}  // namespace

bool supported(Isa isa) { return table_for(isa) != nullptr && cpu_has(isa); }

std::string_view name(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
    case Isa::neon:
      return "neon";
  }
  return "unknown";
}

Isa parse_isa(std::string_view text) {
  if (text == "scalar") return Isa::scalar;
  if (text == "avx2") return Isa::avx2;
  if (text == "neon") return Isa::neon;
  throw std::invalid_argument("unknown instruction set '" + std::string(text) + "'");
}

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

Isa active_isa() { return active().isa; }

void select(Isa isa) {
  if (!supported(isa))
    throw std::invalid_argument("instruction set '" + std::string(name(isa)) +
                                "' is not available on this machine");
  current().store(table_for(isa), std::memory_order_release);
}

}  // namespace spcatv::simd
