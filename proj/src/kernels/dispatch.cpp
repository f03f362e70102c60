#include <atomic>
#include <cstdlib>
#include <string>

#include "hebrain/errors.hpp"
#include "hebrain/kernels.hpp"

namespace hebrain::kernels {

#if defined(HEBRAIN_HAVE_AVX2)
const KernelTable& avx2_table_impl();
#endif
#if defined(HEBRAIN_HAVE_NEON)
const KernelTable& neon_table_impl();
#endif

const KernelTable* avx2_table() {
#if defined(HEBRAIN_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  static const bool supported =
      __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return supported ? &avx2_table_impl() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable* neon_table() {
#if defined(HEBRAIN_HAVE_NEON)
  // Advanced SIMD is mandatory on aarch64.
  return &neon_table_impl();
#else
  return nullptr;
#endif
}

namespace {

const KernelTable* lookup(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return &scalar_table();
    case Isa::Avx2:
      return avx2_table();
    case Isa::Neon:
      return neon_table();
  }
  return nullptr;
}

Isa parse_isa(std::string_view name) {
  if (name == "scalar") return Isa::Scalar;
  if (name == "avx2") return Isa::Avx2;
  if (name == "neon") return Isa::Neon;
  throw ConfigError("unknown kernel variant '" + std::string(name) +
                    "' (expected scalar, avx2 or neon)");
}

const KernelTable* detect() {
  if (const char* env = std::getenv("HEBRAIN_KERNELS"); env != nullptr && *env) {
    const KernelTable* t = lookup(parse_isa(env));
    if (t == nullptr)
      throw ConfigError(std::string("HEBRAIN_KERNELS=") + env +
                        " is not available on this machine");
    return t;
  }
  if (const KernelTable* t = avx2_table()) return t;
  if (const KernelTable* t = neon_table()) return t;
  return &scalar_table();
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{detect()};
  return table;
}

}  // namespace

const KernelTable& active() { return *current().load(std::memory_order_relaxed); }

void select(Isa isa) {
  const KernelTable* t = lookup(isa);
  if (t == nullptr) throw ConfigError("kernel variant is not available on this machine");
  current().store(t, std::memory_order_relaxed);
}

void select_by_name(std::string_view name) { select(parse_isa(name)); }

}  // namespace hebrain::kernels
