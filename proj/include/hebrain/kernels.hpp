#pragma once
// Dense double-precision inner loops.
//
// Every kernel exists as a scalar reference and, where the target supports it,
// an AVX2/FMA (x86-64) or NEON (aarch64) variant. The active table is chosen
// once at startup from CPU features; HEBRAIN_KERNELS=scalar|avx2|neon in the
// environment overrides the choice. Elementwise kernels are bit-identical
// across variants; reductions (dot, gemm, axpy with FMA) agree to rounding.

#include <cstddef>
#include <span>
#include <string_view>

namespace hebrain::kernels {

enum class Isa { Scalar, Avx2, Neon };

struct KernelTable {
  Isa isa;
  std::string_view name;

  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // out = a * b (elementwise)
  void (*mul)(const double* a, const double* b, double* out, std::size_t n);
  // out = a + b
  void (*add)(const double* a, const double* b, double* out, std::size_t n);
  // out = alpha * x
  void (*scale)(double alpha, const double* x, double* out, std::size_t n);
  // C[m x n] += A[m x k] * B[k x n], all row-major and densely packed.
  void (*gemm)(std::size_t m, std::size_t n, std::size_t k, const double* a,
               const double* b, double* c);
};

const KernelTable& scalar_table();
// nullptr when the variant was not compiled in or the CPU lacks the feature.
const KernelTable* avx2_table();
const KernelTable* neon_table();

// The table used by Matrix operations.
const KernelTable& active();

// Force a specific table (tests, benchmarking). Throws ConfigError when the
// requested variant is unavailable on this machine.
void select(Isa isa);
void select_by_name(std::string_view name);

}  // namespace hebrain::kernels
