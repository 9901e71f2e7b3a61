#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

#include "nextline/half.hpp"

// Data-parallel inner loops. Every kernel has a scalar reference and, on x86,
// an AVX2/F16C variant chosen once at startup. Variants are bit-identical:
// reductions accumulate in 8 interleaved lanes (element i feeds lane i % 8)
// and fold as ((l0+l4)+(l2+l6)) + ((l1+l5)+(l3+l7)).
namespace nextline::kernels {

struct KernelTable {
  std::string_view name;

  /// Squared L2 distance between a binary16 row and a single-precision query.
  float (*l2sq_half)(const Half* row, const float* query, std::size_t dim);
  /// out[r] = l2sq_half(rows + r * dim, query, dim) for r in [0, count).
  void (*l2sq_half_batch)(const Half* rows, std::size_t count, std::size_t dim,
                          const float* query, float* out);
  float (*dot)(const float* a, const float* b, std::size_t n);
  /// y += alpha * x
  void (*axpy)(float alpha, const float* x, float* y, std::size_t n);
  void (*float_to_half)(const float* in, Half* out, std::size_t n);
  void (*half_to_float)(const Half* in, float* out, std::size_t n);
};

const KernelTable& scalar_kernels();

/// nullptr when the binary or the CPU lacks AVX2+F16C.
const KernelTable* avx2_kernels();

/// The table used by the library: the best supported variant, unless the
/// NEXTLINE_SIMD environment variable is set to "scalar".
const KernelTable& active();

/// Folds 8 lane accumulators in the canonical order.
inline float fold_lanes(const float lanes[8]) {
  const float s0 = lanes[0] + lanes[4];
  const float s1 = lanes[1] + lanes[5];
  const float s2 = lanes[2] + lanes[6];
  const float s3 = lanes[3] + lanes[7];
  return (s0 + s2) + (s1 + s3);
}

}  // namespace nextline::kernels
