#include "nextline/kernels.hpp"

#if defined(__x86_64__) || defined(__i386__)
#include <immintrin.h>
#define NEXTLINE_HAVE_AVX2_VARIANT 1
#else
#define NEXTLINE_HAVE_AVX2_VARIANT 0
#endif

namespace nextline::kernels {

#if NEXTLINE_HAVE_AVX2_VARIANT
namespace {

#define NL_TARGET __attribute__((target("avx2,f16c")))

NL_TARGET float l2sq_half(const Half* row, const float* query, std::size_t dim) {
  __m256 acc = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= dim; i += 8) {
    const __m128i h = _mm_loadu_si128(reinterpret_cast<const __m128i*>(row + i));
    const __m256 d = _mm256_sub_ps(_mm256_cvtph_ps(h), _mm256_loadu_ps(query + i));
    acc = _mm256_add_ps(acc, _mm256_mul_ps(d, d));
  }
  alignas(32) float lanes[8];
  _mm256_store_ps(lanes, acc);
  for (; i < dim; ++i) {
    const float d = _cvtsh_ss(row[i]) - query[i];
    lanes[i & 7] += d * d;
  }
  return fold_lanes(lanes);
}

NL_TARGET void l2sq_half_batch(const Half* rows, std::size_t count, std::size_t dim,
                               const float* query, float* out) {
  for (std::size_t r = 0; r < count; ++r) {
    if (r + 2 < count) _mm_prefetch(reinterpret_cast<const char*>(rows + (r + 2) * dim), _MM_HINT_T0);
    out[r] = l2sq_half(rows + r * dim, query, dim);
  }
}

NL_TARGET float dot(const float* a, const float* b, std::size_t n) {
  __m256 acc = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc = _mm256_add_ps(acc, _mm256_mul_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
  }
  alignas(32) float lanes[8];
  _mm256_store_ps(lanes, acc);
  for (; i < n; ++i) lanes[i & 7] += a[i] * b[i];
  return fold_lanes(lanes);
}

NL_TARGET void axpy(float alpha, const float* x, float* y, std::size_t n) {
  const __m256 va = _mm256_set1_ps(alpha);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 prod = _mm256_mul_ps(va, _mm256_loadu_ps(x + i));
    _mm256_storeu_ps(y + i, _mm256_add_ps(_mm256_loadu_ps(y + i), prod));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

NL_TARGET void to_half(const float* in, Half* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m128i h =
        _mm256_cvtps_ph(_mm256_loadu_ps(in + i), _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    _mm_storeu_si128(reinterpret_cast<__m128i*>(out + i), h);
  }
  for (; i < n; ++i) out[i] = nextline::float_to_half(in[i]);
}

NL_TARGET void to_float(const Half* in, float* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m128i h = _mm_loadu_si128(reinterpret_cast<const __m128i*>(in + i));
    _mm256_storeu_ps(out + i, _mm256_cvtph_ps(h));
  }
  for (; i < n; ++i) out[i] = nextline::half_to_float(in[i]);
}

#undef NL_TARGET

}  // namespace

const KernelTable* avx2_kernels() {
  static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("f16c");
  static const KernelTable table{"avx2", l2sq_half, l2sq_half_batch, dot, axpy, to_half, to_float};
  return supported ? &table : nullptr;
}

#else

const KernelTable* avx2_kernels() { return nullptr; }

#endif

}  // namespace nextline::kernels
