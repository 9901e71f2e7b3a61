#include "nextline/kernels.hpp"

namespace nextline::kernels {
namespace {

float l2sq_half(const Half* row, const float* query, std::size_t dim) {
  float lanes[8] = {};
  for (std::size_t i = 0; i < dim; ++i) {
    const float d = half_to_float(row[i]) - query[i];
    lanes[i & 7] += d * d;
  }
  return fold_lanes(lanes);
}

void l2sq_half_batch(const Half* rows, std::size_t count, std::size_t dim, const float* query,
                     float* out) {
  for (std::size_t r = 0; r < count; ++r) out[r] = l2sq_half(rows + r * dim, query, dim);
}

float dot(const float* a, const float* b, std::size_t n) {
  float lanes[8] = {};
  for (std::size_t i = 0; i < n; ++i) lanes[i & 7] += a[i] * b[i];
  return fold_lanes(lanes);
}

void axpy(float alpha, const float* x, float* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void to_half(const float* in, Half* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = nextline::float_to_half(in[i]);
}

void to_float(const Half* in, float* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = nextline::half_to_float(in[i]);
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{"scalar", l2sq_half, l2sq_half_batch, dot, axpy, to_half, to_float};
  return table;
}

}  // namespace nextline::kernels
