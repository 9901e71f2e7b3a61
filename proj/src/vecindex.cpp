#include "nextline/vecindex.hpp"

#include <algorithm>

#include "binio.hpp"
#include "nextline/error.hpp"
#include "nextline/kernels.hpp"

namespace nextline {

namespace {
constexpr char kIndexMagic[5] = "NLVI";

bool before(const QueryResult& a, const QueryResult& b) {
  return a.distance != b.distance ? a.distance < b.distance : a.id < b.id;
}
}  // namespace

VectorIndex::VectorIndex(std::size_t dim, std::size_t count, std::vector<Half> data)
    : dim_(dim), count_(count), data_(std::move(data)) {
  if (data_.size() != dim_ * count_) fail(ErrorKind::Internal, "index payload size does not match dim x count");
}

std::vector<float> VectorIndex::row_as_float(std::size_t i) const {
  if (i >= count_) fail(ErrorKind::Query, "row " + std::to_string(i) + " out of range");
  std::vector<float> out(dim_);
  kernels::active().half_to_float(data_.data() + i * dim_, out.data(), dim_);
  return out;
}

std::vector<QueryResult> VectorIndex::search(std::span<const float> query, std::size_t k) const {
  if (query.size() != dim_) {
    fail(ErrorKind::Query, "query has dimension " + std::to_string(query.size()) + ", index has " + std::to_string(dim_));
  }
  if (k == 0) fail(ErrorKind::Query, "k must be >= 1");
  k = std::min(k, count_);
  if (k == 0) return {};

  std::vector<float> dist(count_);
  kernels::active().l2sq_half_batch(data_.data(), count_, dim_, query.data(), dist.data());

  // Max-heap of the k best seen so far; the root is the worst kept result.
  std::vector<QueryResult> heap;
  heap.reserve(k);
  for (std::size_t i = 0; i < count_; ++i) {
    const QueryResult cand{static_cast<std::uint32_t>(i), dist[i]};
    if (heap.size() < k) {
      heap.push_back(cand);
      std::push_heap(heap.begin(), heap.end(), before);
    } else if (before(cand, heap.front())) {
      std::pop_heap(heap.begin(), heap.end(), before);
      heap.back() = cand;
      std::push_heap(heap.begin(), heap.end(), before);
    }
  }
  std::sort_heap(heap.begin(), heap.end(), before);
  return heap;
}

void VectorIndex::save(const std::filesystem::path& path) const {
  binio::Writer w(path);
  w.bytes(kIndexMagic, 4);
  w.pod(kFormatVersion);
  w.pod(static_cast<std::uint32_t>(dim_));
  w.pod(std::uint32_t{0});
  w.pod(static_cast<std::uint64_t>(count_));
  w.array(data_);
  w.finish();
}

VectorIndex VectorIndex::load(const std::filesystem::path& path) {
  binio::Reader r(path);
  r.expect_magic(kIndexMagic, "vector index");
  r.expect_version(kFormatVersion, "vector index");
  const auto dim = r.pod<std::uint32_t>();
  r.pod<std::uint32_t>();
  const auto count = r.pod<std::uint64_t>();
  if (dim == 0) fail(ErrorKind::Format, path.string() + ": zero dimension");
  auto data = r.array<Half>(static_cast<std::size_t>(count) * dim);
  r.expect_end();
  return VectorIndex(dim, static_cast<std::size_t>(count), std::move(data));
}

VectorIndex build_index(const EmbeddingTable& table) {
  if (table.count == 0 || table.dim == 0) fail(ErrorKind::Input, "cannot build an index from an empty table");
  std::vector<Half> data(table.count * table.dim);
  for (std::size_t r = 0; r < table.count; ++r) {
    to_half_checked(table.row(r), std::span<Half>(data.data() + r * table.dim, table.dim), r);
  }
  return VectorIndex(table.dim, table.count, std::move(data));
}

}  // namespace nextline
