#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "nextline/embedder.hpp"
#include "nextline/half.hpp"

namespace nextline {

struct QueryResult {
  std::uint32_t id;
  float distance;  ///< squared Euclidean distance

  friend bool operator==(const QueryResult&, const QueryResult&) = default;
};

/// Exact nearest-neighbor index over binary16 rows, row i <-> vocabulary id i.
/// Immutable once built; searches are safe from many threads.
///
/// File layout (little-endian): "NLVI", u32 version, u32 dim, u32 reserved,
/// u64 count, then count*dim binary16 values row-major.
class VectorIndex {
 public:
  static constexpr std::uint32_t kFormatVersion = 1;

  VectorIndex() = default;
  VectorIndex(std::size_t dim, std::size_t count, std::vector<Half> data);

  std::size_t dim() const { return dim_; }
  std::size_t count() const { return count_; }
  std::span<const Half> payload() const { return data_; }
  std::size_t payload_bytes() const { return data_.size() * sizeof(Half); }
  std::span<const Half> row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
  /// Row i widened to single precision.
  std::vector<float> row_as_float(std::size_t i) const;

  /// Up to k results ordered by (distance, id). Throws a Query error on a
  /// dimension mismatch or k == 0.
  std::vector<QueryResult> search(std::span<const float> query, std::size_t k) const;

  void save(const std::filesystem::path& path) const;
  static VectorIndex load(const std::filesystem::path& path);

 private:
  std::size_t dim_ = 0;
  std::size_t count_ = 0;
  std::vector<Half> data_;
};

/// Rounds every component to binary16 (nearest, ties to even). A component
/// beyond +-65504 is a Build error naming its row.
VectorIndex build_index(const EmbeddingTable& table);

}  // namespace nextline
