#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nextline/graph.hpp"

namespace nextline {

/// Immutable sorted key-value file with a sparse block index. Opening reads
/// only the header and the index (first key per ~4 KiB block); a lookup
/// reads one block with pread, so readers never hold the data in memory.
///
/// Layout (little-endian):
///   header  "NLKV" u32 version, u32 kind, u32 reserved, u64 entries,
///           u64 blocks, u64 index_offset
///   blocks  records {u32 key_len, u32 value_len, key, value}, sorted by key
///   index   per block {u64 offset, u32 size, u32 crc32, u32 key_len, first key}
class SortedTable {
 public:
  static constexpr std::uint32_t kFormatVersion = 1;
  static constexpr std::size_t kTargetBlockBytes = 4096;

  /// Entries must be sorted by key with no duplicates.
  static void write(const std::filesystem::path& path, std::uint32_t kind,
                    const std::vector<std::pair<std::string, std::string>>& sorted_entries);
  static SortedTable open(const std::filesystem::path& path, std::uint32_t expected_kind);

  SortedTable(SortedTable&& other) noexcept;
  SortedTable& operator=(SortedTable&& other) noexcept;
  SortedTable(const SortedTable&) = delete;
  SortedTable& operator=(const SortedTable&) = delete;
  ~SortedTable();

  std::optional<std::string> get(std::string_view key) const;
  std::uint64_t size() const { return entries_; }
  std::uint64_t file_bytes() const { return file_bytes_; }
  /// Visits every entry in key order.
  void for_each(const std::function<void(std::string_view key, std::string_view value)>& visit) const;

 private:
  struct BlockRef {
    std::uint64_t offset;
    std::uint32_t size;
    std::uint32_t crc;
    std::string first_key;
  };

  SortedTable() = default;
  std::vector<char> read_block(std::size_t b) const;

  int fd_ = -1;
  std::filesystem::path path_;
  std::uint64_t entries_ = 0;
  std::uint64_t file_bytes_ = 0;
  std::vector<BlockRef> blocks_;
};

/// The two persistent directions of the line <-> id mapping.
class MapStore {
 public:
  static constexpr std::uint32_t kLineToIdKind = 1;
  static constexpr std::uint32_t kIdToLineKind = 2;

  /// Persists both directions. `pairs` must be a bijection: a repeated line
  /// or id is a Build error.
  static MapStore put_all(const std::filesystem::path& line_to_id_path,
                          const std::filesystem::path& id_to_line_path,
                          std::vector<std::pair<std::string, NodeId>> pairs);
  static MapStore open(const std::filesystem::path& line_to_id_path,
                       const std::filesystem::path& id_to_line_path);

  std::optional<NodeId> get_id(std::string_view line) const;
  std::optional<std::string> get_line(NodeId id) const;
  std::uint64_t size() const { return line_to_id_.size(); }
  const SortedTable& line_to_id() const { return line_to_id_; }
  const SortedTable& id_to_line() const { return id_to_line_; }

 private:
  MapStore(SortedTable a, SortedTable b) : line_to_id_(std::move(a)), id_to_line_(std::move(b)) {}

  SortedTable line_to_id_;
  SortedTable id_to_line_;
};

}  // namespace nextline
