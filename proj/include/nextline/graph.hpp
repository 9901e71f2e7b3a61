#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "nextline/corpus.hpp"

namespace nextline {

using NodeId = std::uint32_t;

/// Distinct lines with contiguous ids 0..V-1, ordered by descending
/// frequency then ascending line text.
class Vocabulary {
 public:
  Vocabulary() = default;
  Vocabulary(std::vector<std::string> lines, std::vector<std::uint64_t> freq);

  Vocabulary(const Vocabulary& other) : Vocabulary(other.lines_, other.freq_) {}
  Vocabulary& operator=(const Vocabulary& other);
  Vocabulary(Vocabulary&&) noexcept = default;
  Vocabulary& operator=(Vocabulary&&) noexcept = default;

  std::size_t size() const { return lines_.size(); }
  std::optional<NodeId> id_of(std::string_view line) const;
  const std::string& line(NodeId id) const { return lines_.at(id); }
  std::uint64_t freq(NodeId id) const { return freq_.at(id); }
  std::span<const std::string> lines() const { return lines_; }
  std::span<const std::uint64_t> frequencies() const { return freq_; }

  /// Sidecar format: one "id<TAB>freq<TAB>line" record per text line, ids in order.
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

 private:
  void index();

  std::vector<std::string> lines_;
  std::vector<std::uint64_t> freq_;
  std::unordered_map<std::string_view, NodeId> ids_;
};

/// Throws an Input error ("empty corpus") when no line was retained.
Vocabulary build_vocabulary(std::span<const LineSequence> sequences);

struct Edge {
  NodeId u;
  NodeId v;
  std::uint64_t weight;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Undirected transition counts, keyed canonically with u < v.
class EdgeAccumulator {
 public:
  void add(NodeId a, NodeId b, std::uint64_t weight = 1);
  std::size_t edge_count() const { return weights_.size(); }
  std::uint64_t weight(NodeId a, NodeId b) const;
  std::uint64_t total_weight() const;
  /// All edges sorted by (u, v).
  std::vector<Edge> sorted_edges() const;

 private:
  static std::uint64_t key(NodeId a, NodeId b);
  std::unordered_map<std::uint64_t, std::uint64_t> weights_;
};

/// Adds one unit per adjacent pair inside each block; identical adjacent
/// lines are skipped. A line missing from `vocab` is an Internal error.
EdgeAccumulator accumulate_edges(std::span<const LineSequence> sequences, const Vocabulary& vocab);

struct EdgeShard {
  std::filesystem::path path;
  std::size_t edge_count = 0;
};

inline constexpr std::size_t kDefaultMaxEdgesPerShard = 10'000'000;

/// Writes "u<TAB>v<TAB>w" lines, globally sorted by (u, v), split into files
/// `edges-NNNNN.edg` of at most `max_edges_per_shard` edges.
std::vector<EdgeShard> write_edge_shards(const EdgeAccumulator& acc, const std::filesystem::path& dir,
                                         std::size_t max_edges_per_shard = kDefaultMaxEdgesPerShard);

/// Parse errors name the shard path and 1-based line number.
std::vector<Edge> read_edge_shard(const std::filesystem::path& path);

}  // namespace nextline
