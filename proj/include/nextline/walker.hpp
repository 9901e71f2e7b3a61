#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "nextline/graph.hpp"

namespace nextline {

struct WalkConfig {
  double p = 1.0;  ///< return parameter
  double q = 0.5;  ///< in-out parameter
  std::size_t num_walks = 10;
  std::size_t walk_length = 10;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Symmetric CSR adjacency. Neighbor lists are sorted by node id.
class AdjacencyView {
 public:
  AdjacencyView() = default;
  /// Edges may repeat (weights are summed) and may list either orientation.
  AdjacencyView(std::size_t node_count, std::span<const Edge> edges);

  std::size_t node_count() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::size_t edge_count() const { return neighbors_.size() / 2; }
  std::span<const NodeId> neighbors(NodeId v) const;
  std::span<const double> weights(NodeId v) const;
  std::size_t degree(NodeId v) const { return offsets_[v + 1] - offsets_[v]; }
  bool has_edge(NodeId a, NodeId b) const;
  /// 0 if the nodes are not adjacent.
  double weight(NodeId a, NodeId b) const;

 private:
  std::vector<std::size_t> offsets_;
  std::vector<NodeId> neighbors_;
  std::vector<double> weights_;
};

/// Reads every shard and symmetrizes. Nodes without edges get empty lists.
AdjacencyView load_adjacency(std::span<const EdgeShard> shards, std::size_t node_count);

using Walk = std::vector<NodeId>;

/// Normalized next-step distribution from `cur`, having arrived from `prev`
/// (nullopt on the first step). Score of candidate x is alpha * w(cur, x)
/// with alpha = 1/p if x == prev, 1 if x neighbors prev, 1/q otherwise.
/// Throws a Distribution error if `cur` is isolated.
std::vector<std::pair<NodeId, double>> transition_distribution(std::optional<NodeId> prev, NodeId cur,
                                                               const AdjacencyView& adj,
                                                               const WalkConfig& cfg);

/// Walk `walk_index` from `start`, seeded from (cfg.seed, start, walk_index).
Walk simulate_walk(const AdjacencyView& adj, const WalkConfig& cfg, NodeId start,
                   std::size_t walk_index);

/// Walks in (start node, walk index) order: num_walks per node, each of
/// walk_length nodes, or a single node when the start is isolated.
void for_each_walk(const AdjacencyView& adj, const WalkConfig& cfg,
                   const std::function<void(const Walk&)>& visit);

/// Flat storage for a walk corpus.
struct WalkCorpus {
  std::vector<NodeId> tokens;
  std::vector<std::size_t> offsets{0};  // walk i spans [offsets[i], offsets[i+1])

  std::size_t size() const { return offsets.size() - 1; }
  std::span<const NodeId> walk(std::size_t i) const {
    return {tokens.data() + offsets[i], offsets[i + 1] - offsets[i]};
  }
  void push_back(std::span<const NodeId> walk);
};

WalkCorpus generate_walks(const AdjacencyView& adj, const WalkConfig& cfg);

/// Debug dump: one walk per line, ids separated by single spaces.
void write_walks(const WalkCorpus& walks, std::ostream& out);

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0);

}  // namespace nextline
