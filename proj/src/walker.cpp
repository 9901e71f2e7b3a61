#include "nextline/walker.hpp"

#include <algorithm>
#include <ostream>
#include <random>

#include "nextline/error.hpp"

namespace nextline {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Scores for each neighbor of `cur`, in neighbor order. Both lists are
// sorted, so "x neighbors prev" is a merge rather than a search per x.
void bias_scores(std::optional<NodeId> prev, NodeId cur, const AdjacencyView& adj,
                 const WalkConfig& cfg, std::vector<double>& scores) {
  const auto nbrs = adj.neighbors(cur);
  const auto w = adj.weights(cur);
  scores.resize(nbrs.size());
  if (!prev) {
    std::copy(w.begin(), w.end(), scores.begin());
    return;
  }
  const auto prev_nbrs = adj.neighbors(*prev);
  std::size_t j = 0;
  for (std::size_t i = 0; i < nbrs.size(); ++i) {
    const NodeId x = nbrs[i];
    double alpha;
    if (x == *prev) {
      alpha = 1.0 / cfg.p;
    } else {
      while (j < prev_nbrs.size() && prev_nbrs[j] < x) ++j;
      alpha = (j < prev_nbrs.size() && prev_nbrs[j] == x) ? 1.0 : 1.0 / cfg.q;
    }
    scores[i] = alpha * w[i];
  }
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return splitmix64(splitmix64(splitmix64(a) ^ b) ^ c);
}

void WalkConfig::validate() const {
  if (!(p > 0.0)) fail(ErrorKind::Config, "walk parameter p must be > 0");
  if (!(q > 0.0)) fail(ErrorKind::Config, "walk parameter q must be > 0");
  if (num_walks < 1) fail(ErrorKind::Config, "num_walks must be >= 1");
  if (walk_length < 1) fail(ErrorKind::Config, "walk_length must be >= 1");
}

AdjacencyView::AdjacencyView(std::size_t node_count, std::span<const Edge> edges) {
  struct Arc { NodeId from, to; double w; };
  std::vector<Arc> halves;
  halves.reserve(edges.size() * 2);
  for (const Edge& e : edges) {
    if (e.u >= node_count || e.v >= node_count) {
      fail(ErrorKind::Parse, "edge (" + std::to_string(e.u) + "," + std::to_string(e.v) +
                                 ") references a node outside the vocabulary of " +
                                 std::to_string(node_count));
    }
    if (e.u == e.v) continue;
    halves.push_back({e.u, e.v, static_cast<double>(e.weight)});
    halves.push_back({e.v, e.u, static_cast<double>(e.weight)});
  }
  std::sort(halves.begin(), halves.end(),
            [](const Arc& a, const Arc& b) { return a.from != b.from ? a.from < b.from : a.to < b.to; });

  offsets_.assign(node_count + 1, 0);
  for (std::size_t i = 0; i < halves.size(); ++i) {
    if (i > 0 && halves[i].from == halves[i - 1].from && halves[i].to == halves[i - 1].to) {
      weights_.back() += halves[i].w;
      continue;
    }
    neighbors_.push_back(halves[i].to);
    weights_.push_back(halves[i].w);
    ++offsets_[halves[i].from + 1];
  }
  for (std::size_t v = 0; v < node_count; ++v) offsets_[v + 1] += offsets_[v];
}

std::span<const NodeId> AdjacencyView::neighbors(NodeId v) const {
  return {neighbors_.data() + offsets_[v], offsets_[v + 1] - offsets_[v]};
}

std::span<const double> AdjacencyView::weights(NodeId v) const {
  return {weights_.data() + offsets_[v], offsets_[v + 1] - offsets_[v]};
}

double AdjacencyView::weight(NodeId a, NodeId b) const {
  const auto nbrs = neighbors(a);
  auto it = std::lower_bound(nbrs.begin(), nbrs.end(), b);
  if (it == nbrs.end() || *it != b) return 0.0;
  return weights(a)[static_cast<std::size_t>(it - nbrs.begin())];
}

bool AdjacencyView::has_edge(NodeId a, NodeId b) const { return weight(a, b) > 0.0; }

AdjacencyView load_adjacency(std::span<const EdgeShard> shards, std::size_t node_count) {
  std::vector<Edge> edges;
  for (const auto& shard : shards) {
    auto part = read_edge_shard(shard.path);
    edges.insert(edges.end(), part.begin(), part.end());
  }
  return AdjacencyView(node_count, edges);
}

std::vector<std::pair<NodeId, double>> transition_distribution(std::optional<NodeId> prev, NodeId cur,
                                                               const AdjacencyView& adj,
                                                               const WalkConfig& cfg) {
  if (cur >= adj.node_count()) fail(ErrorKind::Distribution, "node out of range");
  if (adj.degree(cur) == 0) {
    fail(ErrorKind::Distribution, "node " + std::to_string(cur) + " has no neighbors");
  }
  std::vector<double> scores;
  bias_scores(prev, cur, adj, cfg, scores);
  double total = 0.0;
  for (double s : scores) total += s;
  const auto nbrs = adj.neighbors(cur);
  std::vector<std::pair<NodeId, double>> dist(nbrs.size());
  for (std::size_t i = 0; i < nbrs.size(); ++i) dist[i] = {nbrs[i], scores[i] / total};
  return dist;
}

Walk simulate_walk(const AdjacencyView& adj, const WalkConfig& cfg, NodeId start,
                   std::size_t walk_index) {
  Walk walk;
  walk.reserve(cfg.walk_length);
  walk.push_back(start);
  if (adj.degree(start) == 0) return walk;

  std::mt19937_64 rng(mix_seed(cfg.seed, start, walk_index));
  std::vector<double> scores;
  std::optional<NodeId> prev;
  NodeId cur = start;
  while (walk.size() < cfg.walk_length) {
    bias_scores(prev, cur, adj, cfg, scores);
    double total = 0.0;
    for (double s : scores) total += s;
    const double target = uniform01(rng) * total;
    std::size_t pick = 0;
    double cumulative = scores[0];
    while (cumulative <= target && pick + 1 < scores.size()) cumulative += scores[++pick];
    prev = cur;
    cur = adj.neighbors(cur)[pick];
    walk.push_back(cur);
  }
  return walk;
}

void for_each_walk(const AdjacencyView& adj, const WalkConfig& cfg,
                   const std::function<void(const Walk&)>& visit) {
  cfg.validate();
  for (std::size_t v = 0; v < adj.node_count(); ++v) {
    for (std::size_t w = 0; w < cfg.num_walks; ++w) visit(simulate_walk(adj, cfg, static_cast<NodeId>(v), w));
  }
}

void WalkCorpus::push_back(std::span<const NodeId> walk) {
  tokens.insert(tokens.end(), walk.begin(), walk.end());
  offsets.push_back(tokens.size());
}

WalkCorpus generate_walks(const AdjacencyView& adj, const WalkConfig& cfg) {
  WalkCorpus corpus;
  corpus.tokens.reserve(adj.node_count() * cfg.num_walks * cfg.walk_length);
  corpus.offsets.reserve(adj.node_count() * cfg.num_walks + 1);
  for_each_walk(adj, cfg, [&](const Walk& w) { corpus.push_back(w); });
  return corpus;
}

void write_walks(const WalkCorpus& walks, std::ostream& out) {
  for (std::size_t i = 0; i < walks.size(); ++i) {
    const auto w = walks.walk(i);
    for (std::size_t j = 0; j < w.size(); ++j) {
      if (j) out << ' ';
      out << w[j];
    }
    out << '\n';
  }
}

}  // namespace nextline
