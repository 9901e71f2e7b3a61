#include <algorithm>
#include <queue>

#include "nextline/embedder.hpp"
#include "nextline/error.hpp"

namespace nextline {

HuffmanTree HuffmanTree::build(std::span<const std::uint64_t> freq) {
  const std::size_t leaves = freq.size();
  if (leaves < 2) fail(ErrorKind::Config, "hierarchical softmax needs at least 2 distinct lines, got " + std::to_string(leaves));

  // Node numbering: leaves 0..V-1, internal nodes V..2V-2.
  using Entry = std::pair<std::uint64_t, std::size_t>;  // (weight, node)
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
  for (std::size_t i = 0; i < leaves; ++i) heap.emplace(freq[i], i);

  std::vector<std::size_t> parent(2 * leaves - 1, 0);
  std::vector<std::uint8_t> bit(2 * leaves - 1, 0);
  std::size_t next = leaves;
  while (heap.size() > 1) {
    const auto [wa, a] = heap.top();
    heap.pop();
    const auto [wb, b] = heap.top();
    heap.pop();
    parent[a] = next;
    parent[b] = next;
    bit[b] = 1;
    heap.emplace(wa + wb, next);
    ++next;
  }
  const std::size_t root = 2 * leaves - 2;

  HuffmanTree tree;
  tree.offsets_.reserve(leaves + 1);
  tree.offsets_.push_back(0);
  std::vector<std::uint8_t> code;
  std::vector<std::uint32_t> points;
  for (std::size_t leaf = 0; leaf < leaves; ++leaf) {
    code.clear();
    points.clear();
    for (std::size_t n = leaf; n != root; n = parent[n]) {
      code.push_back(bit[n]);
      points.push_back(static_cast<std::uint32_t>(parent[n] - leaves));
    }
    tree.codes_.insert(tree.codes_.end(), code.rbegin(), code.rend());
    tree.points_.insert(tree.points_.end(), points.rbegin(), points.rend());
    tree.offsets_.push_back(tree.codes_.size());
  }
  return tree;
}

std::span<const std::uint8_t> HuffmanTree::code(NodeId leaf) const {
  return {codes_.data() + offsets_[leaf], offsets_[leaf + 1] - offsets_[leaf]};
}

std::span<const std::uint32_t> HuffmanTree::path(NodeId leaf) const {
  return {points_.data() + offsets_[leaf], offsets_[leaf + 1] - offsets_[leaf]};
}

}  // namespace nextline
