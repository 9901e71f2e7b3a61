#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "nextline/graph.hpp"
#include "nextline/walker.hpp"

namespace nextline {

/// Binary prefix code over token frequencies. Leaves are token ids
/// 0..V-1; internal nodes are numbered 0..V-2 in creation order, so the
/// root is V-2. Paths and codes run root to leaf.
class HuffmanTree {
 public:
  /// Requires at least two tokens (Config error otherwise). Among
  /// equal-weight subtrees the lower node number merges first and takes bit 0.
  static HuffmanTree build(std::span<const std::uint64_t> freq);

  std::size_t leaf_count() const { return offsets_.size() - 1; }
  std::size_t internal_count() const { return leaf_count() - 1; }
  std::span<const std::uint8_t> code(NodeId leaf) const;
  std::span<const std::uint32_t> path(NodeId leaf) const;
  std::size_t code_length(NodeId leaf) const { return offsets_[leaf + 1] - offsets_[leaf]; }

 private:
  std::vector<std::uint8_t> codes_;
  std::vector<std::uint32_t> points_;
  std::vector<std::size_t> offsets_;
};

struct TrainConfig {
  std::size_t vector_size = 128;
  std::size_t window = 5;
  std::size_t min_count = 1;
  std::size_t workers = default_workers();
  std::size_t epochs = 100;
  double initial_lr = 0.025;
  double min_lr = 0.0001;
  std::uint64_t seed = 1;

  /// Hardware threads minus one, at least one.
  static std::size_t default_workers();
  void validate() const;
};

/// Input vectors are the line embeddings; internal vectors belong to
/// Huffman internal nodes. Both row-major.
struct EmbeddingModel {
  std::size_t vocab_size = 0;
  std::size_t dim = 0;
  std::vector<float> input;
  std::vector<float> internal;

  /// input ~ U(-0.5/dim, 0.5/dim), internal = 0.
  static EmbeddingModel initialize(std::size_t vocab_size, std::size_t dim, std::uint64_t seed);

  std::span<float> input_row(NodeId id) { return {input.data() + std::size_t{id} * dim, dim}; }
  std::span<const float> input_row(NodeId id) const {
    return {input.data() + std::size_t{id} * dim, dim};
  }
  bool all_finite() const;

  /// Checkpoint: "NLEM", u32 version, u64 V, u64 dim, V*dim f32, (V-1)*dim f32,
  /// all little-endian.
  void save(const std::filesystem::path& path) const;
  static EmbeddingModel load(const std::filesystem::path& path);
};

struct TrainStats {
  std::vector<double> epoch_mean_loss;  ///< mean hierarchical-softmax loss per (center, context) pair
  std::uint64_t pairs_per_epoch = 0;
};

/// Skip-gram with hierarchical softmax over `walks`, continuing from `model`.
/// One worker gives a bit-reproducible run; more workers update the shared
/// matrices lock-free.
TrainStats train_skipgram_hs(const WalkCorpus& walks, const HuffmanTree& tree, const TrainConfig& cfg,
                             EmbeddingModel& model);

/// Builds the tree from `vocab`, initializes a fresh model and trains it.
EmbeddingModel train_skipgram_hs(const WalkCorpus& walks, const Vocabulary& vocab, const TrainConfig& cfg,
                                 TrainStats* stats = nullptr);

struct EmbeddingTable {
  std::size_t dim = 0;
  std::size_t count = 0;
  std::vector<float> rows;

  std::span<const float> row(std::size_t i) const { return {rows.data() + i * dim, dim}; }
};

/// Rows 0..min(top_n, V)-1 of the input matrix, i.e. the most frequent lines.
EmbeddingTable extract_embeddings(const EmbeddingModel& model, std::size_t top_n);

namespace detail {

/// One (center, context) step: for each internal node on the context's path,
/// s = sigmoid(center . node), g = (1 - bit - s) * lr; the node moves by
/// g * center and the center by the sum of g * node (pre-update values).
/// Returns the pair loss sum of -log P(bit). `scratch` must hold dim floats.
double hs_pair_update(float* center, float* internal, std::span<const std::uint32_t> path,
                      std::span<const std::uint8_t> code, std::size_t dim, float lr, float* scratch);

/// Double-precision pair loss and its gradient with respect to the center
/// vector and each path node vector (rows of `nodes`, path order).
double hs_pair_loss_grad(std::span<const double> center, std::span<const double> nodes,
                         std::span<const std::uint8_t> code, std::span<double> grad_center,
                         std::span<double> grad_nodes);

}  // namespace detail

}  // namespace nextline
