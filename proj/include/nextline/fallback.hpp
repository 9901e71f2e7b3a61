#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "nextline/embedder.hpp"
#include "nextline/graph.hpp"
#include "nextline/vecindex.hpp"

namespace nextline {

/// Character n-gram feature hashing: the line is padded as "<line>", every
/// byte n-gram with ngram_min <= n <= ngram_max is hashed (seeded FNV-1a)
/// into one of text_dim buckets with a +-1 sign from a second hash, and the
/// bucket counts are L2-normalized.
struct LexicalEmbedderConfig {
  std::size_t ngram_min = 3;
  std::size_t ngram_max = 5;
  std::size_t text_dim = 384;
  std::uint64_t hash_seed = 0x9e3779b97f4a7c15ull;

  void validate() const;
};

/// Unit-norm embedding. Empty input is an Input error.
std::vector<float> embed_text(std::string_view line, const LexicalEmbedderConfig& cfg);

struct PcaModel {
  static constexpr std::uint32_t kFormatVersion = 1;

  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  std::vector<double> mean;                ///< in_dim
  std::vector<double> components;          ///< out_dim x in_dim, orthonormal rows
  std::vector<double> explained_variance;  ///< out_dim, non-increasing

  /// components * (v - mean)
  std::vector<float> reduce(std::span<const float> v) const;
  /// mean + components^T * z
  std::vector<double> reconstruct(std::span<const double> z) const;
  /// The same model with every parameter rounded to single precision, i.e.
  /// exactly what load() returns after save().
  PcaModel to_single_precision() const;

  /// "NLPC", u32 version, u32 in_dim, u32 out_dim, then mean, components and
  /// explained variance as little-endian f32.
  void save(const std::filesystem::path& path) const;
  static PcaModel load(const std::filesystem::path& path);
};

enum class PcaRankPolicy {
  RequireSamples,     ///< fewer than out_dim + 1 samples is a Config error
  AllowRankDeficient  ///< trailing components span the null space
};

/// `samples` is n x dim row-major. Components are the leading eigenvectors
/// of the sample covariance (n - 1 denominator), descending, each signed so
/// its largest-magnitude entry is positive.
PcaModel fit_pca(std::span<const float> samples, std::size_t dim, std::size_t out_dim,
                 PcaRankPolicy policy = PcaRankPolicy::RequireSamples);

/// At most `cap` distinct row numbers from [0, total), ascending, seeded.
std::vector<std::size_t> sample_rows(std::size_t total, std::size_t cap, std::uint64_t seed);

/// Precomputed text embeddings: "NLTE", u32 version, u32 dim, u32 reserved,
/// u64 count, count x dim little-endian f32. Row i belongs to vocabulary id i.
EmbeddingTable load_text_embeddings(const std::filesystem::path& path);
void save_text_embeddings(const EmbeddingTable& table, const std::filesystem::path& path);

/// Lexical embeddings of `lines`, one row each.
EmbeddingTable embed_lines(std::span<const std::string> lines, const LexicalEmbedderConfig& cfg);

/// Row i of the result is reduce(text_embeddings row i) in binary16.
VectorIndex build_text_index(const EmbeddingTable& text_embeddings, const PcaModel& pca);

/// Top-1 id of the text index for an already computed text embedding.
NodeId resolve_oov(std::span<const float> text_embedding, const VectorIndex& text_index, const PcaModel& pca);

/// Top-1 id of the text index for the lexical embedding of `line`.
NodeId resolve_oov(std::string_view line, const VectorIndex& text_index, const PcaModel& pca,
                   const LexicalEmbedderConfig& cfg);

}  // namespace nextline
