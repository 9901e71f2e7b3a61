#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nextline/corpus.hpp"
#include "nextline/embedder.hpp"
#include "nextline/fallback.hpp"
#include "nextline/graph.hpp"
#include "nextline/walker.hpp"

namespace nextline {

/// File names inside an artifact directory.
namespace bundle_files {
inline constexpr const char* kMainIndex = "main.nlvi";
inline constexpr const char* kTextIndex = "text.nlvi";
inline constexpr const char* kPca = "pca.nlpc";
inline constexpr const char* kLineToId = "line_to_id.nlkv";
inline constexpr const char* kIdToLine = "id_to_line.nlkv";
inline constexpr const char* kManifest = "manifest.json";
inline constexpr int kBundleVersion = 1;
}  // namespace bundle_files

struct PipelineConfig {
  LanguageProfile profile;
  BlockSeparator separator = BlockSeparator::BlankLine;
  WalkConfig walk;
  TrainConfig train;
  LexicalEmbedderConfig lexical;
  std::size_t top_n = 1'000'000;
  std::size_t max_edges_per_shard = kDefaultMaxEdgesPerShard;
  std::size_t pca_fit_cap = 100'000;
  /// Precomputed text embeddings (row i = vocabulary id i) instead of the
  /// lexical embedder.
  std::optional<std::filesystem::path> text_embeddings;
  /// Where edge shards and the vocabulary sidecar go. Defaults to a
  /// temporary directory that is removed afterwards.
  std::optional<std::filesystem::path> work_dir;
  /// Train on the 90% split only (see split_holdout).
  bool holdout = false;
  bool verbose = false;
};

struct TrainSummary {
  std::size_t files = 0;
  std::size_t lines = 0;
  std::size_t vocab_size = 0;
  std::size_t indexed = 0;
  std::size_t edges = 0;
  std::size_t shards = 0;
  std::size_t walks = 0;
  std::vector<double> epoch_mean_loss;
  std::uint64_t artifact_bytes = 0;
  double seconds = 0.0;
};

struct HoldoutSplit {
  std::vector<std::filesystem::path> train;
  std::vector<std::filesystem::path> test;
};

/// Every tenth file of the sorted list (positions 9, 19, ...) is held out.
HoldoutSplit split_holdout(const std::vector<std::filesystem::path>& files);

/// corpus -> graph -> walks -> embeddings -> indexes and stores. Writes the
/// five artifacts and manifest.json into `out_dir`.
TrainSummary train_bundle(const std::filesystem::path& corpus_dir, const std::filesystem::path& out_dir,
                          const PipelineConfig& cfg);

/// Same, starting from already segmented sequences.
TrainSummary train_bundle(std::span<const LineSequence> sequences, const std::filesystem::path& out_dir,
                          const PipelineConfig& cfg, std::size_t file_count = 0);

/// Sum of the artifact and manifest file sizes.
std::uint64_t bundle_bytes(const std::filesystem::path& dir);

}  // namespace nextline
