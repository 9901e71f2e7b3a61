#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nextline/corpus.hpp"
#include "nextline/fallback.hpp"
#include "nextline/mapstore.hpp"
#include "nextline/vecindex.hpp"

namespace nextline {

/// The five inference artifacts plus what the manifest says about how they
/// were built. Immutable after load; safe to share across threads.
class ArtifactBundle {
 public:
  /// Fails with an Input error naming the first missing artifact, or an
  /// Integrity error when counts, dimensions or versions disagree.
  static ArtifactBundle load(const std::filesystem::path& dir);

  const VectorIndex& main_index() const { return main_index_; }
  const VectorIndex& text_index() const { return text_index_; }
  const PcaModel& pca() const { return pca_; }
  const MapStore& store() const { return store_; }
  const LanguageProfile& profile() const { return profile_; }
  const LexicalEmbedderConfig& lexical() const { return lexical_; }
  /// False when the text index was built from external embeddings.
  bool lexical_fallback() const { return lexical_fallback_; }
  std::size_t vocab_size() const { return main_index_.count(); }
  std::size_t dim() const { return main_index_.dim(); }
  const std::map<std::string, std::uint64_t>& artifact_bytes() const { return artifact_bytes_; }
  std::uint64_t total_bytes() const;

 private:
  ArtifactBundle(VectorIndex main, VectorIndex text, PcaModel pca, MapStore store)
      : main_index_(std::move(main)), text_index_(std::move(text)), pca_(std::move(pca)), store_(std::move(store)) {}

  VectorIndex main_index_;
  VectorIndex text_index_;
  PcaModel pca_;
  MapStore store_;
  LanguageProfile profile_;
  LexicalEmbedderConfig lexical_;
  bool lexical_fallback_ = true;
  std::map<std::string, std::uint64_t> artifact_bytes_;
};

struct Suggestion {
  std::string line;
  float distance;    ///< squared L2 in the graph-embedding space
  std::size_t rank;  ///< 1-based
};

struct SuggestResult {
  bool oov = false;
  NodeId anchor = 0;  ///< the query's id, or its text-similar proxy when oov
  std::string anchor_line;
  std::vector<Suggestion> suggestions;
};

/// Next-line suggestions for `raw_line`. In-vocabulary lines query the main
/// index with their own vector; other lines are first mapped to the
/// textually closest indexed line. The anchor itself is never suggested.
/// A line that normalizes to nothing is an Input error.
SuggestResult suggest(const ArtifactBundle& bundle, std::string_view raw_line, std::size_t k = 10);

/// As above, but an OOV line is resolved with a caller-supplied text
/// embedding (required for bundles built from external embeddings).
SuggestResult suggest(const ArtifactBundle& bundle, std::string_view raw_line,
                      std::span<const float> text_embedding, std::size_t k = 10);

/// Suggestions for a known id (no normalization, no OOV path).
std::vector<Suggestion> suggest_for_id(const ArtifactBundle& bundle, NodeId id, std::size_t k);

}  // namespace nextline
