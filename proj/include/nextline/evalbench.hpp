#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "nextline/corpus.hpp"
#include "nextline/pipeline.hpp"
#include "nextline/service.hpp"

namespace nextline {

struct EvalReport {
  std::vector<std::size_t> ks;
  std::vector<double> accuracy;  ///< parallel to ks
  std::size_t transitions_evaluated = 0;
  std::size_t oov_transitions_skipped = 0;
  /// Adjacent identical lines; the graph has no self-loops so these can never hit.
  std::size_t self_transitions_skipped = 0;

  double at(std::size_t k) const;
};

/// Top-k accuracy over every adjacent in-block pair (a, b) with both lines
/// indexed: a hit at k when b is among suggest(a, k). Throws an Input error
/// when no pair is evaluable.
EvalReport evaluate_topk(const ArtifactBundle& bundle, std::span<const LineSequence> sequences,
                         std::vector<std::size_t> ks = {1, 3, 10});

/// Random chains over a fixed vocabulary: the ids 0..vocab_size-1 are
/// shuffled and cut into chains of chain_length lines; each chain is one
/// block, repeated `repeats` times; chains_per_file chains share a file.
/// Lines look like code and are unique by construction.
struct SyntheticCorpusSpec {
  std::size_t vocab_size = 1000;
  std::size_t chain_length = 10;
  std::size_t chains_per_file = 50;
  std::size_t repeats = 1;
  std::uint64_t seed = 7;
};

std::string synthetic_line(std::size_t id, std::uint64_t seed);
std::vector<LineSequence> generate_synthetic_corpus(const SyntheticCorpusSpec& spec);
/// Writes the corpus as .py files (blocks separated by blank lines).
void write_corpus(std::span<const LineSequence> corpus, const std::filesystem::path& dir);

struct QuerySessionResult {
  std::size_t queries = 0;
  double mean_seconds = 0.0;
  std::size_t peak_resident_bytes = 0;
};

/// Loads the bundle and times `queries` suggest calls on lines drawn
/// uniformly (seeded) from the indexed vocabulary, single-threaded, while
/// sampling this process's resident memory.
QuerySessionResult run_query_session(const std::filesystem::path& bundle_dir, std::size_t queries,
                                     std::uint64_t seed, std::size_t k = 10);

using QuerySessionRunner = std::function<QuerySessionResult(const std::filesystem::path& bundle_dir, std::size_t queries)>;

struct ScalingRow {
  std::size_t vocab_size = 0;
  std::uint64_t artifact_bytes = 0;
  std::size_t peak_resident_bytes = 0;
  double mean_query_seconds = 0.0;
  std::size_t queries = 0;
  double train_seconds = 0.0;
};

struct BenchConfig {
  std::vector<std::size_t> vocab_sizes;
  std::size_t queries = 1000;
  SyntheticCorpusSpec generator;  ///< vocab_size is overridden per row
  PipelineConfig pipeline;
  std::filesystem::path work_root;
  bool keep_bundles = false;
  /// Defaults to run_query_session in this process.
  QuerySessionRunner runner;
};

/// Trains one bundle per vocabulary size and measures it. A failure is
/// rethrown with the offending size in the message.
std::vector<ScalingRow> bench_scaling(const BenchConfig& cfg);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

LinearFit fit_line(std::span<const double> x, std::span<const double> y);

enum class ReportFormat { Json, Csv };

void emit_report(const EvalReport& report, ReportFormat format, std::ostream& out);
void emit_report(std::span<const ScalingRow> rows, const SyntheticCorpusSpec& generator, ReportFormat format,
                 std::ostream& out);

}  // namespace nextline
