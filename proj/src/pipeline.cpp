#include "nextline/pipeline.hpp"

#include <unistd.h>

#include <atomic>
#include <chrono>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "nextline/error.hpp"
#include "nextline/mapstore.hpp"
#include "nextline/vecindex.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace nextline {

namespace {

class WorkDir {
 public:
  explicit WorkDir(const std::optional<fs::path>& requested) {
    if (requested) {
      path_ = *requested;
    } else {
      static std::atomic<unsigned> counter{0};
      path_ = fs::temp_directory_path() /
              ("nextline-work-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
      owned_ = true;
    }
    std::error_code ec;
    fs::create_directories(path_, ec);
    if (ec) fail(ErrorKind::Io, "cannot create work directory " + path_.string() + ": " + ec.message());
  }
  ~WorkDir() {
    if (owned_) {
      std::error_code ec;
      fs::remove_all(path_, ec);
    }
  }
  WorkDir(const WorkDir&) = delete;
  WorkDir& operator=(const WorkDir&) = delete;
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
  bool owned_ = false;
};

class Log {
 public:
  explicit Log(bool on) : on_(on), start_(std::chrono::steady_clock::now()) {}
  template <class... Args>
  void operator()(const Args&... args) const {
    if (!on_) return;
    const double t = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    std::cerr << "[" << std::fixed;
    std::cerr.precision(1);
    std::cerr << t << "s] ";
    (std::cerr << ... << args) << '\n';
  }
  double elapsed() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

 private:
  bool on_;
  std::chrono::steady_clock::time_point start_;
};

json manifest_for(const PipelineConfig& cfg, const TrainSummary& s, bool external_text, std::size_t text_dim) {
  json m;
  m["format"] = "nextline-bundle";
  m["version"] = bundle_files::kBundleVersion;
  m["artifacts"] = {
      {"main_index", bundle_files::kMainIndex}, {"text_index", bundle_files::kTextIndex},
      {"pca", bundle_files::kPca},              {"line_to_id", bundle_files::kLineToId},
      {"id_to_line", bundle_files::kIdToLine},
  };
  m["format_versions"] = {{"vector_index", 1}, {"pca", 1}, {"map_store", 1}};
  m["counts"] = {{"files", s.files},   {"lines", s.lines},   {"vocab", s.vocab_size}, {"indexed", s.indexed},
                 {"edges", s.edges},   {"shards", s.shards}, {"walks", s.walks}};
  m["profile"] = {{"line_comment_marker", cfg.profile.line_comment_marker},
                  {"string_delimiters", cfg.profile.string_delimiters},
                  {"file_extensions", cfg.profile.file_extensions},
                  {"block_separator", std::string(to_string(cfg.separator))}};
  m["text_encoder"] = {{"kind", external_text ? "external" : "lexical-ngram"},
                       {"text_dim", text_dim},
                       {"ngram_min", cfg.lexical.ngram_min},
                       {"ngram_max", cfg.lexical.ngram_max},
                       {"hash_seed", cfg.lexical.hash_seed}};
  m["config"] = {
      {"walk", {{"p", cfg.walk.p}, {"q", cfg.walk.q}, {"num_walks", cfg.walk.num_walks},
                {"walk_length", cfg.walk.walk_length}, {"seed", cfg.walk.seed}}},
      {"train", {{"vector_size", cfg.train.vector_size}, {"window", cfg.train.window},
                 {"min_count", cfg.train.min_count}, {"workers", cfg.train.workers}, {"epochs", cfg.train.epochs},
                 {"initial_lr", cfg.train.initial_lr}, {"min_lr", cfg.train.min_lr}, {"seed", cfg.train.seed},
                 {"skip_gram", true}, {"hierarchical_softmax", true}}},
      {"top_n", cfg.top_n},
      {"max_edges_per_shard", cfg.max_edges_per_shard},
      {"pca_fit_cap", cfg.pca_fit_cap},
      {"holdout", cfg.holdout},
  };
  m["training"] = {{"epoch_mean_loss_first", s.epoch_mean_loss.empty() ? 0.0 : s.epoch_mean_loss.front()},
                   {"epoch_mean_loss_last", s.epoch_mean_loss.empty() ? 0.0 : s.epoch_mean_loss.back()}};
  return m;
}

}  // namespace

HoldoutSplit split_holdout(const std::vector<fs::path>& files) {
  HoldoutSplit split;
  for (std::size_t i = 0; i < files.size(); ++i) (i % 10 == 9 ? split.test : split.train).push_back(files[i]);
  return split;
}

std::uint64_t bundle_bytes(const fs::path& dir) {
  std::uint64_t total = 0;
  for (const char* name : {bundle_files::kMainIndex, bundle_files::kTextIndex, bundle_files::kPca,
                           bundle_files::kLineToId, bundle_files::kIdToLine, bundle_files::kManifest}) {
    std::error_code ec;
    const auto size = fs::file_size(dir / name, ec);
    if (!ec) total += size;
  }
  return total;
}

namespace {

void validate(const PipelineConfig& cfg) {
  cfg.profile.validate();
  cfg.walk.validate();
  cfg.train.validate();
  cfg.lexical.validate();
  if (cfg.top_n < 1) fail(ErrorKind::Config, "top_n must be >= 1");
  if (cfg.max_edges_per_shard < 1) fail(ErrorKind::Config, "max_edges_per_shard must be >= 1");
}

}  // namespace

TrainSummary train_bundle(const fs::path& corpus_dir, const fs::path& out_dir, const PipelineConfig& cfg) {
  validate(cfg);
  auto files = scan_corpus(corpus_dir, cfg.profile);
  if (cfg.holdout) files = split_holdout(files).train;
  if (files.empty()) fail(ErrorKind::Input, "empty corpus: no matching source files under " + corpus_dir.string());
  const auto sequences = read_corpus(files, cfg.profile, cfg.separator);
  return train_bundle(sequences, out_dir, cfg, files.size());
}

TrainSummary train_bundle(std::span<const LineSequence> sequences, const fs::path& out_dir, const PipelineConfig& cfg,
                          std::size_t file_count) {
  validate(cfg);

  const Log log(cfg.verbose);
  TrainSummary summary;
  summary.files = file_count ? file_count : sequences.size();
  for (const auto& s : sequences) summary.lines += s.line_count();

  // Graph: vocabulary, undirected transition counts, shards.
  const Vocabulary vocab = build_vocabulary(sequences);
  summary.vocab_size = vocab.size();
  const EdgeAccumulator edges = accumulate_edges(sequences, vocab);
  summary.edges = edges.edge_count();
  log("vocabulary ", vocab.size(), " lines, ", edges.edge_count(), " undirected edges");

  const WorkDir work(cfg.work_dir);
  vocab.save(work.path() / "vocab.tsv");
  const auto shards = write_edge_shards(edges, work.path() / "edges", cfg.max_edges_per_shard);
  summary.shards = shards.size();
  if (shards.empty()) fail(ErrorKind::Training, "graph has no edges: every block holds a single line");

  // Walks and skip-gram training, one shard at a time on a shared model.
  const HuffmanTree tree = HuffmanTree::build(vocab.frequencies());
  EmbeddingModel model = EmbeddingModel::initialize(vocab.size(), cfg.train.vector_size, cfg.train.seed);
  for (std::size_t s = 0; s < shards.size(); ++s) {
    const AdjacencyView adj = load_adjacency(std::span<const EdgeShard>(&shards[s], 1), vocab.size());
    const WalkCorpus walks = generate_walks(adj, cfg.walk);
    summary.walks += walks.size();
    log("shard ", s + 1, "/", shards.size(), ": ", walks.size(), " walks, ", walks.tokens.size(), " tokens");
    const TrainStats stats = train_skipgram_hs(walks, tree, cfg.train, model);
    summary.epoch_mean_loss.insert(summary.epoch_mean_loss.end(), stats.epoch_mean_loss.begin(),
                                   stats.epoch_mean_loss.end());
    log("shard ", s + 1, " trained, loss ", stats.epoch_mean_loss.front(), " -> ", stats.epoch_mean_loss.back());
  }

  // Main index and mappings over the top-N lines.
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) fail(ErrorKind::Io, "cannot create artifact directory " + out_dir.string() + ": " + ec.message());

  const EmbeddingTable table = extract_embeddings(model, cfg.top_n);
  summary.indexed = table.count;
  build_index(table).save(out_dir / bundle_files::kMainIndex);
  model = EmbeddingModel{};

  std::vector<std::pair<std::string, NodeId>> pairs;
  pairs.reserve(table.count);
  for (std::size_t i = 0; i < table.count; ++i) pairs.emplace_back(vocab.line(static_cast<NodeId>(i)), static_cast<NodeId>(i));
  MapStore::put_all(out_dir / bundle_files::kLineToId, out_dir / bundle_files::kIdToLine, std::move(pairs));
  log("main index and map stores written (", table.count, " lines)");

  // Text fallback: embeddings -> PCA -> text index.
  EmbeddingTable text;
  const bool external = cfg.text_embeddings.has_value();
  if (external) {
    text = load_text_embeddings(*cfg.text_embeddings);
    if (text.count < table.count) {
      fail(ErrorKind::Input, "text embedding file has " + std::to_string(text.count) + " rows, need " +
                                 std::to_string(table.count));
    }
    text.count = table.count;
    text.rows.resize(text.count * text.dim);
  } else {
    text = embed_lines(vocab.lines().first(table.count), cfg.lexical);
  }
  if (cfg.train.vector_size > text.dim) {
    fail(ErrorKind::Config, "embedding dimension " + std::to_string(cfg.train.vector_size) +
                                " exceeds the text embedding dimension " + std::to_string(text.dim));
  }

  const auto rows = sample_rows(text.count, cfg.pca_fit_cap, cfg.train.seed);
  std::vector<float> fit;
  fit.reserve(rows.size() * text.dim);
  for (std::size_t r : rows) fit.insert(fit.end(), text.row(r).begin(), text.row(r).end());
  PcaRankPolicy policy = PcaRankPolicy::RequireSamples;
  if (rows.size() < cfg.train.vector_size + 1) {
    std::cerr << "warning: only " << rows.size() << " lines for a " << cfg.train.vector_size
              << "-d PCA; trailing components span the null space\n";
    policy = PcaRankPolicy::AllowRankDeficient;
  }
  const PcaModel pca = fit_pca(fit, text.dim, cfg.train.vector_size, policy).to_single_precision();
  pca.save(out_dir / bundle_files::kPca);
  build_text_index(text, pca).save(out_dir / bundle_files::kTextIndex);
  log("PCA and text index written");

  summary.seconds = log.elapsed();
  const json manifest = manifest_for(cfg, summary, external, text.dim);
  {
    std::ofstream out(out_dir / bundle_files::kManifest, std::ios::binary);
    if (!out) fail(ErrorKind::Io, "cannot write manifest in " + out_dir.string());
    out << manifest.dump(2) << '\n';
    if (!out.flush()) fail(ErrorKind::Io, "cannot write manifest in " + out_dir.string());
  }
  summary.artifact_bytes = bundle_bytes(out_dir);
  return summary;
}

}  // namespace nextline
