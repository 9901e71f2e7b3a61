#include "nextline/embedder.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <thread>

#include "binio.hpp"
#include "nextline/error.hpp"
#include "nextline/kernels.hpp"

namespace nextline {

namespace {

constexpr char kModelMagic[5] = "NLEM";
constexpr std::uint32_t kModelVersion = 1;

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// -log sigmoid(x), stable for large |x|.
double softplus_neg(double x) { return x > 0 ? std::log1p(std::exp(-x)) : -x + std::log1p(std::exp(x)); }

}  // namespace

std::size_t TrainConfig::default_workers() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 1 ? hw - 1 : 1;
}

void TrainConfig::validate() const {
  if (vector_size < 1) fail(ErrorKind::Config, "vector_size must be >= 1");
  if (window < 1) fail(ErrorKind::Config, "window must be >= 1");
  if (epochs < 1) fail(ErrorKind::Config, "epochs must be >= 1");
  if (workers < 1) fail(ErrorKind::Config, "workers must be >= 1");
  if (!(min_lr > 0.0) || !(initial_lr > min_lr)) {
    fail(ErrorKind::Config, "learning rates must satisfy initial_lr > min_lr > 0");
  }
}

EmbeddingModel EmbeddingModel::initialize(std::size_t vocab_size, std::size_t dim, std::uint64_t seed) {
  EmbeddingModel m;
  m.vocab_size = vocab_size;
  m.dim = dim;
  m.input.resize(vocab_size * dim);
  m.internal.assign(vocab_size > 0 ? (vocab_size - 1) * dim : 0, 0.0f);
  std::mt19937_64 rng(mix_seed(seed, 0x5eed));
  for (float& x : m.input) x = static_cast<float>((uniform01(rng) - 0.5) / static_cast<double>(dim));
  return m;
}

bool EmbeddingModel::all_finite() const {
  auto finite = [](float x) { return std::isfinite(x); };
  return std::all_of(input.begin(), input.end(), finite) && std::all_of(internal.begin(), internal.end(), finite);
}

void EmbeddingModel::save(const std::filesystem::path& path) const {
  binio::Writer w(path);
  w.bytes(kModelMagic, 4);
  w.pod(kModelVersion);
  w.pod(static_cast<std::uint64_t>(vocab_size));
  w.pod(static_cast<std::uint64_t>(dim));
  w.array(input);
  w.array(internal);
  w.finish();
}

EmbeddingModel EmbeddingModel::load(const std::filesystem::path& path) {
  binio::Reader r(path);
  r.expect_magic(kModelMagic, "model checkpoint");
  r.expect_version(kModelVersion, "model checkpoint");
  EmbeddingModel m;
  m.vocab_size = r.pod<std::uint64_t>();
  m.dim = r.pod<std::uint64_t>();
  m.input = r.array<float>(m.vocab_size * m.dim);
  m.internal = r.array<float>(m.vocab_size > 0 ? (m.vocab_size - 1) * m.dim : 0);
  r.expect_end();
  return m;
}

namespace detail {

double hs_pair_update(float* center, float* internal, std::span<const std::uint32_t> path,
                      std::span<const std::uint8_t> code, std::size_t dim, float lr, float* scratch) {
  const auto& k = kernels::active();
  std::fill(scratch, scratch + dim, 0.0f);
  double loss = 0.0;
  for (std::size_t j = 0; j < path.size(); ++j) {
    float* node = internal + std::size_t{path[j]} * dim;
    const float f = k.dot(center, node, dim);
    const float s = static_cast<float>(1.0 / (1.0 + std::exp(-static_cast<double>(f))));
    const float g = (1.0f - static_cast<float>(code[j]) - s) * lr;
    loss += code[j] ? softplus_neg(-f) : softplus_neg(f);
    k.axpy(g, node, scratch, dim);
    k.axpy(g, center, node, dim);
  }
  k.axpy(1.0f, scratch, center, dim);
  return loss;
}

double hs_pair_loss_grad(std::span<const double> center, std::span<const double> nodes,
                         std::span<const std::uint8_t> code, std::span<double> grad_center,
                         std::span<double> grad_nodes) {
  const std::size_t dim = center.size();
  std::fill(grad_center.begin(), grad_center.end(), 0.0);
  double loss = 0.0;
  for (std::size_t j = 0; j < code.size(); ++j) {
    const double* node = nodes.data() + j * dim;
    double f = 0.0;
    for (std::size_t i = 0; i < dim; ++i) f += center[i] * node[i];
    const double s = 1.0 / (1.0 + std::exp(-f));
    loss += code[j] ? softplus_neg(-f) : softplus_neg(f);
    // d loss / d f = s - (1 - bit)
    const double dl = s - (1.0 - code[j]);
    for (std::size_t i = 0; i < dim; ++i) {
      grad_center[i] += dl * node[i];
      grad_nodes[j * dim + i] = dl * center[i];
    }
  }
  return loss;
}

}  // namespace detail

TrainStats train_skipgram_hs(const WalkCorpus& walks, const HuffmanTree& tree, const TrainConfig& cfg,
                             EmbeddingModel& model) {
  cfg.validate();
  if (model.dim != cfg.vector_size) {
    fail(ErrorKind::Config, "model dimension " + std::to_string(model.dim) + " does not match vector_size " +
                                std::to_string(cfg.vector_size));
  }
  if (tree.leaf_count() != model.vocab_size) fail(ErrorKind::Config, "Huffman tree and model vocabulary sizes differ");
  for (NodeId t : walks.tokens) {
    if (t >= model.vocab_size) fail(ErrorKind::Input, "walk references node " + std::to_string(t) + " outside the vocabulary");
  }

  TrainStats stats;
  const std::size_t dim = model.dim;
  const std::size_t window = cfg.window;
  const std::uint64_t positions_per_epoch = walks.tokens.size();
  const double total_positions = static_cast<double>(positions_per_epoch) * static_cast<double>(cfg.epochs);
  const std::size_t workers = std::max<std::size_t>(1, std::min(cfg.workers, walks.size()));
  std::atomic<std::uint64_t> processed{0};

  struct WorkerResult {
    double loss = 0.0;
    std::uint64_t pairs = 0;
  };

  auto run_partition = [&](std::size_t worker, std::size_t epoch, WorkerResult& out) {
    std::mt19937_64 rng(mix_seed(cfg.seed, epoch, worker));
    std::vector<float> scratch(dim);
    const std::size_t begin = walks.size() * worker / workers;
    const std::size_t end = walks.size() * (worker + 1) / workers;
    std::uint64_t local = 0;
    float lr = static_cast<float>(cfg.initial_lr);
    for (std::size_t w = begin; w < end; ++w) {
      const auto walk = walks.walk(w);
      for (std::size_t pos = 0; pos < walk.size(); ++pos) {
        if ((local & 0x3ff) == 0) {
          const double done = static_cast<double>(processed.load(std::memory_order_relaxed));
          const double frac = total_positions > 0 ? std::min(1.0, done / total_positions) : 1.0;
          lr = static_cast<float>(cfg.initial_lr - (cfg.initial_lr - cfg.min_lr) * frac);
        }
        ++local;
        processed.fetch_add(1, std::memory_order_relaxed);

        const std::size_t reach = window - static_cast<std::size_t>(rng() % window);
        const std::size_t lo = pos >= reach ? pos - reach : 0;
        const std::size_t hi = std::min(walk.size() - 1, pos + reach);
        float* center = model.input.data() + std::size_t{walk[pos]} * dim;
        for (std::size_t c = lo; c <= hi; ++c) {
          if (c == pos) continue;
          const NodeId context = walk[c];
          out.loss += detail::hs_pair_update(center, model.internal.data(), tree.path(context),
                                             tree.code(context), dim, lr, scratch.data());
          ++out.pairs;
        }
      }
    }
  };

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<WorkerResult> results(workers);
    if (workers == 1) {
      run_partition(0, epoch, results[0]);
    } else {
      std::vector<std::jthread> threads;
      for (std::size_t w = 0; w < workers; ++w) {
        threads.emplace_back([&, w] { run_partition(w, epoch, results[w]); });
      }
    }
    WorkerResult sum;
    for (const auto& r : results) {
      sum.loss += r.loss;
      sum.pairs += r.pairs;
    }
    if (!std::isfinite(sum.loss) || !model.all_finite()) {
      fail(ErrorKind::Training, "non-finite values in the embedding model after epoch " + std::to_string(epoch + 1) +
                                    " (learning rate " + std::to_string(cfg.initial_lr) + " too high?)");
    }
    stats.pairs_per_epoch = sum.pairs;
    stats.epoch_mean_loss.push_back(sum.pairs ? sum.loss / static_cast<double>(sum.pairs) : 0.0);
  }
  return stats;
}

EmbeddingModel train_skipgram_hs(const WalkCorpus& walks, const Vocabulary& vocab, const TrainConfig& cfg,
                                 TrainStats* stats) {
  const HuffmanTree tree = HuffmanTree::build(vocab.frequencies());
  EmbeddingModel model = EmbeddingModel::initialize(vocab.size(), cfg.vector_size, cfg.seed);
  TrainStats s = train_skipgram_hs(walks, tree, cfg, model);
  if (stats) *stats = std::move(s);
  return model;
}

EmbeddingTable extract_embeddings(const EmbeddingModel& model, std::size_t top_n) {
  EmbeddingTable table;
  table.dim = model.dim;
  table.count = std::min(top_n, model.vocab_size);
  table.rows.assign(model.input.begin(), model.input.begin() + static_cast<std::ptrdiff_t>(table.count * model.dim));
  return table;
}

}  // namespace nextline
