#include "nextline/fallback.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "binio.hpp"
#include "nextline/error.hpp"
#include "nextline/walker.hpp"

namespace nextline {

namespace {

constexpr char kPcaMagic[5] = "NLPC";
constexpr char kTextMagic[5] = "NLTE";
constexpr std::uint32_t kTextVersion = 1;

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = 0xcbf29ce484222325ull ^ seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  // FNV's low bits mix poorly for short inputs; finish with a murmur-style avalanche.
  h ^= h >> 33;
  h *= 0xff51afd7ed558ccdull;
  h ^= h >> 33;
  return h;
}

}  // namespace

void LexicalEmbedderConfig::validate() const {
  if (ngram_min < 1 || ngram_min > ngram_max) fail(ErrorKind::Config, "need 1 <= ngram_min <= ngram_max");
  if (text_dim < 2) fail(ErrorKind::Config, "text_dim must be >= 2");
}

std::vector<float> embed_text(std::string_view line, const LexicalEmbedderConfig& cfg) {
  cfg.validate();
  if (line.empty()) fail(ErrorKind::Input, "cannot embed an empty line");
  std::string padded;
  padded.reserve(line.size() + 2);
  padded += '<';
  padded += line;
  padded += '>';

  const std::uint64_t sign_seed = mix_seed(cfg.hash_seed, 0x51);
  std::vector<double> acc(cfg.text_dim, 0.0);
  const std::string_view text = padded;
  for (std::size_t n = cfg.ngram_min; n <= cfg.ngram_max; ++n) {
    if (n > text.size()) break;
    for (std::size_t i = 0; i + n <= text.size(); ++i) {
      const std::string_view gram = text.substr(i, n);
      const std::size_t bucket = fnv1a(gram, cfg.hash_seed) % cfg.text_dim;
      const double sign = (fnv1a(gram, sign_seed) >> 63) ? -1.0 : 1.0;
      acc[bucket] += sign;
    }
  }
  double norm = 0.0;
  for (double v : acc) norm += v * v;
  norm = std::sqrt(norm);
  std::vector<float> out(cfg.text_dim, 0.0f);
  if (norm == 0.0) {
    // Every n-gram cancelled out; fall back to a fixed unit vector.
    out[fnv1a(line, cfg.hash_seed) % cfg.text_dim] = 1.0f;
    return out;
  }
  for (std::size_t i = 0; i < acc.size(); ++i) out[i] = static_cast<float>(acc[i] / norm);
  return out;
}

std::vector<float> PcaModel::reduce(std::span<const float> v) const {
  if (v.size() != in_dim) {
    fail(ErrorKind::Query, "PCA input has dimension " + std::to_string(v.size()) + ", expected " + std::to_string(in_dim));
  }
  std::vector<double> centered(in_dim);
  for (std::size_t i = 0; i < in_dim; ++i) centered[i] = static_cast<double>(v[i]) - mean[i];
  std::vector<float> out(out_dim);
  for (std::size_t r = 0; r < out_dim; ++r) {
    const double* row = components.data() + r * in_dim;
    double s = 0.0;
    for (std::size_t i = 0; i < in_dim; ++i) s += row[i] * centered[i];
    out[r] = static_cast<float>(s);
  }
  return out;
}

std::vector<double> PcaModel::reconstruct(std::span<const double> z) const {
  std::vector<double> out(mean);
  for (std::size_t r = 0; r < out_dim; ++r) {
    const double* row = components.data() + r * in_dim;
    for (std::size_t i = 0; i < in_dim; ++i) out[i] += z[r] * row[i];
  }
  return out;
}

PcaModel PcaModel::to_single_precision() const {
  PcaModel m = *this;
  auto round = [](std::vector<double>& v) {
    for (double& x : v) x = static_cast<double>(static_cast<float>(x));
  };
  round(m.mean);
  round(m.components);
  round(m.explained_variance);
  return m;
}

void PcaModel::save(const std::filesystem::path& path) const {
  binio::Writer w(path);
  w.bytes(kPcaMagic, 4);
  w.pod(kFormatVersion);
  w.pod(static_cast<std::uint32_t>(in_dim));
  w.pod(static_cast<std::uint32_t>(out_dim));
  for (const auto* v : {&mean, &components, &explained_variance}) {
    for (double x : *v) w.pod(static_cast<float>(x));
  }
  w.finish();
}

PcaModel PcaModel::load(const std::filesystem::path& path) {
  binio::Reader r(path);
  r.expect_magic(kPcaMagic, "PCA model");
  r.expect_version(kFormatVersion, "PCA model");
  PcaModel m;
  m.in_dim = r.pod<std::uint32_t>();
  m.out_dim = r.pod<std::uint32_t>();
  if (m.in_dim == 0 || m.out_dim == 0 || m.out_dim > m.in_dim) fail(ErrorKind::Format, path.string() + ": bad PCA dimensions");
  auto widen = [&](std::size_t n) {
    const auto f = r.array<float>(n);
    return std::vector<double>(f.begin(), f.end());
  };
  m.mean = widen(m.in_dim);
  m.components = widen(m.out_dim * m.in_dim);
  m.explained_variance = widen(m.out_dim);
  r.expect_end();
  return m;
}

PcaModel fit_pca(std::span<const float> samples, std::size_t dim, std::size_t out_dim, PcaRankPolicy policy) {
  if (dim == 0 || samples.size() % dim != 0) fail(ErrorKind::Input, "PCA samples are not a whole number of rows");
  if (out_dim == 0 || out_dim > dim) fail(ErrorKind::Config, "PCA output dimension must be in [1, input dimension]");
  const std::size_t n = samples.size() / dim;
  if (policy == PcaRankPolicy::RequireSamples && n < out_dim + 1) {
    fail(ErrorKind::Config, "PCA to " + std::to_string(out_dim) + " dimensions needs at least " +
                                std::to_string(out_dim + 1) + " samples, got " + std::to_string(n));
  }
  if (n < 2) fail(ErrorKind::Config, "PCA needs at least 2 samples");
  for (float x : samples) {
    if (!std::isfinite(x)) fail(ErrorKind::Input, "PCA samples contain non-finite values");
  }

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < dim; ++c) mean[static_cast<Eigen::Index>(c)] += samples[r * dim + c];
  }
  mean /= static_cast<double>(n);

  // Covariance accumulated in row chunks so the centered copy stays small.
  const auto d = static_cast<Eigen::Index>(dim);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  constexpr std::size_t kChunk = 2048;
  Eigen::MatrixXd chunk;
  for (std::size_t begin = 0; begin < n; begin += kChunk) {
    const std::size_t rows = std::min(kChunk, n - begin);
    chunk.resize(static_cast<Eigen::Index>(rows), d);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < dim; ++c) {
        chunk(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
            samples[(begin + r) * dim + c] - mean[static_cast<Eigen::Index>(c)];
      }
    }
    cov.noalias() += chunk.transpose() * chunk;
  }
  cov /= static_cast<double>(n - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) fail(ErrorKind::Training, "PCA eigendecomposition did not converge");

  PcaModel m;
  m.in_dim = dim;
  m.out_dim = out_dim;
  m.mean.assign(mean.data(), mean.data() + dim);
  m.components.resize(out_dim * dim);
  m.explained_variance.resize(out_dim);
  const auto& values = solver.eigenvalues();  // ascending
  const auto& vectors = solver.eigenvectors();
  for (std::size_t r = 0; r < out_dim; ++r) {
    const Eigen::Index col = d - 1 - static_cast<Eigen::Index>(r);
    Eigen::Index argmax = 0;
    vectors.col(col).cwiseAbs().maxCoeff(&argmax);
    const double sign = vectors(argmax, col) < 0 ? -1.0 : 1.0;
    for (std::size_t c = 0; c < dim; ++c) m.components[r * dim + c] = sign * vectors(static_cast<Eigen::Index>(c), col);
    m.explained_variance[r] = std::max(0.0, values[col]);
  }
  return m;
}

std::vector<std::size_t> sample_rows(std::size_t total, std::size_t cap, std::uint64_t seed) {
  std::vector<std::size_t> rows(total);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  if (total <= cap) return rows;
  std::mt19937_64 rng(mix_seed(seed, 0x9ca));
  // Partial Fisher-Yates over the first `cap` slots.
  for (std::size_t i = 0; i < cap; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng() % (total - i));
    std::swap(rows[i], rows[j]);
  }
  rows.resize(cap);
  std::sort(rows.begin(), rows.end());
  return rows;
}

EmbeddingTable load_text_embeddings(const std::filesystem::path& path) {
  binio::Reader r(path);
  r.expect_magic(kTextMagic, "text embedding");
  r.expect_version(kTextVersion, "text embedding");
  EmbeddingTable t;
  t.dim = r.pod<std::uint32_t>();
  r.pod<std::uint32_t>();
  t.count = static_cast<std::size_t>(r.pod<std::uint64_t>());
  t.rows = r.array<float>(t.count * t.dim);
  r.expect_end();
  return t;
}

void save_text_embeddings(const EmbeddingTable& table, const std::filesystem::path& path) {
  binio::Writer w(path);
  w.bytes(kTextMagic, 4);
  w.pod(kTextVersion);
  w.pod(static_cast<std::uint32_t>(table.dim));
  w.pod(std::uint32_t{0});
  w.pod(static_cast<std::uint64_t>(table.count));
  w.array(table.rows);
  w.finish();
}

EmbeddingTable embed_lines(std::span<const std::string> lines, const LexicalEmbedderConfig& cfg) {
  EmbeddingTable t;
  t.dim = cfg.text_dim;
  t.count = lines.size();
  t.rows.reserve(t.count * t.dim);
  for (const auto& line : lines) {
    const auto e = embed_text(line, cfg);
    t.rows.insert(t.rows.end(), e.begin(), e.end());
  }
  return t;
}

VectorIndex build_text_index(const EmbeddingTable& text_embeddings, const PcaModel& pca) {
  if (text_embeddings.dim != pca.in_dim) fail(ErrorKind::Config, "text embedding dimension does not match the PCA model");
  EmbeddingTable reduced;
  reduced.dim = pca.out_dim;
  reduced.count = text_embeddings.count;
  reduced.rows.reserve(reduced.count * reduced.dim);
  for (std::size_t i = 0; i < text_embeddings.count; ++i) {
    const auto z = pca.reduce(text_embeddings.row(i));
    reduced.rows.insert(reduced.rows.end(), z.begin(), z.end());
  }
  return build_index(reduced);
}

NodeId resolve_oov(std::span<const float> text_embedding, const VectorIndex& text_index, const PcaModel& pca) {
  if (text_index.count() == 0) fail(ErrorKind::Query, "text index is empty; cannot resolve out-of-vocabulary line");
  const auto hits = text_index.search(pca.reduce(text_embedding), 1);
  return hits.front().id;
}

NodeId resolve_oov(std::string_view line, const VectorIndex& text_index, const PcaModel& pca,
                   const LexicalEmbedderConfig& cfg) {
  return resolve_oov(embed_text(line, cfg), text_index, pca);
}

}  // namespace nextline
