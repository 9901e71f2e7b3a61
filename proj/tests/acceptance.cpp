// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// failures.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "nextline/embedder.hpp"
#include "nextline/evalbench.hpp"
#include "nextline/fallback.hpp"
#include "nextline/kernels.hpp"
#include "nextline/mapstore.hpp"
#include "nextline/rss.hpp"
#include "nextline/service.hpp"
#include "nextline/vecindex.hpp"
#include "nextline/walker.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace nextline;

namespace {

// Tolerances and budgets.
constexpr double kWalkTolerance = 0.02;
constexpr std::size_t kWalkSteps = 100'000;
constexpr double kGradRelErr = 1e-4;
constexpr double kGradStep = 1e-6;
constexpr double kChainTop10 = 0.95;
constexpr double kRealTop10 = 0.60;
constexpr double kRealFlagTop10 = 0.50;
constexpr std::size_t kRealFiles = 200;
constexpr std::size_t kRealEpochs = 10;
constexpr double kScalingR2 = 0.98;
constexpr double kDoublingLo = 1.6, kDoublingHi = 2.4;
constexpr double kLatencySeconds = 0.100;
constexpr std::size_t kLatencyQueries = 1000;
constexpr std::size_t kStoreEntries = 1'000'000;
constexpr std::size_t kStoreLookups = 10'000;
constexpr double kStoreMemoryFraction = 0.25;
constexpr double kOrthoTol = 1e-6;
constexpr double kRank1ReconTol = 1e-8;

struct Outcome {
  bool pass;
  std::string detail;
};

int failures = 0;

void criterion(const std::string& name, double budget_seconds, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::ostringstream tail;
  tail.precision(3);
  tail << std::fixed << secs << "s";
  if (budget_seconds > 0) {
    tail << " of " << budget_seconds << "s";
    if (secs > budget_seconds) {
      o.pass = false;
      o.detail += "; over time budget";
    }
  }
  if (!o.pass) ++failures;
  std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << " [" << tail.str() << "]" << std::endl;
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream o;
  o.precision(precision);
  o << v;
  return o.str();
}

Outcome walk_bias() {
  std::vector<Edge> e{{0, 1, 1}, {1, 2, 1}};
  const AdjacencyView adj(3, e);
  WalkConfig cfg{.p = 1.0, .q = 0.5, .num_walks = 1, .walk_length = 3, .seed = 2024};
  std::size_t back = 0, forward = 0;
  for (std::size_t i = 0; i < kWalkSteps; ++i) {
    const Walk w = simulate_walk(adj, cfg, 0, i);
    (w[2] == 0 ? back : forward)++;
  }
  const double pa = double(back) / kWalkSteps, pc = double(forward) / kWalkSteps;
  double da = 0, dc = 0;
  for (auto [x, p] : transition_distribution(NodeId{0}, 1, adj, cfg)) (x == 0 ? da : dc) = p;
  const bool ok = std::abs(pa - 1.0 / 3) <= kWalkTolerance && std::abs(pc - 2.0 / 3) <= kWalkTolerance &&
                  std::abs(pa - da) <= kWalkTolerance && std::abs(pc - dc) <= kWalkTolerance && back + forward == kWalkSteps;
  return {ok, "P(A)=" + fmt(pa) + " P(C)=" + fmt(pc) + " vs " + fmt(da) + "/" + fmt(dc) + " over " +
                  std::to_string(kWalkSteps) + " steps"};
}

Outcome gradient_check() {
  const std::vector<std::uint64_t> f{4, 3, 2, 1};
  const auto tree = HuffmanTree::build(f);
  const std::size_t d = 8;
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0;
  for (NodeId target = 0; target < 4; ++target) {
    const auto code = tree.code(target);
    const std::size_t L = code.size();
    std::vector<double> c(d), n(L * d), gc(d), gn(L * d);
    for (auto& x : c) x = u(rng);
    for (auto& x : n) x = u(rng);
    detail::hs_pair_loss_grad(c, n, code, gc, gn);
    const std::vector<int> bits(code.begin(), code.end());
    auto loss = [&](const std::vector<double>& cc, const std::vector<double>& nn) {
      std::vector<std::vector<double>> rows(L, std::vector<double>(d));
      for (std::size_t j = 0; j < L; ++j) std::copy_n(nn.begin() + j * d, d, rows[j].begin());
      return oracle::hs_loss(cc, rows, bits);
    };
    auto rel = [](double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8}); };
    for (std::size_t i = 0; i < d; ++i) {
      auto p = c, m = c;
      p[i] += kGradStep;
      m[i] -= kGradStep;
      worst = std::max(worst, rel(gc[i], (loss(p, n) - loss(m, n)) / (2 * kGradStep)));
    }
    for (std::size_t i = 0; i < L * d; ++i) {
      auto p = n, m = n;
      p[i] += kGradStep;
      m[i] -= kGradStep;
      worst = std::max(worst, rel(gn[i], (loss(c, p) - loss(c, m)) / (2 * kGradStep)));
    }
  }
  return {worst < kGradRelErr, "max relative error " + fmt(worst, 3)};
}

Outcome huffman_exhaustive() {
  std::size_t cases = 0, bad = 0;
  std::vector<std::uint64_t> f;
  // Non-increasing count sequences enumerate each multiset once.
  std::function<void(std::uint64_t)> rec = [&](std::uint64_t max_count) {
    if (f.size() >= 2) {
      ++cases;
      const auto t = HuffmanTree::build(f);
      std::uint64_t len = 0;
      for (NodeId i = 0; i < f.size(); ++i) len += f[i] * t.code_length(i);
      if (len != oracle::min_prefix_cost(f)) ++bad;
    }
    if (f.size() == 6) return;
    for (std::uint64_t c = 1; c <= max_count; ++c) {
      f.push_back(c);
      rec(c);
      f.pop_back();
    }
  };
  rec(8);
  return {bad == 0 && cases > 0, std::to_string(cases) + " multisets, " + std::to_string(bad) + " suboptimal"};
}

EmbeddingTable random_table(std::size_t count, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> n(0.0f, 1.0f);
  EmbeddingTable t{dim, count, std::vector<float>(dim * count)};
  for (auto& x : t.rows) x = n(rng);
  return t;
}

Outcome index_oracle() {
  const std::size_t dim = 128;
  const auto idx = build_index(random_table(1000, dim, 5));
  const std::vector<std::uint16_t> data(idx.payload().begin(), idx.payload().end());
  std::mt19937_64 rng(6);
  std::normal_distribution<float> n(0.0f, 1.0f);
  std::size_t mismatched = 0;
  for (int qi = 0; qi < 50; ++qi) {
    std::vector<float> q(dim);
    for (auto& x : q) x = n(rng);
    const auto got = idx.search(q, 10);
    const auto want = oracle::exhaustive_scan(data, dim, q, 10);
    bool same = got.size() == want.size();
    for (std::size_t i = 0; same && i < got.size(); ++i) {
      same = got[i].id == want[i].id && got[i].distance == want[i].distance;
    }
    if (!same) ++mismatched;
  }
  return {mismatched == 0, "1000 x 128-d rows, 50 queries, k=10: " + std::to_string(mismatched) + " mismatched"};
}

Outcome half_storage() {
  const auto idx = build_index(random_table(1000, 128, 9));
  const std::size_t single = 1000 * 128 * sizeof(float);
  testing::TempDir d("acc-f16");
  idx.save(d / "i.nlvi");
  const auto file = fs::file_size(d / "i.nlvi");
  const bool ok = idx.payload_bytes() * 2 == single && file - 24 == single / 2;
  return {ok, "payload " + std::to_string(idx.payload_bytes()) + " B vs single precision " + std::to_string(single) +
                  " B (ratio " + fmt(double(idx.payload_bytes()) / single) + ")"};
}

Outcome chain_accuracy() {
  testing::TempDir d("acc-chain");
  const auto corpus = testing::chain_corpus(100, 10, 50);
  PipelineConfig cfg;
  train_bundle(corpus, d.path(), cfg, corpus.size());
  const auto r = evaluate_topk(ArtifactBundle::load(d.path()), corpus);
  const bool ok = r.at(10) >= kChainTop10 && r.at(1) <= r.at(3) && r.at(3) <= r.at(10);
  return {ok, "top1=" + fmt(r.at(1)) + " top3=" + fmt(r.at(3)) + " top10=" + fmt(r.at(10)) + " over " +
                  std::to_string(r.transitions_evaluated) + " transitions"};
}

std::vector<fs::path> real_corpus_files(std::string& source) {
  LanguageProfile py;
  if (const char* env = std::getenv("NEXTLINE_REAL_CORPUS")) {
    source = env;
    return scan_corpus(env, py);
  }
  // Largest local stdlib tree.
  std::vector<fs::path> best;
  for (const auto& entry : fs::directory_iterator("/usr/lib")) {
    const std::string name = entry.path().filename();
    if (!entry.is_directory() || name.rfind("python3", 0) != 0) continue;
    std::vector<fs::path> picked;
    for (const auto& f : scan_corpus(entry.path(), py)) {
      const auto size = fs::file_size(f);
      if (size >= 1024 && size <= 8192) picked.push_back(f);
      if (picked.size() == kRealFiles) break;
    }
    if (picked.size() > best.size()) {
      best = std::move(picked);
      source = entry.path().string();
    }
  }
  source += " (" + std::to_string(best.size()) + " files of 1-8 KB)";
  return best;
}

Outcome real_accuracy() {
  std::string source;
  const auto files = real_corpus_files(source);
  if (files.empty()) return {false, "no corpus available; set NEXTLINE_REAL_CORPUS"};
  PipelineConfig cfg;
  cfg.train.epochs = kRealEpochs;
  const auto sequences = read_corpus(files, cfg.profile, cfg.separator);
  testing::TempDir d("acc-real");
  train_bundle(sequences, d.path(), cfg, files.size());
  const auto r = evaluate_topk(ArtifactBundle::load(d.path()), sequences);
  const bool nested = r.at(1) <= r.at(3) && r.at(3) <= r.at(10);
  std::string detail = "top1=" + fmt(r.at(1)) + " top3=" + fmt(r.at(3)) + " top10=" + fmt(r.at(10)) + " on " + source +
                       ", epochs=" + std::to_string(kRealEpochs);
  if (r.at(10) < kRealFlagTop10) detail += "; flagged: top-10 below the plausibility band";
  return {r.at(10) >= kRealTop10 && nested, detail};
}

std::vector<ScalingRow> scaling_rows;

Outcome scaling() {
  testing::TempDir d("acc-scale");
  BenchConfig cfg;
  cfg.vocab_sizes = {25'000, 50'000, 100'000, 200'000};
  cfg.queries = kLatencyQueries;
  cfg.pipeline.train.epochs = 1;
  cfg.pipeline.walk.num_walks = 1;
  cfg.work_root = d.path();
  scaling_rows = bench_scaling(cfg);
  std::vector<double> x, y;
  for (const auto& r : scaling_rows) {
    x.push_back(double(r.vocab_size));
    y.push_back(double(r.artifact_bytes));
  }
  const auto fit = fit_line(x, y);
  bool ok = fit.r_squared >= kScalingR2;
  std::string ratios;
  for (std::size_t i = 1; i < scaling_rows.size(); ++i) {
    const double ratio = y[i] / y[i - 1];
    ok = ok && ratio >= kDoublingLo && ratio <= kDoublingHi;
    ratios += (i > 1 ? "," : "") + fmt(ratio);
  }
  return {ok, "R^2=" + fmt(fit.r_squared, 6) + " doubling ratios " + ratios + " bytes " + fmt(y.front(), 6) + ".." +
                  fmt(y.back(), 6)};
}

Outcome latency() {
  for (const auto& r : scaling_rows) {
    if (r.vocab_size != 100'000) continue;
    const bool ok = r.mean_query_seconds <= kLatencySeconds && r.queries >= kLatencyQueries;
    return {ok, "mean " + fmt(r.mean_query_seconds * 1e3) + " ms over " + std::to_string(r.queries) +
                    " queries at 100k lines"};
  }
  return {false, "no 100k row from the scaling run"};
}

std::string store_line(std::size_t i) {
  return "entry_" + std::to_string(i) + " = lookup(table[" + std::to_string(i * 2654435761u % 1000003) + "])";
}

Outcome store_memory() {
  testing::TempDir d("acc-store");
  const auto l2i = d / "l2i.nlkv", i2l = d / "i2l.nlkv";
  // Build in a child so this process never holds the pairs.
  const pid_t child = ::fork();
  if (child == 0) {
    int code = 0;
    try {
      std::vector<std::pair<std::string, NodeId>> pairs;
      pairs.reserve(kStoreEntries);
      for (std::size_t i = 0; i < kStoreEntries; ++i) pairs.emplace_back(store_line(i), NodeId(i));
      MapStore::put_all(l2i, i2l, std::move(pairs));
    } catch (...) {
      code = 1;
    }
    std::_Exit(code);
  }
  int status = 0;
  ::waitpid(child, &status, 0);
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) return {false, "store build failed"};

  std::uint64_t kv_bytes = 0;
  for (std::size_t i = 0; i < kStoreEntries; ++i) kv_bytes += 2 * (store_line(i).size() + 8);

  // Measure in a freshly exec'd process so no earlier heap is reused.
  const std::string cmd = "/proc/" + std::to_string(::getpid()) + "/exe --store-probe " + l2i.string() + " " + i2l.string();
  FILE* p = ::popen(cmd.c_str(), "r");
  if (!p) return {false, "cannot start probe"};
  unsigned long long before = 0, peak = 0, wrong = 1;
  const int got = std::fscanf(p, "%llu %llu %llu", &before, &peak, &wrong);
  if (::pclose(p) != 0 || got != 3) return {false, "probe failed"};
  const double added = peak > before ? double(peak - before) : 0.0;
  const double frac = added / double(kv_bytes);
  return {frac < kStoreMemoryFraction && wrong == 0,
          "added " + fmt(added / 1048576.0) + " MiB vs " + fmt(kv_bytes / 1048576.0) + " MiB serialized (" +
              fmt(100 * frac, 3) + "%), " + std::to_string(wrong) + " wrong lookups"};
}

// Child side of store_memory: prints "baseline peak wrong".
int store_probe(const fs::path& l2i, const fs::path& i2l) {
  const std::size_t before = resident_bytes();
  RssSampler sampler(0, std::chrono::milliseconds(10));
  std::size_t wrong = 0;
  {
    const auto store = MapStore::open(l2i, i2l);
    std::mt19937_64 rng(3);
    for (std::size_t q = 0; q < kStoreLookups; ++q) {
      const std::size_t i = rng() % kStoreEntries;
      const std::string line = store_line(i);
      if (store.get_id(line) != NodeId(i) || store.get_line(NodeId(i)) != line) ++wrong;
    }
    std::printf("%zu %zu %zu\n", before, std::max(sampler.stop(), resident_bytes()), wrong);
  }
  return 0;
}

double ortho_error(const PcaModel& m) {
  double worst = 0;
  for (std::size_t i = 0; i < m.out_dim; ++i) {
    for (std::size_t j = i; j < m.out_dim; ++j) {
      double s = 0;
      for (std::size_t t = 0; t < m.in_dim; ++t) s += m.components[i * m.in_dim + t] * m.components[j * m.in_dim + t];
      worst = std::max(worst, std::abs(s - (i == j ? 1.0 : 0.0)));
    }
  }
  return worst;
}

Outcome pca_properties() {
  // Lexical embeddings of synthetic code lines, 384 -> 128.
  SyntheticCorpusSpec spec{.vocab_size = 3000};
  std::vector<std::string> lines;
  for (std::size_t i = 0; i < spec.vocab_size; ++i) lines.push_back(synthetic_line(i, spec.seed));
  const auto emb = embed_lines(lines, LexicalEmbedderConfig{});
  const auto m = fit_pca(emb.rows, emb.dim, 128);
  const double ortho = ortho_error(m);
  bool descending = true;
  for (std::size_t i = 1; i < m.out_dim; ++i) descending = descending && m.explained_variance[i] <= m.explained_variance[i - 1];

  // Points on the line through (e1 + e2)/sqrt(2).
  const std::size_t dim = 384;
  std::vector<float> s;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int r = 0; r < 200; ++r) {
    std::vector<float> row(dim, 0.0f);
    row[0] = row[1] = static_cast<float>(u(rng) / std::sqrt(2.0));
    s.insert(s.end(), row.begin(), row.end());
  }
  auto one = fit_pca(s, dim, 1);
  const double dir_err = std::max(std::abs(one.components[0] - 1 / std::sqrt(2.0)), std::abs(one.components[1] - 1 / std::sqrt(2.0)));
  double recon = 0;
  for (int r = 0; r < 200; ++r) {
    std::span<const float> row(s.data() + r * dim, dim);
    const auto z = one.reduce(row);
    const std::vector<double> zd(z.begin(), z.end());
    const auto back = one.reconstruct(zd);
    for (std::size_t c = 0; c < dim; ++c) recon += (back[c] - row[c]) * (back[c] - row[c]);
  }
  recon /= 200;
  const bool ok = ortho <= kOrthoTol && descending && recon < kRank1ReconTol && dir_err < 1e-6;
  return {ok, "orthonormality " + fmt(ortho, 3) + ", variance " + (descending ? "descending" : "NOT descending") +
                  ", rank-1 reconstruction " + fmt(recon, 3) + ", direction error " + fmt(dir_err, 3)};
}

Outcome artifact_count() {
  testing::TempDir d("acc-artifacts");
  std::string text;
  for (int r = 0; r < 5; ++r) text += "import os\nx = os.getcwd()\nprint(x)\n\n";
  testing::write_file(d / "corpus/smoke.py", text);
  testing::write_file(d / "corpus/more.py", "def f(a):\n    return a + 1\n\ny = f(2)\n");
  const std::string cmd = std::string(NEXTLINE_CLI) + " train --quiet --epochs 5 --corpus " + (d / "corpus").string() +
                          " --out " + (d / "out").string() + " > /dev/null";
  if (std::system(cmd.c_str()) != 0) return {false, "train command failed"};
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(d / "out")) names.push_back(e.path().filename());
  std::sort(names.begin(), names.end());
  const std::vector<std::string> want{"id_to_line.nlkv", "line_to_id.nlkv", "main.nlvi", "manifest.json",
                                      "pca.nlpc", "text.nlvi"};
  std::string listing;
  for (const auto& n : names) listing += (listing.empty() ? "" : " ") + n;
  return {names == want, std::to_string(names.size() - 1) + " artifacts + manifest: " + listing};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc == 4 && std::string(argv[1]) == "--store-probe") return store_probe(argv[2], argv[3]);
  std::cout << "kernels: " << kernels::active().name << std::endl;
  criterion("walk bias", 10, walk_bias);
  criterion("gradient check", 1, gradient_check);
  criterion("huffman optimality", 30, huffman_exhaustive);
  criterion("index oracle equivalence", 5, index_oracle);
  criterion("float16 storage", 0, half_storage);
  criterion("chain corpus accuracy", 300, chain_accuracy);
  criterion("real corpus accuracy", 0, real_accuracy);
  criterion("scaling linearity", 0, scaling);
  criterion("query latency", 0, latency);
  criterion("map store memory", 0, store_memory);
  criterion("pca properties", 0, pca_properties);
  criterion("artifact count", 0, artifact_count);
  std::cout << (failures ? "FAILED " : "ALL PASSED ") << failures << " failing" << std::endl;
  return failures;
}
