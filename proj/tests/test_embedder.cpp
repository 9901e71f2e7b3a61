#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>
#include <set>

#include "nextline/embedder.hpp"
#include "nextline/error.hpp"
#include "nextline/walker.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace nextline;

namespace {

std::uint64_t weighted_length(const HuffmanTree& t, std::span<const std::uint64_t> f) {
  std::uint64_t total = 0;
  for (NodeId i = 0; i < f.size(); ++i) total += f[i] * t.code_length(i);
  return total;
}

bool prefix_free(const HuffmanTree& t) {
  std::vector<std::string> codes;
  for (NodeId i = 0; i < t.leaf_count(); ++i) {
    std::string s;
    for (auto b : t.code(i)) s += static_cast<char>('0' + b);
    codes.push_back(s);
  }
  for (std::size_t i = 0; i < codes.size(); ++i) {
    for (std::size_t j = 0; j < codes.size(); ++j) {
      if (i != j && codes[j].rfind(codes[i], 0) == 0) return false;
    }
  }
  return true;
}

double cosine(std::span<const float> a, std::span<const float> b) {
  double d = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d += double(a[i]) * b[i];
    na += double(a[i]) * a[i];
    nb += double(b[i]) * b[i];
  }
  return d / std::sqrt(na * nb);
}

// Two disjoint triangles {0,1,2} and {3,4,5}.
WalkCorpus two_clique_walks(std::size_t num_walks) {
  std::vector<Edge> e{{0, 1, 1}, {1, 2, 1}, {0, 2, 1}, {3, 4, 1}, {4, 5, 1}, {3, 5, 1}};
  AdjacencyView a(6, e);
  return generate_walks(a, WalkConfig{.num_walks = num_walks, .walk_length = 10, .seed = 3});
}

}  // namespace

TEST_CASE("huffman examples") {
  const std::vector<std::uint64_t> f{5, 2, 1};
  const auto t = HuffmanTree::build(f);
  CHECK(t.code_length(0) == 1);
  CHECK(t.code_length(1) == 2);
  CHECK(t.code_length(2) == 2);
  CHECK(weighted_length(t, f) == 11);
  CHECK(oracle::min_prefix_cost(f) == 11);
  CHECK(t.internal_count() == 2);

  const std::vector<std::uint64_t> two{1, 1};
  const auto t2 = HuffmanTree::build(two);
  CHECK(t2.code_length(0) == 1);
  CHECK(t2.code_length(1) == 1);
  CHECK(t2.code(0)[0] != t2.code(1)[0]);

  const std::vector<std::uint64_t> one{1};
  try {
    HuffmanTree::build(one);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
  }
}

TEST_CASE("huffman structure on random frequencies") {
  std::mt19937 rng(4);
  for (int t = 0; t < 200; ++t) {
    std::vector<std::uint64_t> f(2 + rng() % 60);
    for (auto& x : f) x = 1 + rng() % 50;
    std::sort(f.rbegin(), f.rend());
    const auto tree = HuffmanTree::build(f);
    CHECK(prefix_free(tree));
    std::set<std::uint32_t> internal;
    for (NodeId i = 0; i < f.size(); ++i) {
      REQUIRE(tree.path(i).size() == tree.code_length(i));
      CHECK(tree.path(i)[0] == f.size() - 2);  // root first
      internal.insert(tree.path(i).begin(), tree.path(i).end());
      for (NodeId j = 0; j < f.size(); ++j) {
        if (f[i] > f[j]) CHECK(tree.code_length(i) <= tree.code_length(j));
      }
    }
    CHECK(internal.size() == f.size() - 1);
    if (f.size() <= 6) CHECK(weighted_length(tree, f) == oracle::min_prefix_cost(f));
  }
}

TEST_CASE("pair loss gradient matches central differences") {
  const std::vector<std::uint64_t> f{4, 3, 2, 1};
  const auto tree = HuffmanTree::build(f);
  const std::size_t d = 8;
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0;
  for (NodeId target = 0; target < 4; ++target) {
    const auto code = tree.code(target);
    const std::size_t L = code.size();
    std::vector<double> center(d), nodes(L * d);
    for (auto& x : center) x = u(rng);
    for (auto& x : nodes) x = u(rng);
    std::vector<double> gc(d), gn(L * d);
    detail::hs_pair_loss_grad(center, nodes, code, gc, gn);

    auto loss = [&](const std::vector<double>& c, const std::vector<double>& n) {
      std::vector<std::vector<double>> rows(L, std::vector<double>(d));
      std::vector<int> bits(code.begin(), code.end());
      for (std::size_t j = 0; j < L; ++j) std::copy_n(n.begin() + j * d, d, rows[j].begin());
      return oracle::hs_loss(c, rows, bits);
    };
    CHECK(detail::hs_pair_loss_grad(center, nodes, code, gc, gn) == doctest::Approx(loss(center, nodes)));
    const double h = 1e-6;
    auto rel = [](double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8}); };
    for (std::size_t i = 0; i < d; ++i) {
      auto p = center, m = center;
      p[i] += h;
      m[i] -= h;
      worst = std::max(worst, rel(gc[i], (loss(p, nodes) - loss(m, nodes)) / (2 * h)));
    }
    for (std::size_t i = 0; i < L * d; ++i) {
      auto p = nodes, m = nodes;
      p[i] += h;
      m[i] -= h;
      worst = std::max(worst, rel(gn[i], (loss(center, p) - loss(center, m)) / (2 * h)));
    }
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("single update step follows the rule") {
  const std::size_t d = 8;
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<float> u(-0.5f, 0.5f);
  std::vector<float> center(d), internal(3 * d), scratch(d);
  for (auto& x : center) x = u(rng);
  for (auto& x : internal) x = u(rng);
  const std::vector<std::uint32_t> path{2, 0};
  const std::vector<std::uint8_t> code{1, 0};
  const float lr = 0.05f;

  std::vector<double> c0(center.begin(), center.end()), n0(internal.begin(), internal.end());
  std::vector<double> c1 = c0, n1 = n0;
  for (std::size_t j = 0; j < path.size(); ++j) {
    double f = 0;
    for (std::size_t i = 0; i < d; ++i) f += c0[i] * n0[path[j] * d + i];
    const double g = (1.0 - code[j] - 1.0 / (1.0 + std::exp(-f))) * lr;
    for (std::size_t i = 0; i < d; ++i) {
      c1[i] += g * n0[path[j] * d + i];
      n1[path[j] * d + i] += g * c0[i];
    }
  }
  detail::hs_pair_update(center.data(), internal.data(), path, code, d, lr, scratch.data());
  for (std::size_t i = 0; i < d; ++i) CHECK(center[i] == doctest::Approx(c1[i]).epsilon(1e-5));
  for (std::size_t i = 0; i < internal.size(); ++i) CHECK(internal[i] == doctest::Approx(n1[i]).epsilon(1e-5));
  for (std::size_t i = d; i < 2 * d; ++i) CHECK(internal[i] == static_cast<float>(n0[i]));
}

TEST_CASE("initialization and zero walks") {
  const auto m = EmbeddingModel::initialize(5, 16, 9);
  CHECK(m.input.size() == 80);
  CHECK(m.internal.size() == 64);
  for (float x : m.input) CHECK(std::abs(x) <= 0.5f / 16);
  for (float x : m.internal) CHECK(x == 0.0f);

  const std::vector<std::uint64_t> f{3, 2, 2, 1, 1};
  auto model = m;
  TrainConfig cfg;
  cfg.vector_size = 16;
  cfg.workers = 1;
  cfg.epochs = 3;
  train_skipgram_hs(WalkCorpus{}, HuffmanTree::build(f), cfg, model);
  CHECK(model.input == m.input);
  CHECK(model.internal == m.internal);
}

TEST_CASE("training separates two cliques, lowers loss and is deterministic") {
  const WalkCorpus walks = two_clique_walks(20);
  Vocabulary vocab({"a", "b", "c", "d", "e", "f"}, {1, 1, 1, 1, 1, 1});
  TrainConfig cfg;
  cfg.vector_size = 16;
  cfg.window = 3;
  cfg.epochs = 30;
  cfg.workers = 1;
  TrainStats stats;
  const auto model = train_skipgram_hs(walks, vocab, cfg, &stats);
  REQUIRE(stats.epoch_mean_loss.size() == 30);
  CHECK(stats.epoch_mean_loss.back() < stats.epoch_mean_loss.front());
  CHECK(model.all_finite());

  double intra = 0, inter = 0;
  int ni = 0, nx = 0;
  for (NodeId i = 0; i < 6; ++i) {
    for (NodeId j = i + 1; j < 6; ++j) {
      const double c = cosine(model.input_row(i), model.input_row(j));
      if ((i < 3) == (j < 3)) {
        intra += c;
        ++ni;
      } else {
        inter += c;
        ++nx;
      }
    }
  }
  CHECK(intra / ni > inter / nx);

  const auto again = train_skipgram_hs(walks, vocab, cfg);
  CHECK(std::memcmp(again.input.data(), model.input.data(), model.input.size() * 4) == 0);
  CHECK(std::memcmp(again.internal.data(), model.internal.data(), model.internal.size() * 4) == 0);

  cfg.workers = 3;
  TrainStats par;
  const auto hogwild = train_skipgram_hs(walks, vocab, cfg, &par);
  CHECK(hogwild.all_finite());
  CHECK(par.epoch_mean_loss.back() < par.epoch_mean_loss.front());
}

TEST_CASE("diverging training is reported") {
  const WalkCorpus walks = two_clique_walks(5);
  const std::vector<std::uint64_t> f{1, 1, 1, 1, 1, 1};
  auto model = EmbeddingModel::initialize(6, 4, 1);
  model.input[0] = std::numeric_limits<float>::infinity();
  TrainConfig cfg;
  cfg.vector_size = 4;
  cfg.workers = 1;
  cfg.epochs = 1;
  try {
    train_skipgram_hs(walks, HuffmanTree::build(f), cfg, model);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Training);
  }
}

TEST_CASE("extract embeddings and checkpoint round trip") {
  const auto m = EmbeddingModel::initialize(5, 4, 2);
  const auto t = extract_embeddings(m, 3);
  CHECK(t.count == 3);
  CHECK(t.dim == 4);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 4; ++j) CHECK(t.row(i)[j] == m.input_row(static_cast<NodeId>(i))[j]);
  }
  CHECK(extract_embeddings(m, 100).count == 5);

  testing::TempDir d("ckpt");
  m.save(d / "m.nlem");
  const auto back = EmbeddingModel::load(d / "m.nlem");
  CHECK(back.input == m.input);
  CHECK(back.internal == m.internal);
  const auto bytes = testing::read_file(d / "m.nlem");
  CHECK(bytes.substr(0, 4) == "NLEM");
  testing::write_file(d / "short.nlem", bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_AS(EmbeddingModel::load(d / "short.nlem"), Error);
}

TEST_CASE("train config validation") {
  TrainConfig c;
  CHECK_NOTHROW(c.validate());
  c.window = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = TrainConfig{};
  c.min_lr = c.initial_lr;
  CHECK_THROWS_AS(c.validate(), Error);
  c = TrainConfig{};
  c.epochs = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  CHECK(TrainConfig::default_workers() >= 1);
}
