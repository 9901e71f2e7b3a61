#include <doctest.h>

#include <random>

#include "nextline/error.hpp"
#include "nextline/vecindex.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace nextline;

namespace {

EmbeddingTable random_table(std::size_t count, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> n(0.0f, 1.0f);
  EmbeddingTable t{dim, count, std::vector<float>(dim * count)};
  for (auto& x : t.rows) x = n(rng);
  return t;
}

}  // namespace

TEST_CASE("build rounds to binary16 and halves the payload") {
  EmbeddingTable t{2, 1, {0.5f, 0.1f}};
  const auto idx = build_index(t);
  CHECK(idx.row_as_float(0)[0] == 0.5f);
  CHECK(static_cast<double>(idx.row_as_float(0)[1]) == 0.0999755859375);

  const auto big = build_index(random_table(100, 128, 1));
  CHECK(big.payload_bytes() == 25'600);
  CHECK(big.payload_bytes() * 2 == 100 * 128 * sizeof(float));

  EmbeddingTable over{3, 2, {0, 0, 0, 1, 70000.0f, 1}};
  try {
    build_index(over);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Build);
    CHECK(std::string(e.what()).find("row 1") != std::string::npos);
  }
}

TEST_CASE("search examples") {
  const auto idx = build_index(random_table(4, 16, 2));
  const auto q = idx.row_as_float(2);
  const auto r = idx.search(q, 10);
  REQUIRE(r.size() == 4);
  CHECK(r[0].id == 2);
  CHECK(r[0].distance == 0.0f);
  for (std::size_t i = 1; i < r.size(); ++i) CHECK(r[i - 1].distance <= r[i].distance);

  std::vector<float> wrong(15);
  CHECK_THROWS_AS(idx.search(wrong, 3), Error);
  CHECK_THROWS_AS(idx.search(q, 0), Error);
}

TEST_CASE("ties break by ascending id") {
  EmbeddingTable t{2, 5, {1, 0, 0, 1, 1, 0, -1, 0, 0, 1}};
  const auto idx = build_index(t);
  std::vector<float> q{0, 0};
  const auto r = idx.search(q, 5);
  std::vector<std::uint32_t> ids;
  for (auto& h : r) ids.push_back(h.id);
  CHECK(ids == std::vector<std::uint32_t>{0, 1, 2, 3, 4});
}

TEST_CASE("search equals the exhaustive oracle") {
  for (std::size_t dim : {8, 50, 128}) {
    const auto t = random_table(1000, dim, dim);
    const auto idx = build_index(t);
    std::vector<std::uint16_t> data(idx.payload().begin(), idx.payload().end());
    std::mt19937_64 rng(dim + 1);
    std::normal_distribution<float> n(0.0f, 1.0f);
    for (int qi = 0; qi < 50; ++qi) {
      std::vector<float> q(dim);
      for (auto& x : q) x = n(rng);
      if (qi % 10 == 0) q = idx.row_as_float(static_cast<std::size_t>(qi));
      const auto got = idx.search(q, 10);
      const auto want = oracle::exhaustive_scan(data, dim, q, 10);
      REQUIRE(got.size() == want.size());
      for (std::size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i].id == want[i].id);
        CHECK(got[i].distance == want[i].distance);
      }
    }
  }
}

TEST_CASE("index files round-trip and reject damage") {
  testing::TempDir d("idx");
  const auto idx = build_index(random_table(10, 6, 3));
  idx.save(d / "a.nlvi");
  const auto back = VectorIndex::load(d / "a.nlvi");
  back.save(d / "b.nlvi");
  const std::string bytes = testing::read_file(d / "a.nlvi");
  CHECK(bytes == testing::read_file(d / "b.nlvi"));
  CHECK(bytes.size() == 24 + 10 * 6 * 2);

  testing::write_file(d / "short.nlvi", bytes.substr(0, bytes.size() - 1));
  CHECK_THROWS_AS(VectorIndex::load(d / "short.nlvi"), Error);

  std::string v = bytes;
  v[4] = 9;
  testing::write_file(d / "v.nlvi", v);
  try {
    VectorIndex::load(d / "v.nlvi");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Format);
    const std::string msg = e.what();
    CHECK(msg.find("9") != std::string::npos);
    CHECK(msg.find("1") != std::string::npos);
  }
  std::string m = bytes;
  m[0] = 'X';
  testing::write_file(d / "m.nlvi", m);
  CHECK_THROWS_AS(VectorIndex::load(d / "m.nlvi"), Error);
}
