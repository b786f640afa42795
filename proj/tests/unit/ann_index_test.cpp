#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "helpers.hpp"
#include "lha/ann_index.hpp"
#include "lha/error.hpp"
#include "lha/metrics.hpp"

using namespace lha;

namespace {

EmbeddingMatrix random_unit_matrix(std::size_t n, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g;
  EmbeddingMatrix m(dim);
  std::vector<float> row(dim);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& x : row) x = g(rng);
    m.append("u" + std::to_string(i), row);
  }
  m.normalize();
  return m;
}

}  // namespace

TEST(AnnIndex, BuildErrors) {
  EXPECT_THROW(AnnIndex::build(EmbeddingMatrix(3)), InvalidArgument);
  EXPECT_THROW(AnnIndex::build(EmbeddingMatrix(0)), InvalidArgument);
}

TEST(AnnIndex, SingleRow) {
  EmbeddingMatrix m(2);
  const float r[] = {1, 0};
  m.append("only", r);
  const auto idx = AnnIndex::build(m);
  EXPECT_EQ(idx.size(), 1u);
  const float q[] = {-0.2f, 1};
  const auto res = idx.query(q, 5);
  ASSERT_EQ(res.size(), 1u);
  EXPECT_EQ(res[0].unit_id, "only");
}

TEST(AnnIndex, SelfRetrieval) {
  const auto m = random_unit_matrix(500, 16, 1);
  const auto idx = AnnIndex::build(m);
  for (std::size_t r = 0; r < m.rows(); r += 37) {
    const auto res = idx.query(m.row(r), 3);
    ASSERT_FALSE(res.empty());
    EXPECT_EQ(res[0].unit_id, m.unit_id(r));
    EXPECT_NEAR(res[0].similarity, 1.0, 1e-6);
  }
}

TEST(AnnIndex, KLargerThanSize) {
  const auto m = random_unit_matrix(7, 4, 2);
  EXPECT_EQ(AnnIndex::build(m).query(m.row(0), 50).size(), 7u);
}

TEST(AnnIndex, ZeroRowsNeverReturned) {
  auto m = random_unit_matrix(30, 4, 3);
  const float z[] = {0, 0, 0, 0};
  m.append("zero-a", z);
  m.append("zero-b", z);
  const auto idx = AnnIndex::build(m);
  for (std::size_t r = 0; r < 30; ++r) {
    for (const auto& n : idx.query(m.row(r), 100)) EXPECT_NE(n.unit_id.rfind("zero", 0), 0u);
  }
  EXPECT_TRUE(idx.query(z, 5).empty());
}

TEST(AnnIndex, DimMismatch) {
  const auto idx = AnnIndex::build(random_unit_matrix(10, 4, 4));
  const float q[] = {1, 0, 0};
  EXPECT_THROW(idx.query(q, 1), InvalidArgument);
}

TEST(AnnIndex, DeterministicUnderSeed) {
  const auto m = random_unit_matrix(2000, 12, 5);
  const auto probes = random_unit_matrix(50, 12, 6);
  const auto a = AnnIndex::build(m, {.trees = 4, .leaf_size = 8, .search_k = 64, .seed = 9});
  const auto b = AnnIndex::build(m, {.trees = 4, .leaf_size = 8, .search_k = 64, .seed = 9});
  for (std::size_t r = 0; r < probes.rows(); ++r) EXPECT_EQ(a.query(probes.row(r), 10), b.query(probes.row(r), 10));
}

TEST(AnnIndex, ResultsSortedUniqueAndExact) {
  const auto m = random_unit_matrix(1000, 8, 7);
  const auto idx = AnnIndex::build(m);
  const auto probes = random_unit_matrix(20, 8, 8);
  for (std::size_t r = 0; r < probes.rows(); ++r) {
    const auto res = idx.query(probes.row(r), 15);
    std::set<std::string> ids;
    for (std::size_t i = 0; i < res.size(); ++i) {
      EXPECT_TRUE(ids.insert(res[i].unit_id).second);
      if (i) EXPECT_FALSE(neighbor_before(res[i], res[i - 1]));
      EXPECT_NEAR(res[i].similarity, cosine(probes.row(r), m.at(res[i].unit_id)), 1e-6);
    }
  }
}

TEST(AnnIndex, MonotoneK) {
  const auto m = random_unit_matrix(3000, 10, 10);
  const auto idx = AnnIndex::build(m, {.trees = 6, .leaf_size = 10, .search_k = 0, .seed = 3});
  const auto probes = random_unit_matrix(30, 10, 11);
  for (std::size_t r = 0; r < probes.rows(); ++r) {
    const auto big = idx.query(probes.row(r), 20);
    for (std::size_t j : {1u, 5u, 12u}) {
      const auto small = idx.query(probes.row(r), j);
      ASSERT_LE(small.size(), big.size());
      EXPECT_TRUE(std::equal(small.begin(), small.end(), big.begin()));
    }
  }
}

TEST(AnnIndex, ExhaustiveBudgetMatchesExact) {
  const auto m = random_unit_matrix(400, 6, 12);
  const auto idx = AnnIndex::build(m, {.trees = 3, .leaf_size = 5, .search_k = 0, .seed = 1});
  const auto probes = random_unit_matrix(25, 6, 13);
  for (std::size_t r = 0; r < probes.rows(); ++r) {
    EXPECT_EQ(idx.query(probes.row(r), 10, 1u << 20), exact_knn(m, probes.row(r), 10));
  }
}

TEST(AnnIndex, PersistenceRoundTrip) {
  const auto m = random_unit_matrix(800, 8, 14);
  const auto idx = AnnIndex::build(m, {.trees = 5, .leaf_size = 7, .search_k = 50, .seed = 2});
  testutil::TempDir dir;
  idx.save(dir / "i.lhai");
  const auto back = AnnIndex::load(dir / "i.lhai");
  EXPECT_EQ(back.size(), idx.size());
  EXPECT_EQ(back.params().search_k, 50u);
  const auto probes = random_unit_matrix(40, 8, 15);
  for (std::size_t r = 0; r < probes.rows(); ++r) EXPECT_EQ(back.query(probes.row(r), 10), idx.query(probes.row(r), 10));
}

TEST(AnnIndex, LoadRejectsGarbage) {
  std::stringstream ss("LHAE....");
  EXPECT_THROW(AnnIndex::read(ss), FormatError);
  const auto idx = AnnIndex::build(random_unit_matrix(50, 4, 16));
  std::stringstream full;
  idx.write(full);
  std::stringstream cut(full.str().substr(0, full.str().size() / 2));
  EXPECT_THROW(AnnIndex::read(cut), FormatError);
}

TEST(AnnIndex, RecallOnSmallBenchmark) {
  const auto m = random_unit_matrix(5000, 16, 17);
  const auto idx = AnnIndex::build(m);
  const auto probes = random_unit_matrix(100, 16, 18);
  std::size_t hit = 0;
  for (std::size_t r = 0; r < probes.rows(); ++r) {
    std::set<std::string> truth;
    for (const auto& n : exact_knn(m, probes.row(r), 10)) truth.insert(n.unit_id);
    for (const auto& n : idx.query(probes.row(r), 10)) hit += truth.count(n.unit_id);
  }
  EXPECT_GE(static_cast<double>(hit) / 1000.0, 0.95);
}

TEST(ExactKnn, OrthonormalBasis) {
  EmbeddingMatrix m(3);
  for (int i = 0; i < 3; ++i) {
    std::vector<float> e(3, 0.0f);
    e[i] = 1.0f;
    m.append("e" + std::to_string(i), e);
  }
  const float q[] = {0, 1, 0};
  const auto res = exact_knn(m, q, 3);
  ASSERT_EQ(res.size(), 3u);
  EXPECT_EQ(res[0].unit_id, "e1");
  EXPECT_DOUBLE_EQ(res[0].similarity, 1.0);
  EXPECT_DOUBLE_EQ(res[1].similarity, 0.0);
  EXPECT_EQ(res[1].unit_id, "e0");  // tie broken by id
  EXPECT_TRUE(exact_knn(m, q, 0).empty());
  const float bad[] = {1, 0};
  EXPECT_THROW(exact_knn(m, bad, 1), InvalidArgument);
}
