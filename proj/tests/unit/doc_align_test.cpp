#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "helpers.hpp"
#include "lha/doc_align.hpp"
#include "lha/error.hpp"
#include "lha/metrics.hpp"

using namespace lha;

namespace {

EmbeddingMatrix random_matrix(std::size_t n, std::size_t dim, std::uint64_t seed, const std::string& prefix) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g;
  EmbeddingMatrix m(dim);
  std::vector<float> row(dim);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& x : row) x = g(rng);
    m.append(prefix + std::to_string(i), row);
  }
  m.normalize();
  return m;
}

}  // namespace

TEST(AlignDocuments, ThresholdAboveOneIsEmpty) {
  const auto s = random_matrix(20, 5, 1, "s"), t = random_matrix(30, 5, 2, "t");
  EXPECT_TRUE(align_documents(s, AnnIndex::build(t), 3, 1.0 + 1e-9).empty());
}

TEST(AlignDocuments, SelfAlignment) {
  const auto m = random_matrix(100, 8, 3, "d");
  const auto pairs = align_documents(m, AnnIndex::build(m), 1, 0.0);
  ASSERT_EQ(pairs.size(), 100u);
  for (const auto& p : pairs) {
    EXPECT_EQ(p.source_id, p.target_id);
    EXPECT_NEAR(p.similarity, 1.0, 1e-6);
  }
}

TEST(AlignDocuments, KAndThresholdMonotone) {
  const auto s = random_matrix(40, 6, 4, "s"), t = random_matrix(60, 6, 5, "t");
  const auto idx = AnnIndex::build(t);
  const auto base = align_documents(s, idx, 5, 0.1);
  const auto higher = align_documents(s, idx, 5, 0.4);
  std::set<std::pair<std::string, std::string>> b;
  for (const auto& p : base) b.emplace(p.source_id, p.target_id);
  for (const auto& p : higher) EXPECT_TRUE(b.count({p.source_id, p.target_id}));
  const auto fewer = align_documents(s, idx, 2, 0.1);
  // per source, the K=2 output is a prefix of the K=5 output
  std::map<std::string, std::vector<DocPair>> by5, by2;
  for (const auto& p : base) by5[p.source_id].push_back(p);
  for (const auto& p : fewer) by2[p.source_id].push_back(p);
  for (const auto& [src, list] : by2) {
    ASSERT_LE(list.size(), by5[src].size());
    EXPECT_TRUE(std::equal(list.begin(), list.end(), by5[src].begin()));
  }
}

TEST(AlignDocuments, AtMostKPerSourceAndScoresAreFresh) {
  const auto s = random_matrix(25, 6, 6, "s"), t = random_matrix(25, 6, 7, "t");
  const auto pairs = align_documents(s, AnnIndex::build(t), 3, -1.0);
  std::map<std::string, int> per;
  for (const auto& p : pairs) {
    EXPECT_LE(++per[p.source_id], 3);
    EXPECT_NEAR(p.similarity, cosine(s.at(p.source_id), t.at(p.target_id)), 1e-6);
  }
}

TEST(AlignDocuments, ExactAgreesWithExhaustiveIndexBudget) {
  const auto s = random_matrix(30, 6, 8, "s"), t = random_matrix(200, 6, 9, "t");
  const auto idx = AnnIndex::build(t, {.trees = 4, .leaf_size = 8, .search_k = 1u << 20, .seed = 1});
  EXPECT_EQ(align_documents(s, idx, 4, 0.0), align_documents_exact(s, t, 4, 0.0));
}

TEST(AlignDocuments, ZeroSourceRowsAndDimMismatch) {
  auto s = random_matrix(3, 4, 10, "s");
  const float z[] = {0, 0, 0, 0};
  s.append("zero", z);
  const auto t = random_matrix(5, 4, 11, "t");
  for (const auto& p : align_documents(s, AnnIndex::build(t), 2, -1.0)) EXPECT_NE(p.source_id, "zero");
  EXPECT_THROW(align_documents(random_matrix(3, 5, 12, "s"), AnnIndex::build(t), 1, 0.0), InvalidArgument);
}

TEST(AlignDocuments, ParallelMatchesSerial) {
  const auto s = random_matrix(101, 6, 13, "s"), t = random_matrix(80, 6, 14, "t");
  const auto idx = AnnIndex::build(t);
  EXPECT_EQ(align_documents(s, idx, 3, 0.0, 1), align_documents(s, idx, 3, 0.0, 4));
}

TEST(DocPairs, TsvRoundTrip) {
  const std::vector<DocPair> pairs = {{"a", "b", 0.1234567890123456789}, {"c d", "e", -0.5}};
  std::stringstream ss;
  write_doc_pairs(ss, pairs);
  EXPECT_EQ(read_doc_pairs(ss), pairs);
  std::stringstream bad("a\tb\n");
  EXPECT_THROW(read_doc_pairs(bad), ParseError);
}
