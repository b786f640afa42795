#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "lha/embeddings.hpp"

namespace lha {

struct Neighbor {
  std::string unit_id;
  double similarity = 0.0;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Similarity descending, then unit id ascending.
bool neighbor_before(const Neighbor& a, const Neighbor& b);

struct AnnParams {
  std::uint32_t trees = 16;
  std::uint32_t leaf_size = 24;
  /// Candidate budget per query; 0 selects the default (trees * leaf_size * 8).
  std::uint64_t search_k = 0;
  std::uint64_t seed = 42;

  std::uint64_t effective_search_k() const noexcept {
    return search_k ? search_k : std::uint64_t{trees} * leaf_size * 8;
  }
};

/// Forest of random-hyperplane trees over cosine similarity. Immutable after
/// build; const queries are safe from multiple threads.
class AnnIndex {
 public:
  static AnnIndex build(const EmbeddingMatrix& m, const AnnParams& params = {});

  /// Up to k neighbours, similarity descending. Reported similarities are exact
  /// cosines; the candidate set is approximate. Zero queries return nothing.
  std::vector<Neighbor> query(std::span<const float> v, std::size_t k) const;
  std::vector<Neighbor> query(std::span<const float> v, std::size_t k, std::uint64_t search_k) const;

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return ids_.size(); }
  const AnnParams& params() const noexcept { return params_; }
  const std::vector<std::string>& id_map() const noexcept { return ids_; }

  void save(const std::filesystem::path& path) const;
  static AnnIndex load(const std::filesystem::path& path);
  void write(std::ostream& out) const;
  static AnnIndex read(std::istream& in);

 private:
  struct Node {
    std::int32_t left = -1;   // child node, or -1 for a leaf
    std::int32_t right = -1;
    std::uint32_t begin = 0;  // leaf item range in items_, or split-plane row in planes_
    std::uint32_t end = 0;
    float offset = 0.0f;
  };

  std::int32_t build_node(std::vector<std::uint32_t>& items, std::size_t lo, std::size_t hi,
                          std::mt19937_64& rng);
  std::span<const float> vec(std::uint32_t item) const { return {vectors_.data() + std::size_t{item} * dim_, dim_}; }
  std::span<const float> plane(const Node& n) const { return {planes_.data() + std::size_t{n.begin} * dim_, dim_}; }

  std::size_t dim_ = 0;
  AnnParams params_;
  std::vector<std::string> ids_;
  std::vector<float> vectors_;
  std::vector<char> live_;            // zero rows are never candidates
  std::vector<Node> nodes_;
  std::vector<std::int32_t> roots_;
  std::vector<std::uint32_t> items_;  // leaf contents
  std::vector<float> planes_;         // split normals, one per internal node
};

/// Exhaustive cosine scan; zero rows are skipped.
std::vector<Neighbor> exact_knn(const EmbeddingMatrix& m, std::span<const float> v, std::size_t k);

}  // namespace lha
