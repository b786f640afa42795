#include "lha/ann_index.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>

#include "lha/binary_io.hpp"
#include "lha/error.hpp"
#include "lha/metrics.hpp"

namespace lha {

namespace {

constexpr char kMagic[4] = {'L', 'H', 'A', 'I'};
constexpr std::uint16_t kVersion = 1;

double dot(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += static_cast<double>(a[k]) * b[k];
  return s;
}

bool is_zero(std::span<const float> v) {
  return std::all_of(v.begin(), v.end(), [](float x) { return x == 0.0f; });
}

std::vector<Neighbor> top_k(std::vector<Neighbor> all, std::size_t k) {
  if (all.size() > k) {
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), neighbor_before);
    all.resize(k);
  } else {
    std::sort(all.begin(), all.end(), neighbor_before);
  }
  return all;
}

}  // namespace

bool neighbor_before(const Neighbor& a, const Neighbor& b) {
  if (a.similarity != b.similarity) return a.similarity > b.similarity;
  return a.unit_id < b.unit_id;
}

AnnIndex AnnIndex::build(const EmbeddingMatrix& m, const AnnParams& params) {
  if (m.dim() == 0) throw InvalidArgument("cannot index vectors of dimension 0");
  if (m.empty()) throw InvalidArgument("cannot index an empty embedding matrix");
  if (params.trees == 0 || params.leaf_size == 0) throw InvalidArgument("trees and leaf_size must be positive");

  AnnIndex idx;
  idx.dim_ = m.dim();
  idx.params_ = params;
  idx.ids_ = m.unit_ids();
  idx.vectors_ = m.data();
  idx.live_.resize(m.rows());
  std::vector<std::uint32_t> live_items;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    idx.live_[r] = !m.is_zero_row(r);
    if (idx.live_[r]) live_items.push_back(static_cast<std::uint32_t>(r));
  }

  std::mt19937_64 rng(params.seed);
  for (std::uint32_t t = 0; t < params.trees && !live_items.empty(); ++t) {
    auto items = live_items;
    idx.roots_.push_back(idx.build_node(items, 0, items.size(), rng));
  }
  return idx;
}

std::int32_t AnnIndex::build_node(std::vector<std::uint32_t>& items, std::size_t lo, std::size_t hi,
                                  std::mt19937_64& rng) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.emplace_back();
  const std::size_t n = hi - lo;
  if (n <= params_.leaf_size) {
    Node& leaf = nodes_.back();
    leaf.begin = static_cast<std::uint32_t>(items_.size());
    items_.insert(items_.end(), items.begin() + static_cast<std::ptrdiff_t>(lo),
                  items.begin() + static_cast<std::ptrdiff_t>(hi));
    leaf.end = static_cast<std::uint32_t>(items_.size());
    return id;
  }

  // Two-means on a small sample picks a direction that separates the data.
  std::vector<double> c0(dim_), c1(dim_);
  const auto pick = [&] { return items[lo + rng() % n]; };
  {
    const auto a = vec(pick());
    const auto b = vec(pick());
    std::copy(a.begin(), a.end(), c0.begin());
    std::copy(b.begin(), b.end(), c1.begin());
  }
  double w0 = 1.0, w1 = 1.0;
  for (int iter = 0; iter < 64; ++iter) {
    const auto v = vec(pick());
    double d0 = 0.0, d1 = 0.0;
    for (std::size_t k = 0; k < dim_; ++k) {
      d0 += (v[k] - c0[k]) * (v[k] - c0[k]);
      d1 += (v[k] - c1[k]) * (v[k] - c1[k]);
    }
    auto& c = d0 <= d1 ? c0 : c1;
    auto& w = d0 <= d1 ? w0 : w1;
    for (std::size_t k = 0; k < dim_; ++k) c[k] = (c[k] * w + v[k]) / (w + 1.0);
    w += 1.0;
  }
  std::vector<float> normal(dim_);
  double norm = 0.0;
  for (std::size_t k = 0; k < dim_; ++k) {
    normal[k] = static_cast<float>(c0[k] - c1[k]);
    norm += static_cast<double>(normal[k]) * normal[k];
  }
  if (norm == 0.0) {
    // identical centroids: fall back to a random direction
    std::normal_distribution<float> gauss;
    for (auto& x : normal) x = gauss(rng);
  }
  normalize_vector(normal);

  // Median split on the projection keeps trees balanced.
  std::vector<std::pair<double, std::uint32_t>> proj(n);
  for (std::size_t i = 0; i < n; ++i) proj[i] = {dot(normal, vec(items[lo + i])), items[lo + i]};
  const std::size_t mid = n / 2;
  std::nth_element(proj.begin(), proj.begin() + static_cast<std::ptrdiff_t>(mid), proj.end());
  const double right_min = proj[mid].first;
  double left_max = -INFINITY;
  for (std::size_t i = 0; i < mid; ++i) left_max = std::max(left_max, proj[i].first);
  for (std::size_t i = 0; i < n; ++i) items[lo + i] = proj[i].second;

  const auto plane_row = static_cast<std::uint32_t>(planes_.size() / dim_);
  planes_.insert(planes_.end(), normal.begin(), normal.end());
  const float offset = static_cast<float>(0.5 * (left_max + right_min));

  const auto left = build_node(items, lo, lo + mid, rng);
  const auto right = build_node(items, lo + mid, hi, rng);
  Node& node = nodes_[static_cast<std::size_t>(id)];
  node.left = left;
  node.right = right;
  node.begin = plane_row;
  node.offset = offset;
  return id;
}

std::vector<Neighbor> AnnIndex::query(std::span<const float> v, std::size_t k) const {
  return query(v, k, params_.effective_search_k());
}

std::vector<Neighbor> AnnIndex::query(std::span<const float> v, std::size_t k, std::uint64_t search_k) const {
  if (v.size() != dim_) {
    throw InvalidArgument("query has " + std::to_string(v.size()) + " components, index dim " +
                          std::to_string(dim_));
  }
  if (k == 0 || is_zero(v) || roots_.empty()) return {};
  search_k = std::max<std::uint64_t>(search_k, k);

  using Entry = std::pair<double, std::int32_t>;
  std::priority_queue<Entry> heap;
  for (auto r : roots_) heap.emplace(INFINITY, r);

  std::vector<std::uint32_t> candidates;
  while (!heap.empty() && candidates.size() < search_k) {
    const auto [priority, id] = heap.top();
    heap.pop();
    const Node& node = nodes_[static_cast<std::size_t>(id)];
    if (node.left < 0) {
      candidates.insert(candidates.end(), items_.begin() + node.begin, items_.begin() + node.end);
      continue;
    }
    const double margin = dot(plane(node), v) - node.offset;
    heap.emplace(std::min(priority, margin), node.right);
    heap.emplace(std::min(priority, -margin), node.left);
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  std::vector<Neighbor> out;
  out.reserve(candidates.size());
  for (auto item : candidates) out.push_back({ids_[item], cosine(vec(item), v)});
  return top_k(std::move(out), k);
}

void AnnIndex::write(std::ostream& out) const {
  io::Writer w(out);
  w.bytes(kMagic, sizeof kMagic);
  w.scalar<std::uint16_t>(kVersion);
  w.scalar<std::uint32_t>(static_cast<std::uint32_t>(dim_));
  w.scalar<std::uint32_t>(params_.trees);
  w.scalar<std::uint32_t>(params_.leaf_size);
  w.scalar<std::uint64_t>(params_.search_k);
  w.scalar<std::uint64_t>(params_.seed);
  w.scalar<std::uint64_t>(ids_.size());
  for (const auto& id : ids_) w.string(id);
  w.floats(vectors_);
  for (char c : live_) w.scalar<std::uint8_t>(static_cast<std::uint8_t>(c));
  w.scalar<std::uint64_t>(nodes_.size());
  for (const auto& n : nodes_) {
    w.scalar(n.left);
    w.scalar(n.right);
    w.scalar(n.begin);
    w.scalar(n.end);
    w.scalar(n.offset);
  }
  w.scalar<std::uint64_t>(roots_.size());
  for (auto r : roots_) w.scalar(r);
  w.scalar<std::uint64_t>(items_.size());
  for (auto i : items_) w.scalar(i);
  w.scalar<std::uint64_t>(planes_.size());
  w.floats(planes_);
}

AnnIndex AnnIndex::read(std::istream& in) {
  io::Reader r(in, "index file");
  char magic[4];
  r.bytes(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof magic) != 0) throw FormatError("not an LHAI index file (bad magic)");
  const auto version = r.scalar<std::uint16_t>();
  if (version != kVersion) throw FormatError("unsupported index file version " + std::to_string(version));

  AnnIndex idx;
  idx.dim_ = r.scalar<std::uint32_t>();
  idx.params_.trees = r.scalar<std::uint32_t>();
  idx.params_.leaf_size = r.scalar<std::uint32_t>();
  idx.params_.search_k = r.scalar<std::uint64_t>();
  idx.params_.seed = r.scalar<std::uint64_t>();
  const auto count = r.scalar<std::uint64_t>();
  for (std::uint64_t i = 0; i < count; ++i) idx.ids_.push_back(r.string());
  idx.vectors_.resize(static_cast<std::size_t>(count) * idx.dim_);
  r.floats(idx.vectors_);
  idx.live_.resize(count);
  for (auto& c : idx.live_) c = static_cast<char>(r.scalar<std::uint8_t>());
  idx.nodes_.resize(r.scalar<std::uint64_t>());
  for (auto& n : idx.nodes_) {
    n.left = r.scalar<std::int32_t>();
    n.right = r.scalar<std::int32_t>();
    n.begin = r.scalar<std::uint32_t>();
    n.end = r.scalar<std::uint32_t>();
    n.offset = r.scalar<float>();
  }
  idx.roots_.resize(r.scalar<std::uint64_t>());
  for (auto& x : idx.roots_) x = r.scalar<std::int32_t>();
  idx.items_.resize(r.scalar<std::uint64_t>());
  for (auto& x : idx.items_) x = r.scalar<std::uint32_t>();
  idx.planes_.resize(r.scalar<std::uint64_t>());
  r.floats(idx.planes_);
  return idx;
}

void AnnIndex::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write index: " + path.string());
  write(out);
}

AnnIndex AnnIndex::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open index: " + path.string());
  return read(in);
}

std::vector<Neighbor> exact_knn(const EmbeddingMatrix& m, std::span<const float> v, std::size_t k) {
  if (v.size() != m.dim()) {
    throw InvalidArgument("query has " + std::to_string(v.size()) + " components, matrix dim " +
                          std::to_string(m.dim()));
  }
  if (k == 0) return {};
  std::vector<Neighbor> all;
  all.reserve(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    if (m.is_zero_row(r)) continue;
    all.push_back({m.unit_id(r), cosine(m.row(r), v)});
  }
  return top_k(std::move(all), k);
}

}  // namespace lha
