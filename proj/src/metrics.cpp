#include "lha/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <unordered_set>

#include "lha/error.hpp"
#include "lha/transport.hpp"

namespace lha {

namespace {

double euclidean(std::span<const float> a, std::span<const float> b) {
  double sq = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = static_cast<double>(a[k]) - b[k];
    sq += d * d;
  }
  return std::sqrt(sq);
}

std::vector<double> ground_costs(const BagOfWords& x, const BagOfWords& y) {
  std::vector<double> cost(x.words.size() * y.words.size());
  for (std::size_t i = 0; i < x.words.size(); ++i) {
    for (std::size_t j = 0; j < y.words.size(); ++j) {
      cost[i * y.words.size() + j] = euclidean(x.vectors[i], y.vectors[j]);
    }
  }
  return cost;
}

void require_embeddable(const BagOfWords& x, const BagOfWords& y) {
  if (x.empty() || y.empty()) throw InvalidArgument("unembeddable sentence");
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw InvalidArgument("scorer parameter '" + key + "' is not a number: '" + value + "'");
  }
}

}  // namespace

double cosine(std::span<const float> u, std::span<const float> v) {
  if (u.size() != v.size()) {
    throw InvalidArgument("cosine: dimension mismatch (" + std::to_string(u.size()) + " vs " +
                          std::to_string(v.size()) + ")");
  }
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    dot += static_cast<double>(u[k]) * v[k];
    nu += static_cast<double>(u[k]) * u[k];
    nv += static_cast<double>(v[k]) * v[k];
  }
  if (nu == 0.0 || nv == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
}

double unigram_overlap(const std::vector<std::string>& x, const std::vector<std::string>& y) {
  const std::unordered_set<std::string> ys(y.begin(), y.end());
  if (ys.empty()) return 0.0;
  const std::unordered_set<std::string> xs(x.begin(), x.end());
  std::size_t common = 0;
  for (const auto& t : ys) common += xs.count(t);
  return static_cast<double>(common) / static_cast<double>(ys.size());
}

Bm25Stats Bm25Stats::build(const std::vector<std::vector<std::string>>& docs, double k1, double b) {
  Bm25Stats s;
  s.k1 = k1;
  s.b = b;
  s.doc_count = docs.size();
  std::size_t total_len = 0;
  for (const auto& d : docs) {
    total_len += d.size();
    const std::unordered_set<std::string> uniq(d.begin(), d.end());
    for (const auto& t : uniq) ++s.doc_freq[t];
  }
  s.avg_doc_len = docs.empty() || total_len == 0 ? 1.0 : static_cast<double>(total_len) / docs.size();
  return s;
}

double Bm25Stats::idf(const std::string& term) const {
  const auto it = doc_freq.find(term);
  const double df = it == doc_freq.end() ? 0.0 : static_cast<double>(it->second);
  return std::log(1.0 + (static_cast<double>(doc_count) - df + 0.5) / (df + 0.5));
}

namespace {

double bm25_with(const std::vector<std::string>& query, const std::vector<std::string>& doc,
                 const Bm25Stats& stats, double k1, double b) {
  std::unordered_map<std::string_view, std::size_t> tf;
  for (const auto& t : doc) ++tf[t];
  const double len_norm = 1.0 - b + b * static_cast<double>(doc.size()) / stats.avg_doc_len;
  // std::map keeps the summation order independent of hashing
  const std::map<std::string_view, int> terms = [&] {
    std::map<std::string_view, int> m;
    for (const auto& t : query) m[t] = 1;
    return m;
  }();
  double score = 0.0;
  for (const auto& [term, unused] : terms) {
    const auto it = tf.find(term);
    if (it == tf.end()) continue;
    const double f = static_cast<double>(it->second);
    score += stats.idf(std::string(term)) * f * (k1 + 1.0) / (f + k1 * len_norm);
  }
  return score;
}

}  // namespace

double bm25(const std::vector<std::string>& query, const std::vector<std::string>& doc, const Bm25Stats& stats) {
  return bm25_with(query, doc, stats, stats.k1, stats.b);
}

std::int64_t BagOfWords::total() const noexcept {
  return std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
}

BagOfWords make_bag(const std::vector<std::string>& tokens, const WordVectorTable& table) {
  std::map<std::string, std::int64_t> counts;
  for (const auto& t : tokens) {
    if (table.contains(t)) ++counts[t];
  }
  BagOfWords bag;
  for (auto& [w, c] : counts) {
    bag.vectors.push_back(table.lookup(w));
    bag.words.push_back(w);
    bag.counts.push_back(c);
  }
  return bag;
}

double wmd(const BagOfWords& x, const BagOfWords& y) {
  require_embeddable(x, y);
  const std::int64_t xt = x.total();
  const std::int64_t yt = y.total();
  std::vector<std::int64_t> supply(x.counts.size()), demand(y.counts.size());
  for (std::size_t i = 0; i < supply.size(); ++i) supply[i] = x.counts[i] * yt;
  for (std::size_t j = 0; j < demand.size(); ++j) demand[j] = y.counts[j] * xt;
  const auto cost = ground_costs(x, y);
  const auto plan = solve_transport(supply, demand, cost);
  return plan.cost / (static_cast<double>(xt) * static_cast<double>(yt));
}

double wmd(const Sentence& x, const Sentence& y, const WordVectorTable& table) {
  return wmd(make_bag(content_tokens(x), table), make_bag(content_tokens(y), table));
}

double rwmd(const BagOfWords& x, const BagOfWords& y) {
  require_embeddable(x, y);
  const auto cost = ground_costs(x, y);
  const std::size_t n = x.words.size(), m = y.words.size();
  std::vector<double> row_min(n, INFINITY), col_min(m, INFINITY);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      row_min[i] = std::min(row_min[i], cost[i * m + j]);
      col_min[j] = std::min(col_min[j], cost[i * m + j]);
    }
  }
  double lx = 0.0, ly = 0.0;
  for (std::size_t i = 0; i < n; ++i) lx += static_cast<double>(x.counts[i]) * row_min[i];
  for (std::size_t j = 0; j < m; ++j) ly += static_cast<double>(y.counts[j]) * col_min[j];
  return std::max(lx / static_cast<double>(x.total()), ly / static_cast<double>(y.total()));
}

double rwmd(const Sentence& x, const Sentence& y, const WordVectorTable& table) {
  return rwmd(make_bag(content_tokens(x), table), make_bag(content_tokens(y), table));
}

double to_similarity(double distance) {
  if (!(distance >= 0.0)) throw InvalidArgument("distance must be non-negative");
  return 1.0 / (1.0 + distance);
}

std::string_view to_string(ScorerKind kind) {
  switch (kind) {
    case ScorerKind::kCosine: return "cosine";
    case ScorerKind::kOverlap: return "overlap";
    case ScorerKind::kBm25: return "bm25";
    case ScorerKind::kWmd: return "wmd";
    case ScorerKind::kRwmd: return "rwmd";
  }
  return "?";
}

ScorerKind parse_scorer_kind(std::string_view name) {
  for (auto k : {ScorerKind::kCosine, ScorerKind::kOverlap, ScorerKind::kBm25, ScorerKind::kWmd,
                 ScorerKind::kRwmd}) {
    if (to_string(k) == name) return k;
  }
  throw InvalidArgument("unknown scorer '" + std::string(name) + "'");
}

Scorer Scorer::parse(std::string_view name, const std::map<std::string, std::string>& params) {
  ScorerParams p;
  for (const auto& [k, v] : params) {
    if (k == "k1") {
      p.k1 = parse_double(k, v);
    } else if (k == "b") {
      p.b = parse_double(k, v);
    } else {
      throw InvalidArgument("unknown scorer parameter '" + k + "'");
    }
  }
  return Scorer(parse_scorer_kind(name), p);
}

PreparedUnit Scorer::prepare(std::string unit_id, const std::vector<Token>& tokens, Side side,
                             const ScoringResources& res) const {
  PreparedUnit u;
  switch (kind_) {
    case ScorerKind::kCosine: {
      const auto* m = side == Side::kSource ? res.source_embeddings : res.target_embeddings;
      if (!m) throw InvalidArgument("cosine scorer needs embeddings");
      u.embedding = m->at(unit_id);
      break;
    }
    case ScorerKind::kWmd:
    case ScorerKind::kRwmd:
      if (!res.words) throw InvalidArgument(std::string(to_string(kind_)) + " scorer needs word vectors");
      u.content = content_tokens(tokens);
      u.bag = make_bag(u.content, *res.words);
      break;
    case ScorerKind::kOverlap:
    case ScorerKind::kBm25:
      u.content = content_tokens(tokens);
      break;
  }
  u.unit_id = std::move(unit_id);
  return u;
}

double Scorer::score(const PreparedUnit& source, const PreparedUnit& target, const ScoringResources& res) const {
  switch (kind_) {
    case ScorerKind::kCosine:
      return cosine(source.embedding, target.embedding);
    case ScorerKind::kOverlap:
      return unigram_overlap(source.content, target.content);
    case ScorerKind::kBm25: {
      if (!res.bm25) throw InvalidArgument("bm25 scorer needs corpus statistics");
      return bm25_with(source.content, target.content, *res.bm25, params_.k1, params_.b);
    }
    case ScorerKind::kWmd:
      if (source.bag.empty() || target.bag.empty()) return 0.0;
      return to_similarity(wmd(source.bag, target.bag));
    case ScorerKind::kRwmd:
      if (source.bag.empty() || target.bag.empty()) return 0.0;
      return to_similarity(rwmd(source.bag, target.bag));
  }
  return 0.0;
}

}  // namespace lha
