#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lha/corpus.hpp"
#include "lha/embeddings.hpp"

namespace lha {

/// dot(u,v)/(|u||v|); 0 if either vector is zero. Throws on dim mismatch.
double cosine(std::span<const float> u, std::span<const float> v);

/// |set(y) & set(x)| / |set(y)| over unique tokens; 0 when y is empty.
double unigram_overlap(const std::vector<std::string>& x, const std::vector<std::string>& y);

struct Bm25Stats {
  std::size_t doc_count = 0;
  std::unordered_map<std::string, std::size_t> doc_freq;
  double avg_doc_len = 1.0;
  double k1 = 1.2;
  double b = 0.75;

  /// Statistics over a collection of content-token multisets.
  static Bm25Stats build(const std::vector<std::vector<std::string>>& docs, double k1 = 1.2,
                         double b = 0.75);

  double idf(const std::string& term) const;
};

/// Okapi BM25 of `doc` for the unique terms of `query`.
double bm25(const std::vector<std::string>& query, const std::vector<std::string>& doc,
            const Bm25Stats& stats);

/// Normalized bag of in-vocabulary words: unique tokens with integer counts.
struct BagOfWords {
  std::vector<std::string> words;
  std::vector<std::int64_t> counts;
  std::vector<std::span<const float>> vectors;

  std::int64_t total() const noexcept;
  bool empty() const noexcept { return words.empty(); }
};

/// Bag over the in-vocabulary tokens of `tokens` (already content-filtered).
BagOfWords make_bag(const std::vector<std::string>& tokens, const WordVectorTable& table);

/// Exact Word Mover's Distance with Euclidean ground cost.
/// Throws InvalidArgument("unembeddable sentence") if either bag is empty.
double wmd(const BagOfWords& x, const BagOfWords& y);
double wmd(const Sentence& x, const Sentence& y, const WordVectorTable& table);

/// Relaxed WMD: max of the two one-sided nearest-neighbour transport costs.
double rwmd(const BagOfWords& x, const BagOfWords& y);
double rwmd(const Sentence& x, const Sentence& y, const WordVectorTable& table);

/// 1/(1+d). Throws on negative or NaN distance.
double to_similarity(double distance);

enum class ScorerKind { kCosine, kOverlap, kBm25, kWmd, kRwmd };

std::string_view to_string(ScorerKind kind);
ScorerKind parse_scorer_kind(std::string_view name);

struct ScorerParams {
  double k1 = 1.2;
  double b = 0.75;
};

/// What a scorer needs, pre-extracted once per unit.
struct PreparedUnit {
  std::string unit_id;
  std::vector<std::string> content;
  BagOfWords bag;
  std::span<const float> embedding;
};

struct ScoringResources {
  const WordVectorTable* words = nullptr;
  const Bm25Stats* bm25 = nullptr;
  /// Embedding rows looked up by unit id (cosine only).
  const EmbeddingMatrix* source_embeddings = nullptr;
  const EmbeddingMatrix* target_embeddings = nullptr;
};

enum class Side { kSource, kTarget };

/// Uniform similarity contract over all text scorers; distances are mapped
/// through to_similarity. Unembeddable units score 0.
class Scorer {
 public:
  explicit Scorer(ScorerKind kind = ScorerKind::kCosine, ScorerParams params = {})
      : kind_(kind), params_(params) {}

  /// `name` is one of cosine, overlap, bm25, wmd, rwmd; params as "k1"/"b".
  static Scorer parse(std::string_view name, const std::map<std::string, std::string>& params = {});

  ScorerKind kind() const noexcept { return kind_; }
  const ScorerParams& params() const noexcept { return params_; }
  bool needs_embeddings() const noexcept { return kind_ == ScorerKind::kCosine; }
  bool needs_word_vectors() const noexcept { return kind_ == ScorerKind::kWmd || kind_ == ScorerKind::kRwmd; }
  bool needs_bm25() const noexcept { return kind_ == ScorerKind::kBm25; }

  PreparedUnit prepare(std::string unit_id, const std::vector<Token>& tokens, Side side,
                       const ScoringResources& res) const;
  PreparedUnit prepare(const Sentence& s, Side side, const ScoringResources& res) const {
    return prepare(s.unit_id(), s.tokens, side, res);
  }

  double score(const PreparedUnit& source, const PreparedUnit& target, const ScoringResources& res) const;

 private:
  ScorerKind kind_;
  ScorerParams params_;
};

}  // namespace lha
