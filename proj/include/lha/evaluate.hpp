#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lha/ann_index.hpp"
#include "lha/corpus.hpp"
#include "lha/embeddings.hpp"
#include "lha/metrics.hpp"
#include "lha/sent_align.hpp"

namespace lha {

enum class GoldLabel { kGood, kGoodPartial, kPartial, kNonvalid };

std::string_view to_string(GoldLabel label);
/// Accepts good, good_partial, partial, nonvalid (and the spellings
/// "good partial", "good-partial", "non-valid", "bad").
GoldLabel parse_gold_label(std::string_view text);

struct GoldPair {
  std::string source_key;  // sentence id "doc#ordinal"
  std::string target_key;
  GoldLabel label = GoldLabel::kNonvalid;
};

/// JSONL {source_key, target_key, label}.
std::vector<GoldPair> load_gold_pairs(const std::filesystem::path& path);
void save_gold_pairs(const std::filesystem::path& path, const std::vector<GoldPair>& pairs);

using PairKey = std::pair<std::string, std::string>;

struct ScoredCandidate {
  PairKey pair;
  double similarity = 0.0;
};

struct EvalReport {
  std::string task;
  double f1_max = 0.0;
  double precision_at_max = 0.0;
  double recall_at_max = 0.0;  // TP%
  double best_threshold = 0.0; // +inf when nothing was scored
  std::optional<double> best_doc_threshold;
  std::size_t positives_total = 0;
  std::size_t retrieved_at_max = 0;
  std::size_t true_positives_at_max = 0;
  std::size_t candidates = 0;
  std::size_t units = 0;
  double seconds = 0.0;
  double throughput_units_per_sec = 0.0;
  std::optional<std::uint64_t> seed;

  nlohmann::json to_json() const;
  std::string to_table() const;
};

/// F1 at every distinct similarity cut (pairs >= cut predicted positive, gold
/// pairs never scored count as misses); maximum kept, ties toward the higher cut.
EvalReport f1max_sweep(std::vector<ScoredCandidate> scored, const std::set<PairKey>& gold_positive);

/// Annotated alignment data: gold article pairs, their labelled sentence pairs,
/// and pools of noise articles for each side.
///
/// Directory layout:
///   gold_source.jsonl, gold_target.jsonl   pre-split article pairs
///   gold_pairs.jsonl                       {source_key, target_key, label}
///   noise_source.jsonl, noise_target.jsonl noise pools (document/joint tasks)
struct EvalDataset {
  Corpus gold_sources;
  Corpus gold_targets;
  std::vector<GoldPair> gold;
  std::vector<PairKey> gold_doc_pairs;  // derived from the gold sentence keys
  std::vector<Document> noise_sources;
  std::vector<Document> noise_targets;

  static EvalDataset load(const std::filesystem::path& dir, const Tokenizer& tokenizer, bool require_noise);

  std::set<PairKey> positives(bool include_good_partial = false) const;
  std::set<PairKey> doc_positives() const;
};

/// Pick `count` documents per side from the noise pools with a seeded
/// Fisher-Yates shuffle (splitmix64 stream); appended after the gold documents.
std::pair<Corpus, Corpus> with_noise(const EvalDataset& data, std::size_t count, std::uint64_t seed);

/// Builds the similarity matrix for one document pair.
using MatrixFn = std::function<SimMatrix(const Document&, const Document&)>;

struct EvalConfig {
  Scorer scorer;                       // sentence-level (or document-level) scorer
  std::size_t k = 1;                   // neighbours per unit; 0 scores every pair
  const WordVectorTable* words = nullptr;
  const EmbeddingStrategy* sentence_embedder = nullptr;
  const EmbeddingStrategy* document_embedder = nullptr;
  bool normalize = true;
  bool good_partial_positive = false;
  std::size_t noise_per_side = 1000;
  std::uint64_t seed = 1;
  bool use_index = false;
  AnnParams index;
  /// When > 0, the top-N embedding neighbours per unit are re-scored with
  /// `rescorer` before K-NN extraction.
  std::size_t rescore_top = 0;
  std::optional<Scorer> rescorer;
  unsigned threads = 1;
};

enum class JointMode { kLha, kGlobal };

/// Sentence pairs inside the gold article pairs only.
EvalReport eval_sentence_alignment(const EvalDataset& data, const EvalConfig& config);
EvalReport eval_sentence_alignment(const EvalDataset& data, const MatrixFn& matrix, std::size_t k,
                                   bool good_partial_positive = false);

/// Gold article pairs hidden among noise articles on both sides.
EvalReport eval_document_alignment(const EvalDataset& data, const EvalConfig& config);

/// Sentence pairs retrieved from the noisy collection, either through document
/// alignment first (lha) or directly across all sentences (global).
EvalReport eval_joint(const EvalDataset& data, JointMode mode, const EvalConfig& config);

/// Adapter from a pair-labelled TSV (article<TAB>label<TAB>source sentence<TAB>target
/// sentence) to the gold_* files above. Sentences become ordered documents per article.
void convert_labelled_tsv(const std::filesystem::path& tsv, const std::filesystem::path& out_dir);

}  // namespace lha
