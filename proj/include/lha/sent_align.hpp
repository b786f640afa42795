#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <unordered_set>
#include <vector>

#include "lha/corpus.hpp"
#include "lha/doc_align.hpp"
#include "lha/metrics.hpp"

namespace lha {

/// Inter-sentence similarities of one document pair, row-major sources x targets.
struct SimMatrix {
  std::vector<std::string> source_ids;
  std::vector<std::string> target_ids;
  std::vector<double> values;

  std::size_t rows() const noexcept { return source_ids.size(); }
  std::size_t cols() const noexcept { return target_ids.size(); }
  double at(std::size_t i, std::size_t j) const { return values[i * cols() + j]; }
};

SimMatrix sentence_sim_matrix(const Document& source, const Document& target, const Scorer& scorer,
                              const ScoringResources& resources);

struct ScoredPair {
  std::uint32_t source = 0;
  std::uint32_t target = 0;
  double similarity = 0.0;

  friend bool operator==(const ScoredPair&, const ScoredPair&) = default;
};

/// Union of each row's top-K columns and each column's top-K rows, filtered to
/// similarity >= theta_s. Ties inside a top-K list go to the lower index.
/// Sorted by (source, target).
std::vector<ScoredPair> extract_nn_pairs(const SimMatrix& p, std::size_t k, double theta_s);

struct AlignedGroup {
  std::string source_doc;
  std::string target_doc;
  std::vector<std::uint32_t> source_ordinals;  // ascending
  std::vector<std::uint32_t> target_ordinals;  // ascending
  double score = 0.0;                          // max member-pair similarity

  std::vector<std::string> source_ids() const;
  std::vector<std::string> target_ids() const;

  friend bool operator==(const AlignedGroup&, const AlignedGroup&) = default;
};

/// Connected components of the bipartite pair graph, ordered by smallest
/// source ordinal, then smallest target ordinal.
std::vector<AlignedGroup> merge_groups(const std::vector<ScoredPair>& pairs, const std::string& source_doc = {},
                                       const std::string& target_doc = {});

enum class FilterStage { kGroup, kPair };

struct FilterPolicy {
  double min_overlap = 0.4;
  double max_len_ratio = 1.5;
  std::unordered_set<std::string> exclusion_set;
  FilterStage stage = FilterStage::kGroup;

  /// Lowercased, whitespace-collapsed "source\ttarget".
  static std::string exclusion_key(std::string_view source_text, std::string_view target_text);
  /// TSV lines source_text<TAB>target_text.
  void load_exclusions(const std::filesystem::path& path);
  void validate() const;

  /// All three predicates on already-tokenized sides.
  bool accepts(const std::vector<Token>& source_tokens, const std::vector<Token>& target_tokens,
               std::string_view source_text, std::string_view target_text) const;
  /// Re-check from text alone (tokenizes both sides).
  bool accepts_text(std::string_view source_text, std::string_view target_text, const Tokenizer& tokenizer) const;
};

/// Side text in document order joined by single spaces.
std::string side_text(const Document& doc, const std::vector<std::uint32_t>& ordinals);

std::vector<AlignedGroup> filter_groups(const std::vector<AlignedGroup>& groups, const FilterPolicy& policy,
                                        const Document& source, const Document& target);

struct SentAlignConfig {
  std::size_t k = 5;
  double theta_s = 0.65;
  Scorer scorer;
  FilterPolicy filter;
  bool apply_filters = true;
  unsigned threads = 1;
};

struct GroupRecord {
  AlignedGroup group;
  std::string source_text;
  std::string target_text;
};

struct SentAlignStats {
  std::size_t doc_pairs = 0;
  std::size_t failed_doc_pairs = 0;
  std::size_t nn_pairs = 0;
  std::size_t groups_merged = 0;
  std::size_t groups_filtered = 0;
  std::size_t duplicates_removed = 0;
};

/// Similarity matrix, K-NN extraction, merge and filtering for every document
/// pair, then global de-duplication on (source text, target text). A failing
/// document pair is logged and skipped.
std::vector<GroupRecord> align_sentences(const std::vector<DocPair>& doc_pairs, const Corpus& sources,
                                         const Corpus& targets, const SentAlignConfig& config,
                                         const ScoringResources& resources, SentAlignStats* stats = nullptr);

/// JSONL {source_doc, target_doc, source_ids, target_ids, source_text, target_text, score}.
void write_group_jsonl(std::ostream& out, const GroupRecord& rec);
void save_groups_jsonl(const std::filesystem::path& path, const std::vector<GroupRecord>& recs);
std::vector<GroupRecord> load_groups_jsonl(const std::filesystem::path& path);
/// source_text<TAB>target_text
void save_groups_tsv(const std::filesystem::path& path, const std::vector<GroupRecord>& recs);

}  // namespace lha
