#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lha/corpus.hpp"

namespace lha {

/// Lowercased token -> dense vector lookup loaded from a textual word-vector file.
class WordVectorTable {
 public:
  WordVectorTable() = default;
  explicit WordVectorTable(std::size_t dim) : dim_(dim) {}

  /// Inserts unless the normalized token is already present. Returns true if inserted.
  bool insert(std::string_view token, std::span<const float> vec);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return index_.size(); }
  bool contains(std::string_view normalized) const;
  /// Empty span for out-of-vocabulary tokens.
  std::span<const float> lookup(std::string_view normalized) const;

 private:
  std::size_t dim_ = 0;
  std::vector<float> data_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Header "count dim", then "token v1 ... v_dim" lines. Tokens are lowercased,
/// first occurrence wins.
WordVectorTable load_word_vectors(const std::filesystem::path& path);
WordVectorTable parse_word_vectors(std::istream& in);

/// Mean of in-vocabulary token vectors; zero vector when every token is OOV.
std::vector<float> embed_avg(std::span<const Token> tokens, const WordVectorTable& table);

/// Dense, id-aligned rows (float32, row-major).
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  EmbeddingMatrix(std::size_t dim, bool unit_normalized = false)
      : dim_(dim), unit_normalized_(unit_normalized) {}

  void append(std::string unit_id, std::span<const float> row);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t rows() const noexcept { return ids_.size(); }
  bool empty() const noexcept { return ids_.empty(); }
  bool unit_normalized() const noexcept { return unit_normalized_; }
  void set_unit_normalized(bool v) noexcept { unit_normalized_ = v; }

  const std::vector<std::string>& unit_ids() const noexcept { return ids_; }
  const std::string& unit_id(std::size_t row) const { return ids_[row]; }
  std::span<const float> row(std::size_t r) const { return {data_.data() + r * dim_, dim_}; }
  std::span<float> row(std::size_t r) { return {data_.data() + r * dim_, dim_}; }
  const std::vector<float>& data() const noexcept { return data_; }

  std::optional<std::size_t> find(std::string_view unit_id) const;
  /// Row for unit_id; throws naming the id when absent.
  std::span<const float> at(std::string_view unit_id) const;
  bool is_zero_row(std::size_t r) const;

  /// L2-normalize every non-zero row. No-op when already flagged normalized.
  void normalize();

  /// Copy of the rows named by ids, in that order.
  EmbeddingMatrix select(const std::vector<std::string>& ids) const;

  friend bool operator==(const EmbeddingMatrix& a, const EmbeddingMatrix& b) {
    return a.dim_ == b.dim_ && a.unit_normalized_ == b.unit_normalized_ && a.ids_ == b.ids_ &&
           a.data_ == b.data_;
  }

 private:
  std::size_t dim_ = 0;
  bool unit_normalized_ = false;
  std::vector<std::string> ids_;
  std::vector<float> data_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// L2-normalize in place; zero vectors are left untouched.
void normalize_vector(std::span<float> v);

enum class EmbeddingLevel { kDocument, kSentence };

/// Built-in average-word-vector embedding, or passthrough of a precomputed matrix.
class EmbeddingStrategy {
 public:
  static EmbeddingStrategy average(const WordVectorTable& table, bool content_only = false);
  static EmbeddingStrategy precomputed(EmbeddingMatrix matrix);
  /// "avg" or "precomputed:<path>"; avg needs a table.
  static EmbeddingStrategy parse(std::string_view spec, const WordVectorTable* table);

  bool is_precomputed() const noexcept { return precomputed_.has_value(); }
  std::size_t dim() const noexcept;
  const WordVectorTable* table() const noexcept { return table_; }

  /// Embedding of one unit: the precomputed row looked up by unit_id, or Avg over tokens.
  std::vector<float> embed(std::string_view unit_id, std::span<const Token> tokens) const;

 private:
  const WordVectorTable* table_ = nullptr;
  bool content_only_ = false;
  std::optional<EmbeddingMatrix> precomputed_;
};

/// One row per unit in corpus order. Document rows under Avg use the concatenated
/// token stream of the document's sentences. Sentence ids are "doc#ordinal".
EmbeddingMatrix embed_corpus(const std::vector<Document>& docs, EmbeddingLevel level,
                             const EmbeddingStrategy& strategy, bool normalize);

/// Binary "LHAE" format: magic, u16 version, u8 flags (bit0 = unit_normalized),
/// u64 count, u32 dim, id table (u32 length + UTF-8), little-endian f32 rows.
void save_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& path);
EmbeddingMatrix load_embeddings(const std::filesystem::path& path);
void write_embeddings(const EmbeddingMatrix& m, std::ostream& out);
EmbeddingMatrix read_embeddings(std::istream& in);

}  // namespace lha
