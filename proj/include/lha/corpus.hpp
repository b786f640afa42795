#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace lha {

struct Token {
  std::string surface;
  std::string normalized;
  bool is_punct = false;
  bool is_number = false;
  bool is_stopword = false;

  bool is_content() const noexcept { return !is_punct && !is_number && !is_stopword; }

  friend bool operator==(const Token&, const Token&) = default;
};

struct Sentence {
  std::string doc_id;
  std::uint32_t ordinal = 0;
  std::string text;
  std::vector<Token> tokens;

  /// "doc_id#ordinal", the unit id used by sentence-level embedding matrices.
  std::string unit_id() const;

  friend bool operator==(const Sentence&, const Sentence&) = default;
};

struct Document {
  std::string doc_id;
  std::string dataset_tag;
  std::optional<std::string> title;
  std::vector<Sentence> sentences;

  std::size_t token_count() const noexcept;

  friend bool operator==(const Document&, const Document&) = default;
};

std::string sentence_unit_id(std::string_view doc_id, std::uint32_t ordinal);

/// Lowercased set of stopwords. The default set is a fixed English list.
class StopwordList {
 public:
  StopwordList() = default;
  explicit StopwordList(std::unordered_set<std::string> words) : words_(std::move(words)) {}

  static const StopwordList& english();
  /// One token per line; blank lines and lines starting with '#' are ignored.
  static StopwordList load(const std::filesystem::path& path);

  bool contains(std::string_view normalized) const;
  std::size_t size() const noexcept { return words_.size(); }

 private:
  std::unordered_set<std::string> words_;
};

/// Unicode-aware lowercasing of a UTF-8 string. Invalid bytes pass through.
std::string to_lower(std::string_view text);

/// Collapse whitespace runs to one space, trim, and lowercase.
std::string normalize_text(std::string_view text);

/// Whitespace + punctuation tokenizer. Leading and trailing punctuation of a
/// whitespace chunk are peeled off as single-character tokens; word-internal
/// punctuation ("don't", "3.5", "co-founder") stays attached.
class Tokenizer {
 public:
  explicit Tokenizer(const StopwordList& stopwords = StopwordList::english())
      : stopwords_(&stopwords) {}

  std::vector<Token> tokenize(std::string_view text) const;
  Token make_token(std::string surface) const;

 private:
  const StopwordList* stopwords_;
};

/// Rule-based splitter on terminal punctuation with an abbreviation guard.
std::vector<std::string> split_sentences(std::string_view text);

/// Normalized content tokens (no punctuation, numbers, stopwords), multiplicity kept.
std::vector<std::string> content_tokens(const Sentence& sentence);
std::vector<std::string> content_tokens(const std::vector<Token>& tokens);

enum class CorpusSchema {
  kAuto,           // accept either "sentences" or "text"
  kPreSplit,       // require "sentences"
  kRawText,        // require "text"
};

/// Streaming JSONL reader: one document per line, fields {id, title?, text? | sentences?}.
/// Only the set of seen ids is retained between records.
class CorpusReader {
 public:
  CorpusReader(const std::filesystem::path& path, std::string dataset_tag,
               const Tokenizer& tokenizer, CorpusSchema schema = CorpusSchema::kAuto);
  CorpusReader(std::istream& in, std::string dataset_tag, const Tokenizer& tokenizer,
               CorpusSchema schema = CorpusSchema::kAuto);

  std::optional<Document> next();
  std::size_t line() const noexcept { return line_; }

 private:
  Document parse_record(std::string_view line);

  std::unique_ptr<std::ifstream> owned_;
  std::istream* in_;
  std::string dataset_tag_;
  const Tokenizer* tokenizer_;
  CorpusSchema schema_;
  std::size_t line_ = 0;
  std::unordered_set<std::string> seen_;
};

/// A fully materialized corpus with id lookup.
class Corpus {
 public:
  Corpus() = default;
  explicit Corpus(std::vector<Document> docs);

  static Corpus load(const std::filesystem::path& path, const std::string& dataset_tag,
                     const Tokenizer& tokenizer, CorpusSchema schema = CorpusSchema::kAuto);

  const std::vector<Document>& documents() const noexcept { return docs_; }
  std::size_t size() const noexcept { return docs_.size(); }
  bool empty() const noexcept { return docs_.empty(); }
  const Document& operator[](std::size_t i) const { return docs_[i]; }

  const Document* find(std::string_view doc_id) const;
  const Document& at(std::string_view doc_id) const;
  std::size_t sentence_count() const noexcept;

 private:
  std::vector<Document> docs_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

/// Write one document as a JSONL record in pre-split form.
void write_document(std::ostream& out, const Document& doc);
void save_corpus(const std::filesystem::path& path, const std::vector<Document>& docs);

}  // namespace lha
