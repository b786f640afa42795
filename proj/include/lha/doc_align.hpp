#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "lha/ann_index.hpp"
#include "lha/embeddings.hpp"

namespace lha {

struct DocPair {
  std::string source_id;
  std::string target_id;
  double similarity = 0.0;

  friend bool operator==(const DocPair&, const DocPair&) = default;
};

/// For every source row: K nearest target documents, minus those below theta_d.
/// Output is grouped by source in matrix order, similarity descending, ties by
/// target id. Zero source rows produce no pairs.
std::vector<DocPair> align_documents(const EmbeddingMatrix& sources, const AnnIndex& target_index,
                                     std::size_t k, double theta_d, unsigned threads = 1);

/// Same contract with an exhaustive scan of `targets` instead of an index.
std::vector<DocPair> align_documents_exact(const EmbeddingMatrix& sources, const EmbeddingMatrix& targets,
                                           std::size_t k, double theta_d, unsigned threads = 1);

/// TSV: source_id<TAB>target_id<TAB>similarity (17 significant digits).
void write_doc_pairs(std::ostream& out, const std::vector<DocPair>& pairs);
void save_doc_pairs(const std::filesystem::path& path, const std::vector<DocPair>& pairs);
std::vector<DocPair> read_doc_pairs(std::istream& in);
std::vector<DocPair> load_doc_pairs(const std::filesystem::path& path);

}  // namespace lha
