#include "lha/doc_align.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "lha/error.hpp"
#include "lha/parallel.hpp"

namespace lha {

namespace {

template <typename Search>
std::vector<DocPair> align_with(const EmbeddingMatrix& sources, std::size_t k, double theta_d,
                                unsigned threads, Search&& search) {
  std::vector<std::vector<DocPair>> per_source(sources.rows());
  parallel_for(sources.rows(), threads, [&](std::size_t r) {
    if (sources.is_zero_row(r)) return;
    for (auto& n : search(sources.row(r), k)) {
      if (n.similarity < theta_d) continue;
      per_source[r].push_back({sources.unit_id(r), std::move(n.unit_id), n.similarity});
    }
  });
  std::vector<DocPair> out;
  for (auto& v : per_source) {
    for (auto& p : v) out.push_back(std::move(p));
  }
  return out;
}

}  // namespace

std::vector<DocPair> align_documents(const EmbeddingMatrix& sources, const AnnIndex& target_index,
                                     std::size_t k, double theta_d, unsigned threads) {
  if (sources.dim() != target_index.dim()) {
    throw InvalidArgument("source embeddings have dim " + std::to_string(sources.dim()) +
                          " but the target index has dim " + std::to_string(target_index.dim()));
  }
  if (k == 0) throw InvalidArgument("K must be positive");
  return align_with(sources, k, theta_d, threads,
                    [&](std::span<const float> v, std::size_t kk) { return target_index.query(v, kk); });
}

std::vector<DocPair> align_documents_exact(const EmbeddingMatrix& sources, const EmbeddingMatrix& targets,
                                           std::size_t k, double theta_d, unsigned threads) {
  if (sources.dim() != targets.dim()) {
    throw InvalidArgument("source embeddings have dim " + std::to_string(sources.dim()) +
                          " but target embeddings have dim " + std::to_string(targets.dim()));
  }
  if (k == 0) throw InvalidArgument("K must be positive");
  return align_with(sources, k, theta_d, threads,
                    [&](std::span<const float> v, std::size_t kk) { return exact_knn(targets, v, kk); });
}

void write_doc_pairs(std::ostream& out, const std::vector<DocPair>& pairs) {
  for (const auto& p : pairs) {
    out << p.source_id << '\t' << p.target_id << '\t' << std::setprecision(17) << p.similarity << '\n';
  }
}

void save_doc_pairs(const std::filesystem::path& path, const std::vector<DocPair>& pairs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write document pairs: " + path.string());
  write_doc_pairs(out, pairs);
}

std::vector<DocPair> read_doc_pairs(std::istream& in) {
  std::vector<DocPair> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) throw ParseError("expected 3 tab-separated fields", line_no);
    DocPair p{line.substr(0, t1), line.substr(t1 + 1, t2 - t1 - 1), 0.0};
    try {
      std::size_t used = 0;
      const auto field = line.substr(t2 + 1);
      p.similarity = std::stod(field, &used);
      if (used != field.size()) throw std::invalid_argument(field);
    } catch (const std::exception&) {
      throw ParseError("unparsable similarity", line_no);
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<DocPair> load_doc_pairs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open document pairs: " + path.string());
  return read_doc_pairs(in);
}

}  // namespace lha
