#include "lha/embeddings.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "lha/binary_io.hpp"
#include "lha/error.hpp"

namespace lha {

namespace {

constexpr char kMagic[4] = {'L', 'H', 'A', 'E'};
constexpr std::uint16_t kVersion = 1;

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    if (i >= line.size()) break;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

template <typename T>
T parse_number(std::string_view field, std::size_t line_no, const char* what) {
  T v{};
  const auto* end = field.data() + field.size();
  const auto [p, ec] = std::from_chars(field.data(), end, v);
  if (ec != std::errc() || p != end) {
    throw ParseError(std::string("unparsable ") + what + " '" + std::string(field) + "'", line_no);
  }
  return v;
}

}  // namespace

bool WordVectorTable::insert(std::string_view token, std::span<const float> vec) {
  if (vec.size() != dim_) {
    throw InvalidArgument("word vector has " + std::to_string(vec.size()) + " components, table dim " +
                          std::to_string(dim_));
  }
  auto key = to_lower(token);
  if (index_.count(key)) return false;
  index_.emplace(std::move(key), data_.size());
  data_.insert(data_.end(), vec.begin(), vec.end());
  return true;
}

bool WordVectorTable::contains(std::string_view normalized) const {
  return index_.find(std::string(normalized)) != index_.end();
}

std::span<const float> WordVectorTable::lookup(std::string_view normalized) const {
  const auto it = index_.find(std::string(normalized));
  if (it == index_.end()) return {};
  return {data_.data() + it->second, dim_};
}

WordVectorTable parse_word_vectors(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty word-vector file", 1);
  const auto header = split_fields(line);
  if (header.size() != 2) throw ParseError("header must be \"count dim\"", 1);
  parse_number<std::size_t>(header[0], 1, "count");
  const auto dim = parse_number<std::size_t>(header[1], 1, "dim");
  if (dim == 0) throw ParseError("dimension must be positive", 1);

  WordVectorTable table(dim);
  std::vector<float> vec(dim);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = split_fields(line);
    if (fields.empty()) continue;
    if (fields.size() - 1 != dim) {
      throw ParseError("expected " + std::to_string(dim) + " components, got " +
                           std::to_string(fields.size() - 1),
                       line_no);
    }
    for (std::size_t k = 0; k < dim; ++k) {
      vec[k] = parse_number<float>(fields[k + 1], line_no, "float");
      if (!std::isfinite(vec[k])) throw ParseError("non-finite vector component", line_no);
    }
    table.insert(fields[0], vec);
  }
  return table;
}

WordVectorTable load_word_vectors(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open word vectors: " + path.string());
  return parse_word_vectors(in);
}

std::vector<float> embed_avg(std::span<const Token> tokens, const WordVectorTable& table) {
  std::vector<double> acc(table.dim(), 0.0);
  std::size_t n = 0;
  for (const auto& t : tokens) {
    const auto v = table.lookup(t.normalized);
    if (v.empty()) continue;
    for (std::size_t k = 0; k < v.size(); ++k) acc[k] += v[k];
    ++n;
  }
  std::vector<float> out(table.dim(), 0.0f);
  if (n == 0) return out;
  for (std::size_t k = 0; k < acc.size(); ++k) out[k] = static_cast<float>(acc[k] / static_cast<double>(n));
  return out;
}

void normalize_vector(std::span<float> v) {
  double sq = 0.0;
  for (float x : v) sq += static_cast<double>(x) * x;
  if (sq == 0.0) return;
  const double inv = 1.0 / std::sqrt(sq);
  for (auto& x : v) x = static_cast<float>(x * inv);
}

void EmbeddingMatrix::append(std::string unit_id, std::span<const float> row) {
  if (row.size() != dim_) {
    throw InvalidArgument("row for '" + unit_id + "' has " + std::to_string(row.size()) +
                          " components, matrix dim " + std::to_string(dim_));
  }
  if (!index_.emplace(unit_id, ids_.size()).second) {
    throw InvalidArgument("duplicate unit id '" + unit_id + "'");
  }
  ids_.push_back(std::move(unit_id));
  data_.insert(data_.end(), row.begin(), row.end());
}

std::optional<std::size_t> EmbeddingMatrix::find(std::string_view unit_id) const {
  const auto it = index_.find(std::string(unit_id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::span<const float> EmbeddingMatrix::at(std::string_view unit_id) const {
  if (const auto r = find(unit_id)) return row(*r);
  throw Error("embedding matrix has no row for unit '" + std::string(unit_id) + "'");
}

bool EmbeddingMatrix::is_zero_row(std::size_t r) const {
  for (float x : row(r)) {
    if (x != 0.0f) return false;
  }
  return true;
}

void EmbeddingMatrix::normalize() {
  if (unit_normalized_) return;
  for (std::size_t r = 0; r < rows(); ++r) normalize_vector(row(r));
  unit_normalized_ = true;
}

EmbeddingMatrix EmbeddingMatrix::select(const std::vector<std::string>& ids) const {
  EmbeddingMatrix out(dim_, unit_normalized_);
  for (const auto& id : ids) out.append(id, at(id));
  return out;
}

EmbeddingStrategy EmbeddingStrategy::average(const WordVectorTable& table, bool content_only) {
  EmbeddingStrategy s;
  s.table_ = &table;
  s.content_only_ = content_only;
  return s;
}

EmbeddingStrategy EmbeddingStrategy::precomputed(EmbeddingMatrix matrix) {
  EmbeddingStrategy s;
  s.precomputed_ = std::move(matrix);
  return s;
}

EmbeddingStrategy EmbeddingStrategy::parse(std::string_view spec, const WordVectorTable* table) {
  constexpr std::string_view kPre = "precomputed:";
  if (spec == "avg") {
    if (!table) throw InvalidArgument("strategy 'avg' requires word vectors");
    return average(*table);
  }
  if (spec.substr(0, kPre.size()) == kPre) {
    return precomputed(load_embeddings(std::filesystem::path(std::string(spec.substr(kPre.size())))));
  }
  throw InvalidArgument("unknown embedding strategy '" + std::string(spec) + "'");
}

std::size_t EmbeddingStrategy::dim() const noexcept {
  if (precomputed_) return precomputed_->dim();
  return table_ ? table_->dim() : 0;
}

std::vector<float> EmbeddingStrategy::embed(std::string_view unit_id, std::span<const Token> tokens) const {
  if (precomputed_) {
    const auto r = precomputed_->at(unit_id);
    return {r.begin(), r.end()};
  }
  if (!content_only_) return embed_avg(tokens, *table_);
  std::vector<Token> kept;
  for (const auto& t : tokens) {
    if (t.is_content()) kept.push_back(t);
  }
  return embed_avg(kept, *table_);
}

EmbeddingMatrix embed_corpus(const std::vector<Document>& docs, EmbeddingLevel level,
                             const EmbeddingStrategy& strategy, bool normalize) {
  EmbeddingMatrix m(strategy.dim());
  std::vector<Token> stream;
  for (const auto& doc : docs) {
    if (level == EmbeddingLevel::kDocument) {
      stream.clear();
      for (const auto& s : doc.sentences) stream.insert(stream.end(), s.tokens.begin(), s.tokens.end());
      m.append(doc.doc_id, strategy.embed(doc.doc_id, stream));
    } else {
      for (const auto& s : doc.sentences) {
        auto id = s.unit_id();
        auto row = strategy.embed(id, s.tokens);
        m.append(std::move(id), row);
      }
    }
  }
  if (normalize) m.normalize();
  return m;
}

void write_embeddings(const EmbeddingMatrix& m, std::ostream& out) {
  io::Writer w(out);
  w.bytes(kMagic, sizeof kMagic);
  w.scalar<std::uint16_t>(kVersion);
  w.scalar<std::uint8_t>(m.unit_normalized() ? 1 : 0);
  w.scalar<std::uint64_t>(m.rows());
  w.scalar<std::uint32_t>(static_cast<std::uint32_t>(m.dim()));
  for (const auto& id : m.unit_ids()) w.string(id);
  w.floats(m.data());
}

EmbeddingMatrix read_embeddings(std::istream& in) {
  io::Reader r(in, "embedding file");
  char magic[4];
  r.bytes(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof magic) != 0) throw FormatError("not an LHAE embedding file (bad magic)");
  const auto version = r.scalar<std::uint16_t>();
  if (version != kVersion) throw FormatError("unsupported embedding file version " + std::to_string(version));
  const auto flags = r.scalar<std::uint8_t>();
  const auto count = r.scalar<std::uint64_t>();
  const auto dim = r.scalar<std::uint32_t>();
  if (dim == 0) throw FormatError("embedding file declares dim 0");

  std::vector<std::string> ids;
  ids.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, 1u << 24)));
  for (std::uint64_t i = 0; i < count; ++i) ids.push_back(r.string());

  EmbeddingMatrix m(dim, (flags & 1) != 0);
  std::vector<float> rows(static_cast<std::size_t>(count) * dim);
  const std::size_t expected = rows.size() * sizeof(float);
  in.read(reinterpret_cast<char*>(rows.data()), static_cast<std::streamsize>(expected));
  const auto got = static_cast<std::size_t>(in.gcount());
  if (got != expected) {
    throw FormatError("truncated embedding file: expected " + std::to_string(expected) +
                      " bytes of row data, got " + std::to_string(got));
  }
  if constexpr (std::endian::native == std::endian::big) {
    for (auto& f : rows) f = io::to_little(f);
  }
  for (std::uint64_t i = 0; i < count; ++i) {
    m.append(std::move(ids[i]), std::span<const float>(rows.data() + i * dim, dim));
  }
  return m;
}

void save_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write embeddings: " + path.string());
  write_embeddings(m, out);
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open embeddings: " + path.string());
  return read_embeddings(in);
}

}  // namespace lha
