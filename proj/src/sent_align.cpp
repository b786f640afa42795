#include "lha/sent_align.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <numeric>
#include <unordered_map>

#include "lha/error.hpp"
#include "lha/log.hpp"
#include "lha/parallel.hpp"

namespace lha {

namespace {

using json = nlohmann::json;

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::size_t> parent_;
};

// Indices of the k largest values; ties go to the lower index.
std::vector<std::uint32_t> top_indices(std::size_t n, std::size_t k, const auto& value_at) {
  std::vector<std::uint32_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0u);
  const auto better = [&](std::uint32_t a, std::uint32_t b) {
    const double va = value_at(a), vb = value_at(b);
    return va != vb ? va > vb : a < b;
  };
  k = std::min(k, n);
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), better);
  idx.resize(k);
  return idx;
}

std::vector<Token> side_tokens(const Document& doc, const std::vector<std::uint32_t>& ordinals) {
  std::vector<Token> out;
  for (auto o : ordinals) {
    const auto& t = doc.sentences.at(o).tokens;
    out.insert(out.end(), t.begin(), t.end());
  }
  return out;
}

}  // namespace

SimMatrix sentence_sim_matrix(const Document& source, const Document& target, const Scorer& scorer,
                              const ScoringResources& resources) {
  if (source.sentences.empty() || target.sentences.empty()) {
    throw InvalidArgument("cannot align empty document ('" + source.doc_id + "' / '" + target.doc_id + "')");
  }
  std::vector<PreparedUnit> src, tgt;
  src.reserve(source.sentences.size());
  tgt.reserve(target.sentences.size());
  for (const auto& s : source.sentences) src.push_back(scorer.prepare(s, Side::kSource, resources));
  for (const auto& s : target.sentences) tgt.push_back(scorer.prepare(s, Side::kTarget, resources));

  SimMatrix p;
  for (const auto& u : src) p.source_ids.push_back(u.unit_id);
  for (const auto& u : tgt) p.target_ids.push_back(u.unit_id);
  p.values.resize(src.size() * tgt.size());
  for (std::size_t i = 0; i < src.size(); ++i) {
    for (std::size_t j = 0; j < tgt.size(); ++j) p.values[i * tgt.size() + j] = scorer.score(src[i], tgt[j], resources);
  }
  return p;
}

std::vector<ScoredPair> extract_nn_pairs(const SimMatrix& p, std::size_t k, double theta_s) {
  const std::size_t rows = p.rows(), cols = p.cols();
  std::vector<char> chosen(rows * cols, 0);
  for (std::size_t i = 0; i < rows; ++i) {
    for (auto j : top_indices(cols, k, [&](std::uint32_t c) { return p.at(i, c); })) chosen[i * cols + j] = 1;
  }
  for (std::size_t j = 0; j < cols; ++j) {
    for (auto i : top_indices(rows, k, [&](std::uint32_t r) { return p.at(r, j); })) chosen[i * cols + j] = 1;
  }
  std::vector<ScoredPair> out;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      if (chosen[i * cols + j] && p.at(i, j) >= theta_s) {
        out.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), p.at(i, j)});
      }
    }
  }
  return out;
}

std::vector<std::string> AlignedGroup::source_ids() const {
  std::vector<std::string> out;
  for (auto o : source_ordinals) out.push_back(sentence_unit_id(source_doc, o));
  return out;
}

std::vector<std::string> AlignedGroup::target_ids() const {
  std::vector<std::string> out;
  for (auto o : target_ordinals) out.push_back(sentence_unit_id(target_doc, o));
  return out;
}

std::vector<AlignedGroup> merge_groups(const std::vector<ScoredPair>& pairs, const std::string& source_doc,
                                       const std::string& target_doc) {
  if (pairs.empty()) return {};
  std::uint32_t max_src = 0, max_tgt = 0;
  for (const auto& pr : pairs) {
    max_src = std::max(max_src, pr.source);
    max_tgt = std::max(max_tgt, pr.target);
  }
  const std::size_t offset = std::size_t{max_src} + 1;
  DisjointSets sets(offset + max_tgt + 1);
  for (const auto& pr : pairs) sets.unite(pr.source, offset + pr.target);

  std::unordered_map<std::size_t, AlignedGroup> by_root;
  for (const auto& pr : pairs) {
    auto [it, fresh] = by_root.try_emplace(sets.find(pr.source));
    auto& g = it->second;
    if (fresh) {
      g.source_doc = source_doc;
      g.target_doc = target_doc;
      g.score = pr.similarity;
    }
    g.source_ordinals.push_back(pr.source);
    g.target_ordinals.push_back(pr.target);
    g.score = std::max(g.score, pr.similarity);
  }
  std::vector<AlignedGroup> out;
  out.reserve(by_root.size());
  for (auto& [root, g] : by_root) {
    for (auto* v : {&g.source_ordinals, &g.target_ordinals}) {
      std::sort(v->begin(), v->end());
      v->erase(std::unique(v->begin(), v->end()), v->end());
    }
    out.push_back(std::move(g));
  }
  std::sort(out.begin(), out.end(), [](const AlignedGroup& a, const AlignedGroup& b) {
    if (a.source_ordinals.front() != b.source_ordinals.front()) return a.source_ordinals.front() < b.source_ordinals.front();
    return a.target_ordinals.front() < b.target_ordinals.front();
  });
  return out;
}

std::string FilterPolicy::exclusion_key(std::string_view source_text, std::string_view target_text) {
  return normalize_text(source_text) + '\t' + normalize_text(target_text);
}

void FilterPolicy::load_exclusions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open exclusion list: " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError("exclusion line needs source<TAB>target", line_no);
    exclusion_set.insert(exclusion_key(std::string_view(line).substr(0, tab), std::string_view(line).substr(tab + 1)));
  }
}

void FilterPolicy::validate() const {
  if (!(min_overlap >= 0.0 && min_overlap <= 1.0)) throw InvalidArgument("min_overlap must lie in [0,1]");
  if (!(max_len_ratio > 0.0)) throw InvalidArgument("max_len_ratio must be positive");
}

bool FilterPolicy::accepts(const std::vector<Token>& source_tokens, const std::vector<Token>& target_tokens,
                           std::string_view source_text, std::string_view target_text) const {
  if (unigram_overlap(content_tokens(source_tokens), content_tokens(target_tokens)) < min_overlap) return false;
  if (static_cast<double>(target_tokens.size()) > max_len_ratio * static_cast<double>(source_tokens.size())) {
    return false;
  }
  if (!exclusion_set.empty() && exclusion_set.count(exclusion_key(source_text, target_text))) return false;
  return true;
}

bool FilterPolicy::accepts_text(std::string_view source_text, std::string_view target_text,
                                const Tokenizer& tokenizer) const {
  return accepts(tokenizer.tokenize(source_text), tokenizer.tokenize(target_text), source_text, target_text);
}

std::string side_text(const Document& doc, const std::vector<std::uint32_t>& ordinals) {
  std::string out;
  for (auto o : ordinals) {
    if (!out.empty()) out += ' ';
    out += doc.sentences.at(o).text;
  }
  return out;
}

std::vector<AlignedGroup> filter_groups(const std::vector<AlignedGroup>& groups, const FilterPolicy& policy,
                                        const Document& source, const Document& target) {
  std::vector<AlignedGroup> out;
  for (const auto& g : groups) {
    if (policy.accepts(side_tokens(source, g.source_ordinals), side_tokens(target, g.target_ordinals),
                       side_text(source, g.source_ordinals), side_text(target, g.target_ordinals))) {
      out.push_back(g);
    }
  }
  return out;
}

std::vector<GroupRecord> align_sentences(const std::vector<DocPair>& doc_pairs, const Corpus& sources,
                                         const Corpus& targets, const SentAlignConfig& config,
                                         const ScoringResources& resources, SentAlignStats* stats) {
  if (config.k == 0) throw InvalidArgument("K must be positive");
  struct Partial {
    std::vector<GroupRecord> records;
    std::size_t nn_pairs = 0, merged = 0;
    bool failed = false;
  };
  std::vector<Partial> partial(doc_pairs.size());

  parallel_for(doc_pairs.size(), config.threads, [&](std::size_t idx) {
    const auto& dp = doc_pairs[idx];
    auto& part = partial[idx];
    try {
      const Document& src = sources.at(dp.source_id);
      const Document& tgt = targets.at(dp.target_id);
      const auto matrix = sentence_sim_matrix(src, tgt, config.scorer, resources);
      auto pairs = extract_nn_pairs(matrix, config.k, config.theta_s);
      part.nn_pairs = pairs.size();
      if (config.apply_filters && config.filter.stage == FilterStage::kPair) {
        std::erase_if(pairs, [&](const ScoredPair& pr) {
          const auto& s = src.sentences[pr.source];
          const auto& t = tgt.sentences[pr.target];
          return !config.filter.accepts(s.tokens, t.tokens, s.text, t.text);
        });
      }
      auto groups = merge_groups(pairs, src.doc_id, tgt.doc_id);
      part.merged = groups.size();
      if (config.apply_filters && config.filter.stage == FilterStage::kGroup) {
        groups = filter_groups(groups, config.filter, src, tgt);
      }
      for (auto& g : groups) {
        GroupRecord rec;
        rec.source_text = side_text(src, g.source_ordinals);
        rec.target_text = side_text(tgt, g.target_ordinals);
        rec.group = std::move(g);
        part.records.push_back(std::move(rec));
      }
    } catch (const std::exception& e) {
      part.failed = true;
      part.records.clear();
      log::warn("skipping document pair " + dp.source_id + " / " + dp.target_id + ": " + e.what());
    }
  });

  SentAlignStats st;
  st.doc_pairs = doc_pairs.size();
  std::vector<GroupRecord> out;
  std::unordered_set<std::string> seen;
  for (auto& part : partial) {
    st.failed_doc_pairs += part.failed;
    st.nn_pairs += part.nn_pairs;
    st.groups_merged += part.merged;
    st.groups_filtered += part.records.size();
    for (auto& rec : part.records) {
      if (!seen.insert(rec.source_text + '\t' + rec.target_text).second) {
        ++st.duplicates_removed;
        continue;
      }
      out.push_back(std::move(rec));
    }
  }
  if (stats) *stats = st;
  return out;
}

void write_group_jsonl(std::ostream& out, const GroupRecord& rec) {
  json j;
  j["source_doc"] = rec.group.source_doc;
  j["target_doc"] = rec.group.target_doc;
  j["source_ids"] = rec.group.source_ids();
  j["target_ids"] = rec.group.target_ids();
  j["source_text"] = rec.source_text;
  j["target_text"] = rec.target_text;
  j["score"] = rec.group.score;
  out << j.dump() << '\n';
}

void save_groups_jsonl(const std::filesystem::path& path, const std::vector<GroupRecord>& recs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write groups: " + path.string());
  for (const auto& r : recs) write_group_jsonl(out, r);
}

std::vector<GroupRecord> load_groups_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open groups: " + path.string());
  std::vector<GroupRecord> out;
  std::string line;
  std::size_t line_no = 0;
  const auto ordinal_of = [&](const std::string& id) {
    const auto hash = id.rfind('#');
    if (hash == std::string::npos) throw ParseError("sentence id without '#': " + id, line_no);
    return static_cast<std::uint32_t>(std::stoul(id.substr(hash + 1)));
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = json::parse(line);
      GroupRecord r;
      r.group.source_doc = j.at("source_doc").get<std::string>();
      r.group.target_doc = j.at("target_doc").get<std::string>();
      for (const auto& id : j.at("source_ids")) r.group.source_ordinals.push_back(ordinal_of(id.get<std::string>()));
      for (const auto& id : j.at("target_ids")) r.group.target_ordinals.push_back(ordinal_of(id.get<std::string>()));
      r.group.score = j.at("score").get<double>();
      r.source_text = j.at("source_text").get<std::string>();
      r.target_text = j.at("target_text").get<std::string>();
      out.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw ParseError(std::string("malformed group record: ") + e.what(), line_no);
    }
  }
  return out;
}

void save_groups_tsv(const std::filesystem::path& path, const std::vector<GroupRecord>& recs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write groups: " + path.string());
  for (const auto& r : recs) out << r.source_text << '\t' << r.target_text << '\n';
}

}  // namespace lha
