#include "lha/evaluate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <unordered_map>

#include "lha/doc_align.hpp"
#include "lha/error.hpp"
#include "lha/log.hpp"
#include "lha/parallel.hpp"

namespace lha {

namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct SweepPoint {
  double f1 = 0.0;
  double threshold = std::numeric_limits<double>::infinity();
  std::size_t retrieved = 0;
  std::size_t true_positives = 0;
};

struct RankedItem {
  double similarity;
  bool positive;
};

// `items` sorted by similarity descending; `keep` selects the subset to sweep.
template <typename Keep>
SweepPoint sweep_sorted(const std::vector<RankedItem>& items, std::size_t gold_total, Keep&& keep) {
  SweepPoint best;
  bool first = true;
  std::size_t retrieved = 0, tp = 0;
  std::size_t i = 0;
  while (i < items.size()) {
    const double cut = items[i].similarity;
    bool any = false;
    for (; i < items.size() && items[i].similarity == cut; ++i) {
      if (!keep(i)) continue;
      any = true;
      ++retrieved;
      tp += items[i].positive;
    }
    if (!any) continue;
    const double f1 = 2.0 * static_cast<double>(tp) / static_cast<double>(retrieved + gold_total);
    if (first || f1 > best.f1) {
      best = {f1, cut, retrieved, tp};
      first = false;
    }
  }
  return best;
}

void fill_report(EvalReport& r, const SweepPoint& p, std::size_t gold_total) {
  r.f1_max = p.f1;
  r.best_threshold = p.threshold;
  r.retrieved_at_max = p.retrieved;
  r.true_positives_at_max = p.true_positives;
  r.positives_total = gold_total;
  r.precision_at_max = p.retrieved ? static_cast<double>(p.true_positives) / static_cast<double>(p.retrieved) : 0.0;
  r.recall_at_max = gold_total ? static_cast<double>(p.true_positives) / static_cast<double>(gold_total) : 0.0;
}

std::string doc_of(const std::string& sentence_key) {
  const auto hash = sentence_key.rfind('#');
  return hash == std::string::npos ? sentence_key : sentence_key.substr(0, hash);
}

void finish_timing(EvalReport& r, Clock::time_point start) {
  r.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  r.throughput_units_per_sec = r.seconds > 0.0 ? static_cast<double>(r.units) / r.seconds : 0.0;
}

// Re-score the union of each row's and each column's top-N entries of `base`;
// everything else becomes -inf and is never extracted.
SimMatrix rescore_matrix(const SimMatrix& base, std::size_t top,
                         const std::function<double(std::size_t, std::size_t)>& score) {
  SimMatrix out;
  out.source_ids = base.source_ids;
  out.target_ids = base.target_ids;
  out.values.assign(base.values.size(), kNegInf);
  const auto pairs = extract_nn_pairs(base, top, kNegInf);
  for (const auto& p : pairs) out.values[p.source * base.cols() + p.target] = score(p.source, p.target);
  return out;
}

std::vector<ScoredPair> candidates_of(const SimMatrix& m, std::size_t k) {
  std::vector<ScoredPair> out;
  if (k == 0) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
      for (std::size_t j = 0; j < m.cols(); ++j) {
        out.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), m.at(i, j)});
      }
    }
  } else {
    out = extract_nn_pairs(m, k, kNegInf);
  }
  std::erase_if(out, [](const ScoredPair& p) { return p.similarity == kNegInf; });
  return out;
}

// Scoring context shared by the sentence-level tasks over a pair of corpora.
struct SentenceScoring {
  EmbeddingMatrix source_embeddings;
  EmbeddingMatrix target_embeddings;
  Bm25Stats bm25;
  ScoringResources resources;

  SentenceScoring(const std::vector<Document>& sources, const std::vector<Document>& targets,
                  const EvalConfig& config, bool need_embeddings) {
    resources.words = config.words;
    if (need_embeddings) {
      if (!config.sentence_embedder) throw InvalidArgument("cosine scoring needs a sentence embedder");
      source_embeddings = embed_corpus(sources, EmbeddingLevel::kSentence, *config.sentence_embedder, config.normalize);
      target_embeddings = embed_corpus(targets, EmbeddingLevel::kSentence, *config.sentence_embedder, config.normalize);
      resources.source_embeddings = &source_embeddings;
      resources.target_embeddings = &target_embeddings;
    }
    const bool need_bm25 = config.scorer.needs_bm25() || (config.rescorer && config.rescorer->needs_bm25());
    if (need_bm25) {
      std::vector<std::vector<std::string>> units;
      for (const auto& d : targets) {
        for (const auto& s : d.sentences) units.push_back(content_tokens(s));
      }
      bm25 = Bm25Stats::build(units, config.scorer.params().k1, config.scorer.params().b);
      resources.bm25 = &bm25;
    }
  }
};

MatrixFn make_matrix_fn(const EvalConfig& config, const SentenceScoring& scoring) {
  return [&config, &scoring](const Document& s, const Document& t) {
    auto base = sentence_sim_matrix(s, t, config.scorer, scoring.resources);
    if (config.rescore_top == 0 || !config.rescorer) return base;
    std::vector<PreparedUnit> su, tu;
    for (const auto& x : s.sentences) su.push_back(config.rescorer->prepare(x, Side::kSource, scoring.resources));
    for (const auto& x : t.sentences) tu.push_back(config.rescorer->prepare(x, Side::kTarget, scoring.resources));
    return rescore_matrix(base, config.rescore_top, [&](std::size_t i, std::size_t j) {
      return config.rescorer->score(su[i], tu[j], scoring.resources);
    });
  };
}

std::vector<Document> concat_docs(const Corpus& c) { return c.documents(); }

std::uint64_t next_random(std::uint64_t& state) {
  // splitmix64: portable, so noise samples are identical on every platform
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::vector<Document> sample_docs(const std::vector<Document>& pool, std::size_t count, std::uint64_t seed) {
  if (count > pool.size()) {
    throw InvalidArgument("noise pool has " + std::to_string(pool.size()) + " documents, " +
                          std::to_string(count) + " requested");
  }
  std::vector<std::size_t> order(pool.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::uint64_t state = seed;
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[next_random(state) % i]);
  }
  order.resize(count);
  std::sort(order.begin(), order.end());
  std::vector<Document> out;
  for (auto i : order) out.push_back(pool[i]);
  return out;
}

std::vector<Neighbor> nearest(const EmbeddingMatrix& targets, const AnnIndex* index, std::span<const float> v,
                              std::size_t k) {
  return index ? index->query(v, k) : exact_knn(targets, v, k);
}

}  // namespace

std::string_view to_string(GoldLabel label) {
  switch (label) {
    case GoldLabel::kGood: return "good";
    case GoldLabel::kGoodPartial: return "good_partial";
    case GoldLabel::kPartial: return "partial";
    case GoldLabel::kNonvalid: return "nonvalid";
  }
  return "?";
}

GoldLabel parse_gold_label(std::string_view text) {
  const auto t = to_lower(text);
  if (t == "good") return GoldLabel::kGood;
  if (t == "good_partial" || t == "good partial" || t == "good-partial" || t == "goodpartial") {
    return GoldLabel::kGoodPartial;
  }
  if (t == "partial") return GoldLabel::kPartial;
  if (t == "nonvalid" || t == "non-valid" || t == "non_valid" || t == "bad") return GoldLabel::kNonvalid;
  throw InvalidArgument("unknown gold label '" + std::string(text) + "'");
}

std::vector<GoldPair> load_gold_pairs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open gold pairs: " + path.string());
  std::vector<GoldPair> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = json::parse(line);
      out.push_back({j.at("source_key").get<std::string>(), j.at("target_key").get<std::string>(),
                     parse_gold_label(j.at("label").get<std::string>())});
    } catch (const json::exception& e) {
      throw ParseError(std::string("malformed gold record: ") + e.what(), line_no);
    } catch (const InvalidArgument& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return out;
}

void save_gold_pairs(const std::filesystem::path& path, const std::vector<GoldPair>& pairs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write gold pairs: " + path.string());
  for (const auto& g : pairs) {
    json j;
    j["source_key"] = g.source_key;
    j["target_key"] = g.target_key;
    j["label"] = std::string(to_string(g.label));
    out << j.dump() << '\n';
  }
}

json EvalReport::to_json() const {
  json j;
  j["task"] = task;
  j["f1_max"] = f1_max;
  j["precision_at_max"] = precision_at_max;
  j["recall_at_max"] = recall_at_max;
  j["tp_percent"] = 100.0 * recall_at_max;
  j["best_threshold"] = std::isfinite(best_threshold) ? json(best_threshold) : json(nullptr);
  if (best_doc_threshold) j["best_doc_threshold"] = *best_doc_threshold;
  j["positives_total"] = positives_total;
  j["retrieved_at_max"] = retrieved_at_max;
  j["true_positives_at_max"] = true_positives_at_max;
  j["candidates"] = candidates;
  j["units"] = units;
  j["seconds"] = seconds;
  j["throughput_units_per_sec"] = throughput_units_per_sec;
  j["seed"] = seed ? json(*seed) : json(nullptr);
  return j;
}

std::string EvalReport::to_table() const {
  std::ostringstream os;
  os << std::fixed;
  os << "task               " << task << '\n';
  if (seed) os << "seed               " << *seed << '\n';
  os << std::setprecision(4);
  os << "F1max              " << f1_max << '\n';
  os << "precision          " << precision_at_max << '\n';
  os << "TP                 " << std::setprecision(1) << 100.0 * recall_at_max << "% (" << true_positives_at_max
     << " of " << positives_total << ")\n";
  os << std::setprecision(4);
  os << "threshold          " << best_threshold << '\n';
  if (best_doc_threshold) os << "doc threshold      " << *best_doc_threshold << '\n';
  os << "retrieved          " << retrieved_at_max << " of " << candidates << " candidates\n";
  os << std::setprecision(1);
  os << "throughput         " << throughput_units_per_sec << " units/s (" << units << " units, "
     << std::setprecision(2) << seconds << " s)\n";
  return os.str();
}

EvalReport f1max_sweep(std::vector<ScoredCandidate> scored, const std::set<PairKey>& gold_positive) {
  if (gold_positive.empty()) throw InvalidArgument("f1max_sweep needs at least one gold positive");
  std::sort(scored.begin(), scored.end(), [](const ScoredCandidate& a, const ScoredCandidate& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.pair < b.pair;
  });
  {
    std::set<PairKey> seen;
    for (const auto& s : scored) {
      if (!seen.insert(s.pair).second) {
        throw InvalidArgument("duplicate scored pair (" + s.pair.first + ", " + s.pair.second + ")");
      }
    }
  }
  std::vector<RankedItem> items;
  items.reserve(scored.size());
  for (const auto& s : scored) items.push_back({s.similarity, gold_positive.count(s.pair) > 0});

  EvalReport r;
  r.candidates = scored.size();
  fill_report(r, sweep_sorted(items, gold_positive.size(), [](std::size_t) { return true; }), gold_positive.size());
  return r;
}

EvalDataset EvalDataset::load(const std::filesystem::path& dir, const Tokenizer& tokenizer, bool require_noise) {
  const auto need = [&](const char* name) {
    const auto p = dir / name;
    if (!std::filesystem::exists(p)) {
      throw Error("evaluation dataset file missing: " + p.string() +
                  "\nObtain the annotated Wikipedia / Simple Wikipedia sentence-alignment data (46 article "
                  "pairs with good / good partial / partial / non-valid labels), convert it with "
                  "`lha convert-gold --tsv <file> --out " + dir.string() +
                  "`, and add noise_source.jsonl / noise_target.jsonl article pools. See README.md.");
    }
    return p;
  };
  EvalDataset d;
  d.gold_sources = Corpus::load(need("gold_source.jsonl"), "gold_source", tokenizer, CorpusSchema::kAuto);
  d.gold_targets = Corpus::load(need("gold_target.jsonl"), "gold_target", tokenizer, CorpusSchema::kAuto);
  d.gold = load_gold_pairs(need("gold_pairs.jsonl"));
  std::set<PairKey> doc_pairs;
  for (const auto& g : d.gold) {
    const auto sd = doc_of(g.source_key), td = doc_of(g.target_key);
    if (!d.gold_sources.find(sd)) throw Error("gold pair references unknown source document '" + sd + "'");
    if (!d.gold_targets.find(td)) throw Error("gold pair references unknown target document '" + td + "'");
    if (doc_pairs.insert({sd, td}).second) d.gold_doc_pairs.emplace_back(sd, td);
  }
  if (require_noise) {
    for (const char* side : {"noise_source.jsonl", "noise_target.jsonl"}) {
      auto corpus = Corpus::load(need(side), side, tokenizer, CorpusSchema::kAuto);
      auto& dst = std::string_view(side) == "noise_source.jsonl" ? d.noise_sources : d.noise_targets;
      const auto& gold = std::string_view(side) == "noise_source.jsonl" ? d.gold_sources : d.gold_targets;
      for (const auto& doc : corpus.documents()) {
        if (!gold.find(doc.doc_id)) dst.push_back(doc);
      }
    }
  }
  return d;
}

std::set<PairKey> EvalDataset::positives(bool include_good_partial) const {
  std::set<PairKey> out;
  for (const auto& g : gold) {
    if (g.label == GoldLabel::kGood || (include_good_partial && g.label == GoldLabel::kGoodPartial)) {
      out.emplace(g.source_key, g.target_key);
    }
  }
  return out;
}

std::set<PairKey> EvalDataset::doc_positives() const {
  return {gold_doc_pairs.begin(), gold_doc_pairs.end()};
}

std::pair<Corpus, Corpus> with_noise(const EvalDataset& data, std::size_t count, std::uint64_t seed) {
  auto src = concat_docs(data.gold_sources);
  auto tgt = concat_docs(data.gold_targets);
  for (auto& d : sample_docs(data.noise_sources, count, seed)) src.push_back(std::move(d));
  // an independent stream for the target side
  for (auto& d : sample_docs(data.noise_targets, count, seed ^ 0xA5A5A5A5A5A5A5A5ull)) tgt.push_back(std::move(d));
  return {Corpus(std::move(src)), Corpus(std::move(tgt))};
}

EvalReport eval_sentence_alignment(const EvalDataset& data, const MatrixFn& matrix, std::size_t k,
                                   bool good_partial_positive) {
  const auto start = Clock::now();
  std::vector<ScoredCandidate> scored;
  std::size_t units = 0;
  for (const auto& [sd, td] : data.gold_doc_pairs) {
    const auto& s = data.gold_sources.at(sd);
    const auto& t = data.gold_targets.at(td);
    units += s.sentences.size() + t.sentences.size();
    const auto m = matrix(s, t);
    for (const auto& p : candidates_of(m, k)) {
      scored.push_back({{m.source_ids[p.source], m.target_ids[p.target]}, p.similarity});
    }
  }
  auto r = f1max_sweep(std::move(scored), data.positives(good_partial_positive));
  r.task = "sentence";
  r.units = units;
  finish_timing(r, start);
  return r;
}

EvalReport eval_sentence_alignment(const EvalDataset& data, const EvalConfig& config) {
  const auto start = Clock::now();
  const SentenceScoring scoring(data.gold_sources.documents(), data.gold_targets.documents(), config,
                                config.scorer.needs_embeddings());
  auto r = eval_sentence_alignment(data, make_matrix_fn(config, scoring), config.k, config.good_partial_positive);
  finish_timing(r, start);
  return r;
}

EvalReport eval_document_alignment(const EvalDataset& data, const EvalConfig& config) {
  const auto start = Clock::now();
  const auto [sources, targets] = with_noise(data, config.noise_per_side, config.seed);
  const std::size_t k = config.k == 0 ? targets.size() : config.k;
  std::vector<ScoredCandidate> scored;

  if (config.scorer.needs_embeddings()) {
    if (!config.document_embedder) throw InvalidArgument("cosine document alignment needs a document embedder");
    const auto se = embed_corpus(sources.documents(), EmbeddingLevel::kDocument, *config.document_embedder, config.normalize);
    const auto te = embed_corpus(targets.documents(), EmbeddingLevel::kDocument, *config.document_embedder, config.normalize);
    std::optional<AnnIndex> index;
    if (config.use_index) index = AnnIndex::build(te, config.index);
    const auto pairs = index ? align_documents(se, *index, k, kNegInf, config.threads)
                             : align_documents_exact(se, te, k, kNegInf, config.threads);
    for (const auto& p : pairs) scored.push_back({{p.source_id, p.target_id}, p.similarity});
  } else {
    // word-based scorers: exhaustive document-by-document scoring
    ScoringResources res;
    res.words = config.words;
    Bm25Stats stats;
    if (config.scorer.needs_bm25()) {
      std::vector<std::vector<std::string>> units;
      for (const auto& d : targets.documents()) {
        std::vector<Token> all;
        for (const auto& s : d.sentences) all.insert(all.end(), s.tokens.begin(), s.tokens.end());
        units.push_back(content_tokens(all));
      }
      stats = Bm25Stats::build(units, config.scorer.params().k1, config.scorer.params().b);
      res.bm25 = &stats;
    }
    const auto prepare_all = [&](const Corpus& c, Side side) {
      std::vector<PreparedUnit> out;
      for (const auto& d : c.documents()) {
        std::vector<Token> all;
        for (const auto& s : d.sentences) all.insert(all.end(), s.tokens.begin(), s.tokens.end());
        out.push_back(config.scorer.prepare(d.doc_id, all, side, res));
      }
      return out;
    };
    const auto su = prepare_all(sources, Side::kSource);
    const auto tu = prepare_all(targets, Side::kTarget);
    std::vector<std::vector<Neighbor>> best(su.size());
    parallel_for(su.size(), config.threads, [&](std::size_t i) {
      std::vector<Neighbor> all;
      for (const auto& t : tu) all.push_back({t.unit_id, config.scorer.score(su[i], t, res)});
      std::sort(all.begin(), all.end(), neighbor_before);
      all.resize(std::min(all.size(), k));
      best[i] = std::move(all);
    });
    for (std::size_t i = 0; i < su.size(); ++i) {
      for (const auto& n : best[i]) scored.push_back({{su[i].unit_id, n.unit_id}, n.similarity});
    }
  }

  auto r = f1max_sweep(std::move(scored), data.doc_positives());
  r.task = "document";
  r.seed = config.seed;
  r.units = sources.size() + targets.size();
  finish_timing(r, start);
  return r;
}

EvalReport eval_joint(const EvalDataset& data, JointMode mode, const EvalConfig& config) {
  const auto start = Clock::now();
  const auto [sources, targets] = with_noise(data, config.noise_per_side, config.seed);
  const auto positives = data.positives(config.good_partial_positive);
  const std::size_t k = std::max<std::size_t>(config.k, 1);

  struct Candidate {
    PairKey pair;
    double doc_similarity;
    double similarity;
  };
  std::vector<Candidate> cands;
  std::size_t units = sources.sentence_count() + targets.sentence_count();

  if (mode == JointMode::kLha) {
    if (!config.document_embedder) throw InvalidArgument("joint evaluation needs a document embedder");
    const auto se = embed_corpus(sources.documents(), EmbeddingLevel::kDocument, *config.document_embedder, config.normalize);
    const auto te = embed_corpus(targets.documents(), EmbeddingLevel::kDocument, *config.document_embedder, config.normalize);
    std::optional<AnnIndex> index;
    if (config.use_index) index = AnnIndex::build(te, config.index);
    const auto doc_pairs = index ? align_documents(se, *index, k, kNegInf, config.threads)
                                 : align_documents_exact(se, te, k, kNegInf, config.threads);

    const bool needs_emb = config.scorer.needs_embeddings();
    const SentenceScoring scoring(sources.documents(), targets.documents(), config, needs_emb);
    const auto matrix = make_matrix_fn(config, scoring);
    std::vector<std::vector<Candidate>> per_pair(doc_pairs.size());
    parallel_for(doc_pairs.size(), config.threads, [&](std::size_t idx) {
      const auto& dp = doc_pairs[idx];
      const auto m = matrix(sources.at(dp.source_id), targets.at(dp.target_id));
      for (const auto& p : candidates_of(m, k)) {
        per_pair[idx].push_back({{m.source_ids[p.source], m.target_ids[p.target]}, dp.similarity, p.similarity});
      }
    });
    for (auto& v : per_pair) {
      for (auto& c : v) cands.push_back(std::move(c));
    }
  } else {
    if (!config.scorer.needs_embeddings()) {
      throw InvalidArgument("global alignment retrieves candidates by embedding; use a cosine scorer "
                            "(optionally with a re-scorer)");
    }
    const SentenceScoring scoring(sources.documents(), targets.documents(), config, true);
    const auto& se = scoring.source_embeddings;
    const auto& te = scoring.target_embeddings;
    std::optional<AnnIndex> src_index, tgt_index;
    if (config.use_index) {
      src_index = AnnIndex::build(se, config.index);
      tgt_index = AnnIndex::build(te, config.index);
    }
    const bool rescore = config.rescore_top > 0 && config.rescorer;
    const std::size_t fan = rescore ? std::max(config.rescore_top, k) : k;

    std::unordered_map<std::string, const Sentence*> sentence_by_id;
    for (const auto* c : {&sources, &targets}) {
      for (const auto& d : c->documents()) {
        for (const auto& s : d.sentences) sentence_by_id.emplace(s.unit_id(), &s);
      }
    }
    const auto rescore_fn = [&](const std::string& src_id, const std::string& tgt_id) {
      const auto a = config.rescorer->prepare(*sentence_by_id.at(src_id), Side::kSource, scoring.resources);
      const auto b = config.rescorer->prepare(*sentence_by_id.at(tgt_id), Side::kTarget, scoring.resources);
      return config.rescorer->score(a, b, scoring.resources);
    };

    // source -> target and target -> source neighbour lists
    const auto retrieve = [&](const EmbeddingMatrix& queries, const EmbeddingMatrix& pool, const AnnIndex* index,
                              bool queries_are_sources) {
      std::vector<std::vector<Candidate>> found(queries.rows());
      parallel_for(queries.rows(), config.threads, [&](std::size_t r) {
        if (queries.is_zero_row(r)) return;
        auto nn = nearest(pool, index, queries.row(r), fan);
        if (rescore) {
          for (auto& n : nn) {
            n.similarity = queries_are_sources ? rescore_fn(queries.unit_id(r), n.unit_id)
                                               : rescore_fn(n.unit_id, queries.unit_id(r));
          }
          std::sort(nn.begin(), nn.end(), neighbor_before);
        }
        nn.resize(std::min(nn.size(), k));
        for (auto& n : nn) {
          PairKey key = queries_are_sources ? PairKey{queries.unit_id(r), n.unit_id} : PairKey{n.unit_id, queries.unit_id(r)};
          found[r].push_back({std::move(key), 0.0, n.similarity});
        }
      });
      return found;
    };
    std::map<PairKey, double> merged;
    for (auto& v : retrieve(se, te, tgt_index ? &*tgt_index : nullptr, true)) {
      for (auto& c : v) merged.emplace(std::move(c.pair), c.similarity);
    }
    for (auto& v : retrieve(te, se, src_index ? &*src_index : nullptr, false)) {
      for (auto& c : v) merged.emplace(std::move(c.pair), c.similarity);
    }
    for (auto& [key, sim] : merged) cands.push_back({key, 0.0, sim});
  }

  std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.pair < b.pair;
  });
  std::vector<RankedItem> items;
  items.reserve(cands.size());
  for (const auto& c : cands) items.push_back({c.similarity, positives.count(c.pair) > 0});

  EvalReport r;
  r.task = mode == JointMode::kLha ? "joint-lha" : "joint-global";
  r.candidates = cands.size();
  if (mode == JointMode::kLha) {
    std::vector<double> doc_cuts;
    for (const auto& c : cands) doc_cuts.push_back(c.doc_similarity);
    std::sort(doc_cuts.begin(), doc_cuts.end(), std::greater<>());
    doc_cuts.erase(std::unique(doc_cuts.begin(), doc_cuts.end()), doc_cuts.end());
    SweepPoint best;
    bool first = true;
    for (double cut : doc_cuts) {
      const auto p = sweep_sorted(items, positives.size(), [&](std::size_t i) { return cands[i].doc_similarity >= cut; });
      if (first || p.f1 > best.f1) {
        best = p;
        r.best_doc_threshold = cut;
        first = false;
      }
    }
    fill_report(r, best, positives.size());
  } else {
    fill_report(r, sweep_sorted(items, positives.size(), [](std::size_t) { return true; }), positives.size());
  }
  r.seed = config.seed;
  r.units = units;
  finish_timing(r, start);
  return r;
}

void convert_labelled_tsv(const std::filesystem::path& tsv, const std::filesystem::path& out_dir) {
  std::ifstream in(tsv);
  if (!in) throw Error("cannot open labelled pairs: " + tsv.string());
  struct Article {
    std::vector<std::string> sentences;
    std::map<std::string, std::uint32_t> index;
    std::uint32_t add(const std::string& s) {
      const auto [it, fresh] = index.try_emplace(s, static_cast<std::uint32_t>(sentences.size()));
      if (fresh) sentences.push_back(s);
      return it->second;
    }
  };
  std::vector<std::string> order;
  std::map<std::string, std::pair<Article, Article>> articles;
  std::vector<GoldPair> gold;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t pos = 0;
    for (int n = 0; n < 3; ++n) {
      const auto tab = line.find('\t', pos);
      if (tab == std::string::npos) throw ParseError("expected article<TAB>label<TAB>source<TAB>target", line_no);
      f.push_back(line.substr(pos, tab - pos));
      pos = tab + 1;
    }
    f.push_back(line.substr(pos));
    std::string id = f[0];
    std::replace(id.begin(), id.end(), '#', '_');
    if (!articles.count(id)) order.push_back(id);
    auto& [src, tgt] = articles[id];
    const auto so = src.add(f[2]);
    const auto to = tgt.add(f[3]);
    try {
      gold.push_back({sentence_unit_id(id, so), sentence_unit_id(id, to), parse_gold_label(f[1])});
    } catch (const InvalidArgument& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  std::filesystem::create_directories(out_dir);
  std::ofstream s_out(out_dir / "gold_source.jsonl", std::ios::binary);
  std::ofstream t_out(out_dir / "gold_target.jsonl", std::ios::binary);
  for (const auto& id : order) {
    for (int side = 0; side < 2; ++side) {
      const auto& art = side == 0 ? articles[id].first : articles[id].second;
      json j;
      j["id"] = id;
      j["sentences"] = art.sentences;
      (side == 0 ? s_out : t_out) << j.dump() << '\n';
    }
  }
  save_gold_pairs(out_dir / "gold_pairs.jsonl", gold);
}

}  // namespace lha
