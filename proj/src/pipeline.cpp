#include "lha/pipeline.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <set>
#include <sstream>

#include "lha/doc_align.hpp"
#include "lha/embeddings.hpp"
#include "lha/error.hpp"
#include "lha/log.hpp"

namespace lha {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr std::string_view kPrecomputed = "precomputed:";

std::string resolve_spec(const std::string& spec, const fs::path& base) {
  if (spec.rfind(kPrecomputed, 0) != 0 || base.empty()) return spec;
  fs::path p(spec.substr(kPrecomputed.size()));
  if (p.is_relative()) p = base / p;
  return std::string(kPrecomputed) + p.string();
}

std::optional<fs::path> precomputed_path(const std::string& spec) {
  if (spec.rfind(kPrecomputed, 0) != 0) return std::nullopt;
  return fs::path(spec.substr(kPrecomputed.size()));
}

fs::path resolve(const fs::path& p, const fs::path& base) {
  return p.is_relative() && !base.empty() ? base / p : p;
}

FilterStage parse_stage(const std::string& s) {
  if (s == "group") return FilterStage::kGroup;
  if (s == "pair") return FilterStage::kPair;
  throw InvalidArgument("filter.stage must be 'group' or 'pair', got '" + s + "'");
}

bool same_path(const fs::path& a, const fs::path& b) {
  std::error_code ec1, ec2;
  return fs::weakly_canonical(fs::absolute(a, ec1), ec1).lexically_normal() ==
         fs::weakly_canonical(fs::absolute(b, ec2), ec2).lexically_normal();
}

std::string json_scalar_string(const json& v) {
  return v.is_string() ? v.get<std::string>() : v.dump();
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

class Manifest {
 public:
  explicit Manifest(fs::path file) : file_(std::move(file)) {
    if (fs::exists(file_)) {
      std::ifstream in(file_);
      try {
        data_ = json::parse(in);
      } catch (const json::exception&) {
        log::warn("ignoring unreadable manifest " + file_.string());
      }
    }
    if (!data_.is_object()) data_ = json::object();
    if (!data_.contains("stages") || !data_["stages"].is_object()) data_["stages"] = json::object();
    data_["tool_version"] = kToolVersion;
  }

  const json* stage(const std::string& name) const {
    const auto& s = data_["stages"];
    const auto it = s.find(name);
    return it == s.end() ? nullptr : &*it;
  }

  void record(const std::string& name, json entry) {
    data_["stages"][name] = std::move(entry);
    save();
  }

 private:
  void save() const {
    const auto tmp = fs::path(file_.string() + ".tmp");
    {
      std::ofstream out(tmp, std::ios::binary);
      out << data_.dump(2) << '\n';
      if (!out) throw Error("cannot write manifest " + tmp.string());
    }
    fs::rename(tmp, file_);
  }

  fs::path file_;
  json data_;
};

struct Stage {
  std::string name;
  std::vector<fs::path> inputs;
  json params;
  std::vector<fs::path> outputs;
  std::function<std::size_t()> run;
};

json hash_files(const std::vector<fs::path>& files) {
  json out = json::object();
  for (const auto& f : files) out[f.string()] = sha256_file(f);
  return out;
}

StageReport run_stage(Manifest& manifest, const Stage& stage) {
  const auto start = std::chrono::steady_clock::now();
  StageReport report{stage.name};
  try {
    const auto inputs = hash_files(stage.inputs);
    const auto params_hash = sha256_hex(stage.params.dump());
    if (const auto* prev = manifest.stage(stage.name)) {
      bool fresh = prev->value("inputs", json()) == inputs && prev->value("params_hash", "") == params_hash;
      const auto outputs = prev->value("outputs", json::object());
      for (const auto& o : stage.outputs) {
        if (!fresh) break;
        fresh = fs::exists(o) && outputs.contains(o.string()) && outputs[o.string()] == sha256_file(o);
      }
      if (fresh) {
        report.cached = true;
        report.count = prev->value("count", std::size_t{0});
        log::info("stage " + stage.name + ": cached");
        return report;
      }
    }
    log::info("stage " + stage.name + ": running");
    for (const auto& o : stage.outputs) {
      if (o.has_parent_path()) fs::create_directories(o.parent_path());
    }
    report.count = stage.run();
    json entry;
    entry["inputs"] = inputs;
    entry["params"] = stage.params;
    entry["params_hash"] = params_hash;
    entry["outputs"] = hash_files(stage.outputs);
    entry["count"] = report.count;
    entry["completed_at"] = utc_now();
    manifest.record(stage.name, std::move(entry));
  } catch (const std::exception& e) {
    throw Error("stage '" + stage.name + "' failed: " + e.what());
  }
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

// Lazily loaded inputs shared between stages; nothing is read when every stage is cached.
class Context {
 public:
  explicit Context(const PipelineConfig& c) : c_(c) {}

  const Tokenizer& tokenizer() {
    if (!tokenizer_) {
      if (c_.stopwords) stopwords_ = std::make_unique<StopwordList>(StopwordList::load(*c_.stopwords));
      tokenizer_ = std::make_unique<Tokenizer>(stopwords_ ? *stopwords_ : StopwordList::english());
    }
    return *tokenizer_;
  }

  const Corpus& sources() {
    if (!sources_) sources_ = std::make_unique<Corpus>(Corpus::load(c_.source_corpus, c_.source_tag, tokenizer()));
    return *sources_;
  }

  const Corpus& targets() {
    if (!targets_) targets_ = std::make_unique<Corpus>(Corpus::load(c_.target_corpus, c_.target_tag, tokenizer()));
    return *targets_;
  }

  const WordVectorTable* words() {
    if (!words_ && c_.word_vectors) {
      log::info("loading word vectors " + c_.word_vectors->string());
      words_ = std::make_unique<WordVectorTable>(load_word_vectors(*c_.word_vectors));
    }
    return words_.get();
  }

  EmbeddingStrategy strategy(const std::string& spec) {
    if (spec == "avg") {
      if (!words()) throw InvalidArgument("embedding 'avg' requires word_vectors");
      return EmbeddingStrategy::average(*words(), c_.content_only);
    }
    return EmbeddingStrategy::parse(spec, nullptr);
  }

 private:
  const PipelineConfig& c_;
  std::unique_ptr<StopwordList> stopwords_;
  std::unique_ptr<Tokenizer> tokenizer_;
  std::unique_ptr<Corpus> sources_, targets_;
  std::unique_ptr<WordVectorTable> words_;
};

std::vector<fs::path> embedding_inputs(const PipelineConfig& c, const fs::path& corpus, const std::string& spec) {
  std::vector<fs::path> in{corpus};
  if (c.stopwords) in.push_back(*c.stopwords);
  if (auto p = precomputed_path(spec)) {
    in.push_back(*p);
  } else if (c.word_vectors) {
    in.push_back(*c.word_vectors);
  }
  return in;
}

}  // namespace

void apply_override(json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw InvalidArgument("override must look like key=value: '" + assignment + "'");
  const auto key = assignment.substr(0, eq);
  const auto raw = assignment.substr(eq + 1);
  json* node = &j;
  std::size_t pos = 0;
  while (true) {
    const auto dot = key.find('.', pos);
    const auto part = key.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
    if (part.empty()) throw InvalidArgument("empty key segment in override '" + assignment + "'");
    if (!node->is_object()) *node = json::object();
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    pos = dot + 1;
  }
  json value = json::parse(raw, nullptr, false);
  *node = value.is_discarded() ? json(raw) : value;
}

PipelineConfig PipelineConfig::from_json(const json& j, const fs::path& base) {
  static const std::set<std::string> known = {
      "source_corpus", "target_corpus", "tags", "stopwords", "word_vectors", "doc_embedding",
      "sent_embedding", "content_only", "normalize", "k_doc", "k_sent", "theta_d", "theta_s", "scorer",
      "scorer_params", "filter", "index", "seed", "threads", "work_dir", "output", "output_tsv", "summary"};
  if (!j.is_object()) throw InvalidArgument("pipeline config must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (!known.count(k)) throw InvalidArgument("unknown config key '" + k + "'");
  }
  PipelineConfig c;
  try {
    const auto path_of = [&](const char* key) { return resolve(fs::path(j.at(key).get<std::string>()), base); };
    const auto opt_path = [&](const char* key) -> std::optional<fs::path> {
      if (!j.contains(key) || j[key].is_null()) return std::nullopt;
      return path_of(key);
    };
    if (j.contains("source_corpus")) c.source_corpus = path_of("source_corpus");
    if (j.contains("target_corpus")) c.target_corpus = path_of("target_corpus");
    if (j.contains("tags")) {
      c.source_tag = j["tags"].value("source", c.source_tag);
      c.target_tag = j["tags"].value("target", c.target_tag);
    }
    c.stopwords = opt_path("stopwords");
    c.word_vectors = opt_path("word_vectors");
    c.doc_embedding = resolve_spec(j.value("doc_embedding", c.doc_embedding), base);
    c.sent_embedding = resolve_spec(j.value("sent_embedding", c.sent_embedding), base);
    c.content_only = j.value("content_only", c.content_only);
    c.normalize = j.value("normalize", c.normalize);
    const auto count = [&](const char* key, std::size_t fallback) -> std::size_t {
      if (!j.contains(key)) return fallback;
      const auto v = j[key].get<std::int64_t>();
      return v < 0 ? 0 : static_cast<std::size_t>(v);
    };
    c.k_doc = count("k_doc", c.k_doc);
    c.k_sent = count("k_sent", c.k_sent);
    c.theta_d = j.value("theta_d", c.theta_d);
    c.theta_s = j.value("theta_s", c.theta_s);
    c.scorer = j.value("scorer", c.scorer);
    if (j.contains("scorer_params")) {
      for (const auto& [k, v] : j["scorer_params"].items()) c.scorer_params[k] = json_scalar_string(v);
    }
    if (j.contains("filter")) {
      const auto& f = j["filter"];
      c.filter.min_overlap = f.value("min_overlap", c.filter.min_overlap);
      c.filter.max_len_ratio = f.value("max_len_ratio", c.filter.max_len_ratio);
      if (f.contains("exclude") && !f["exclude"].is_null()) {
        c.filter.exclude = resolve(fs::path(f["exclude"].get<std::string>()), base);
      }
      if (f.contains("stage")) c.filter.stage = parse_stage(f["stage"].get<std::string>());
      c.filter.enabled = f.value("enabled", c.filter.enabled);
    }
    if (j.contains("index")) {
      const auto& ix = j["index"];
      c.index.trees = ix.value("trees", c.index.trees);
      c.index.leaf_size = ix.value("leaf_size", c.index.leaf_size);
      c.index.search_k = ix.value("search_k", c.index.search_k);
    }
    c.seed = j.value("seed", c.seed);
    c.threads = j.value("threads", c.threads);
    if (j.contains("work_dir")) c.work_dir = path_of("work_dir");
    if (j.contains("output")) c.output = path_of("output");
    c.output_tsv = opt_path("output_tsv");
    c.summary = opt_path("summary");
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("invalid pipeline config: ") + e.what());
  }
  c.index.seed = c.seed;
  return c;
}

PipelineConfig PipelineConfig::load(const fs::path& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw InvalidArgument("config " + path.string() + " is not valid JSON: " + e.what());
  }
  for (const auto& o : overrides) apply_override(j, o);
  return from_json(j, path.parent_path());
}

json PipelineConfig::to_json() const {
  json j;
  j["source_corpus"] = source_corpus.string();
  j["target_corpus"] = target_corpus.string();
  j["tags"] = {{"source", source_tag}, {"target", target_tag}};
  j["stopwords"] = stopwords ? json(stopwords->string()) : json(nullptr);
  j["word_vectors"] = word_vectors ? json(word_vectors->string()) : json(nullptr);
  j["doc_embedding"] = doc_embedding;
  j["sent_embedding"] = sent_embedding;
  j["content_only"] = content_only;
  j["normalize"] = normalize;
  j["k_doc"] = k_doc;
  j["k_sent"] = k_sent;
  j["theta_d"] = theta_d;
  j["theta_s"] = theta_s;
  j["scorer"] = scorer;
  j["scorer_params"] = scorer_params;
  j["filter"] = {{"min_overlap", filter.min_overlap},
                 {"max_len_ratio", filter.max_len_ratio},
                 {"exclude", filter.exclude ? json(filter.exclude->string()) : json(nullptr)},
                 {"stage", filter.stage == FilterStage::kGroup ? "group" : "pair"},
                 {"enabled", filter.enabled}};
  j["index"] = {{"trees", index.trees}, {"leaf_size", index.leaf_size}, {"search_k", index.search_k}};
  j["seed"] = seed;
  j["threads"] = threads;
  j["work_dir"] = work_dir.string();
  j["output"] = output.string();
  j["output_tsv"] = output_tsv ? json(output_tsv->string()) : json(nullptr);
  j["summary"] = summary ? json(summary->string()) : json(nullptr);
  return j;
}

std::vector<Finding> validate_config(const PipelineConfig& c) {
  std::vector<Finding> out;
  const auto error = [&](std::string key, std::string msg) {
    out.push_back({Finding::Severity::kError, std::move(key), std::move(msg)});
  };
  const auto warning = [&](std::string key, std::string msg) {
    out.push_back({Finding::Severity::kWarning, std::move(key), std::move(msg)});
  };

  if (c.source_corpus.empty()) error("source_corpus", "source corpus path is required");
  if (c.target_corpus.empty()) error("target_corpus", "target corpus path is required");
  if (!c.source_corpus.empty() && !c.target_corpus.empty() && same_path(c.source_corpus, c.target_corpus)) {
    error("target_corpus", "source and target corpus are the same file");
  }
  if (c.output.empty()) error("output", "output path is required");
  for (const auto& in : {c.source_corpus, c.target_corpus}) {
    if (in.empty()) continue;
    if (!c.output.empty() && same_path(in, c.output)) error("output", "output would overwrite input " + in.string());
    if (c.output_tsv && same_path(in, *c.output_tsv)) {
      error("output_tsv", "output_tsv would overwrite input " + in.string());
    }
  }
  if (c.output_tsv && !c.output.empty() && same_path(c.output, *c.output_tsv)) {
    error("output_tsv", "output and output_tsv are the same file");
  }

  if (c.k_doc == 0) error("k_doc", "k_doc must be at least 1");
  if (c.k_sent == 0) error("k_sent", "k_sent must be at least 1");
  if (!(c.theta_d >= -1.0 && c.theta_d <= 1.0)) error("theta_d", "theta_d is a cosine threshold and must lie in [-1,1]");

  std::optional<ScorerKind> kind;
  try {
    kind = parse_scorer_kind(c.scorer);
    Scorer::parse(c.scorer, c.scorer_params);
  } catch (const std::exception& e) {
    error("scorer", e.what());
  }
  if (kind) {
    const double lo = *kind == ScorerKind::kCosine ? -1.0 : 0.0;
    const double hi = *kind == ScorerKind::kBm25 ? std::numeric_limits<double>::infinity() : 1.0;
    if (!(c.theta_s >= lo && c.theta_s <= hi)) {
      error("theta_s", "theta_s is outside the range of scorer '" + c.scorer + "'");
    } else if (*kind == ScorerKind::kCosine && c.theta_s < 0.3) {
      warning("theta_s", "theta_s below 0.3 with cosine admits mostly unrelated sentence pairs");
    }
    if ((*kind == ScorerKind::kWmd || *kind == ScorerKind::kRwmd) && !c.word_vectors) {
      error("word_vectors", "scorer '" + c.scorer + "' needs word_vectors");
    }
  }
  const auto check_embedding = [&](const char* key, const std::string& spec, bool used) {
    if (!used) return;
    if (spec == "avg") {
      if (!c.word_vectors) error(key, "embedding 'avg' needs word_vectors");
    } else if (!precomputed_path(spec)) {
      error(key, "embedding must be 'avg' or 'precomputed:<path>', got '" + spec + "'");
    }
  };
  check_embedding("doc_embedding", c.doc_embedding, true);
  check_embedding("sent_embedding", c.sent_embedding, kind == ScorerKind::kCosine);

  if (!(c.filter.min_overlap >= 0.0 && c.filter.min_overlap <= 1.0)) {
    error("filter.min_overlap", "min_overlap must lie in [0,1]");
  }
  if (!(c.filter.max_len_ratio > 0.0)) error("filter.max_len_ratio", "max_len_ratio must be positive");
  if (c.index.trees == 0) error("index.trees", "index needs at least one tree");
  if (c.index.leaf_size == 0) error("index.leaf_size", "leaf_size must be at least 1");
  if (c.threads == 0) error("threads", "threads must be at least 1");
  return out;
}

json RunSummary::to_json() const {
  json j;
  j["stages"] = json::array();
  for (const auto& s : stages) j["stages"].push_back({{"name", s.name}, {"cached", s.cached}, {"count", s.count}});
  j["doc_pairs"] = doc_pairs;
  j["groups"] = groups;
  j["mean_source_tokens"] = mean_source_tokens;
  j["mean_target_tokens"] = mean_target_tokens;
  j["multi_sentence_source_pct"] = multi_sentence_source_pct;
  j["multi_sentence_target_pct"] = multi_sentence_target_pct;
  return j;
}

RunSummary run_pipeline(const PipelineConfig& c) {
  const auto findings = validate_config(c);
  std::string errors;
  for (const auto& f : findings) {
    if (f.severity == Finding::Severity::kWarning) {
      log::warn(f.key + ": " + f.message);
    } else {
      errors += "\n  " + f.key + ": " + f.message;
    }
  }
  if (!errors.empty()) throw InvalidArgument("invalid pipeline config:" + errors);

  fs::create_directories(c.work_dir);
  Manifest manifest(c.work_dir / "manifest.json");
  Context ctx(c);
  const auto scorer = Scorer::parse(c.scorer, c.scorer_params);
  const bool cosine = scorer.needs_embeddings();

  const auto w = [&](const char* name) { return c.work_dir / name; };
  const auto src_docs = w("source_docs.lhae"), tgt_docs = w("target_docs.lhae");
  const auto src_sents = w("source_sents.lhae"), tgt_sents = w("target_sents.lhae");
  const auto index_file = w("target_docs.lhai"), doc_pairs_file = w("doc_pairs.tsv");

  const auto embed_stage = [&](std::string name, bool source, EmbeddingLevel level, const fs::path& out) {
    const auto& spec = level == EmbeddingLevel::kDocument ? c.doc_embedding : c.sent_embedding;
    json params = {{"level", level == EmbeddingLevel::kDocument ? "document" : "sentence"},
                   {"strategy", spec},
                   {"content_only", c.content_only},
                   {"normalize", c.normalize},
                   {"tag", source ? c.source_tag : c.target_tag}};
    return Stage{std::move(name), embedding_inputs(c, source ? c.source_corpus : c.target_corpus, spec),
                 std::move(params), {out}, [&ctx, &c, source, level, spec, out] {
                   const auto& corpus = source ? ctx.sources() : ctx.targets();
                   const auto m = embed_corpus(corpus.documents(), level, ctx.strategy(spec), c.normalize);
                   save_embeddings(m, out);
                   return m.rows();
                 }};
  };

  std::vector<Stage> stages;
  stages.push_back(embed_stage("embed-source-docs", true, EmbeddingLevel::kDocument, src_docs));
  stages.push_back(embed_stage("embed-target-docs", false, EmbeddingLevel::kDocument, tgt_docs));
  if (cosine) {
    stages.push_back(embed_stage("embed-source-sents", true, EmbeddingLevel::kSentence, src_sents));
    stages.push_back(embed_stage("embed-target-sents", false, EmbeddingLevel::kSentence, tgt_sents));
  }
  stages.push_back(Stage{"index-target-docs",
                         {tgt_docs},
                         {{"trees", c.index.trees},
                          {"leaf_size", c.index.leaf_size},
                          {"search_k", c.index.search_k},
                          {"seed", c.index.seed}},
                         {index_file},
                         [&] {
                           const auto index = AnnIndex::build(load_embeddings(tgt_docs), c.index);
                           index.save(index_file);
                           return index.size();
                         }});
  stages.push_back(Stage{"align-docs",
                         {src_docs, index_file},
                         {{"k_doc", c.k_doc}, {"theta_d", c.theta_d}},
                         {doc_pairs_file},
                         [&] {
                           const auto pairs = align_documents(load_embeddings(src_docs), AnnIndex::load(index_file),
                                                              c.k_doc, c.theta_d, c.threads);
                           save_doc_pairs(doc_pairs_file, pairs);
                           return pairs.size();
                         }});

  std::vector<fs::path> sent_inputs{doc_pairs_file, c.source_corpus, c.target_corpus};
  if (c.stopwords) sent_inputs.push_back(*c.stopwords);
  if (cosine) {
    sent_inputs.push_back(src_sents);
    sent_inputs.push_back(tgt_sents);
  }
  if (scorer.needs_word_vectors()) sent_inputs.push_back(*c.word_vectors);
  if (c.filter.enabled && c.filter.exclude) sent_inputs.push_back(*c.filter.exclude);
  std::vector<fs::path> sent_outputs{c.output};
  if (c.output_tsv) sent_outputs.push_back(*c.output_tsv);
  json sent_params = {{"k_sent", c.k_sent},
                      {"theta_s", c.theta_s},
                      {"scorer", c.scorer},
                      {"scorer_params", c.scorer_params},
                      {"tags", {c.source_tag, c.target_tag}},
                      {"filter",
                       {{"min_overlap", c.filter.min_overlap},
                        {"max_len_ratio", c.filter.max_len_ratio},
                        {"stage", c.filter.stage == FilterStage::kGroup ? "group" : "pair"},
                        {"enabled", c.filter.enabled}}}};
  stages.push_back(Stage{"align-sents", sent_inputs, sent_params, sent_outputs, [&] {
                           SentAlignConfig sc;
                           sc.k = c.k_sent;
                           sc.theta_s = c.theta_s;
                           sc.scorer = scorer;
                           sc.filter.min_overlap = c.filter.min_overlap;
                           sc.filter.max_len_ratio = c.filter.max_len_ratio;
                           sc.filter.stage = c.filter.stage;
                           if (c.filter.exclude) sc.filter.load_exclusions(*c.filter.exclude);
                           sc.apply_filters = c.filter.enabled;
                           sc.threads = c.threads;

                           ScoringResources res;
                           EmbeddingMatrix se, te;
                           Bm25Stats bm25;
                           if (cosine) {
                             se = load_embeddings(src_sents);
                             te = load_embeddings(tgt_sents);
                             res.source_embeddings = &se;
                             res.target_embeddings = &te;
                           }
                           if (scorer.needs_word_vectors()) res.words = ctx.words();
                           if (scorer.needs_bm25()) {
                             std::vector<std::vector<std::string>> units;
                             for (const auto& d : ctx.targets().documents()) {
                               for (const auto& s : d.sentences) units.push_back(content_tokens(s));
                             }
                             bm25 = Bm25Stats::build(units, scorer.params().k1, scorer.params().b);
                             res.bm25 = &bm25;
                           }
                           SentAlignStats stats;
                           const auto groups = align_sentences(load_doc_pairs(doc_pairs_file), ctx.sources(),
                                                               ctx.targets(), sc, res, &stats);
                           if (stats.failed_doc_pairs) {
                             log::warn(std::to_string(stats.failed_doc_pairs) + " document pairs failed and were skipped");
                           }
                           save_groups_jsonl(c.output, groups);
                           if (c.output_tsv) save_groups_tsv(*c.output_tsv, groups);
                           return groups.size();
                         }});

  RunSummary summary;
  for (const auto& s : stages) summary.stages.push_back(run_stage(manifest, s));
  for (const auto& s : summary.stages) {
    if (s.name == "align-docs") summary.doc_pairs = s.count;
  }

  const auto groups = load_groups_jsonl(c.output);
  summary.groups = groups.size();
  if (!groups.empty()) {
    const auto& tok = ctx.tokenizer();
    double src_tokens = 0, tgt_tokens = 0;
    std::size_t multi_src = 0, multi_tgt = 0;
    for (const auto& g : groups) {
      src_tokens += static_cast<double>(tok.tokenize(g.source_text).size());
      tgt_tokens += static_cast<double>(tok.tokenize(g.target_text).size());
      multi_src += g.group.source_ordinals.size() > 1;
      multi_tgt += g.group.target_ordinals.size() > 1;
    }
    const auto n = static_cast<double>(groups.size());
    summary.mean_source_tokens = src_tokens / n;
    summary.mean_target_tokens = tgt_tokens / n;
    summary.multi_sentence_source_pct = 100.0 * static_cast<double>(multi_src) / n;
    summary.multi_sentence_target_pct = 100.0 * static_cast<double>(multi_tgt) / n;
  }
  const auto summary_path = c.summary ? *c.summary : c.work_dir / "summary.json";
  std::ofstream(summary_path, std::ios::binary) << summary.to_json().dump(2) << '\n';
  return summary;
}

namespace {

std::string to_hex(const unsigned char* bytes, unsigned len) {
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += hex[bytes[i] >> 4];
    out += hex[bytes[i] & 15];
  }
  return out;
}

}  // namespace

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr)) throw Error("SHA-256 failed");
  return to_hex(digest, len);
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || !EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr)) throw Error("SHA-256 init failed");
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  return to_hex(digest, len);
}

}  // namespace lha
