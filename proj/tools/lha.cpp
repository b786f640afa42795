#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lha/ann_index.hpp"
#include "lha/doc_align.hpp"
#include "lha/embeddings.hpp"
#include "lha/error.hpp"
#include "lha/evaluate.hpp"
#include "lha/log.hpp"
#include "lha/pipeline.hpp"
#include "lha/sent_align.hpp"

namespace fs = std::filesystem;
using namespace lha;

namespace {

std::map<std::string, std::string> parse_params(const std::vector<std::string>& kv) {
  std::map<std::string, std::string> out;
  for (const auto& s : kv) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw InvalidArgument("expected key=value, got '" + s + "'");
    out[s.substr(0, eq)] = s.substr(eq + 1);
  }
  return out;
}

struct Common {
  std::string stopwords;
  std::string word_vectors;
  unsigned threads = 1;

  std::unique_ptr<StopwordList> stop;
  std::unique_ptr<Tokenizer> tok;
  std::unique_ptr<WordVectorTable> words;

  const Tokenizer& tokenizer() {
    if (!tok) {
      if (!stopwords.empty()) stop = std::make_unique<StopwordList>(StopwordList::load(stopwords));
      tok = std::make_unique<Tokenizer>(stop ? *stop : StopwordList::english());
    }
    return *tok;
  }

  const WordVectorTable* table() {
    if (!words && !word_vectors.empty()) {
      log::info("loading word vectors " + word_vectors);
      words = std::make_unique<WordVectorTable>(load_word_vectors(word_vectors));
    }
    return words.get();
  }

  EmbeddingStrategy strategy(const std::string& spec, bool content_only = false) {
    if (spec == "avg") {
      if (!table()) throw InvalidArgument("strategy 'avg' needs --word-vectors");
      return EmbeddingStrategy::average(*table(), content_only);
    }
    return EmbeddingStrategy::parse(spec, nullptr);
  }
};

EmbeddingLevel parse_level(const std::string& s) {
  if (s == "doc" || s == "document") return EmbeddingLevel::kDocument;
  if (s == "sent" || s == "sentence") return EmbeddingLevel::kSentence;
  throw InvalidArgument("--level must be doc or sent");
}

void emit_report(const EvalReport& r, const std::string& json_out) {
  std::cout << r.to_table();
  if (!json_out.empty()) {
    std::ofstream out(json_out, std::ios::binary);
    if (!out) throw Error("cannot write " + json_out);
    out << r.to_json().dump(2) << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical document and sentence alignment between two monolingual corpora"};
  app.require_subcommand(1);
  app.fallthrough();
  bool quiet = false;
  Common common;
  app.add_flag("--quiet,-q", quiet, "Suppress progress logging");
  app.add_option("--threads", common.threads, "Worker threads")->check(CLI::PositiveNumber);

  // embed
  auto* embed = app.add_subcommand("embed", "Embed the documents or sentences of a corpus");
  std::string corpus, tag = "corpus", level = "doc", strategy = "avg", out;
  bool content_only = false, no_normalize = false;
  embed->add_option("--corpus", corpus, "JSONL corpus")->required()->check(CLI::ExistingFile);
  embed->add_option("--dataset-tag", tag, "Dataset tag");
  embed->add_option("--level", level, "doc or sent")->check(CLI::IsMember({"doc", "sent", "document", "sentence"}));
  embed->add_option("--strategy", strategy, "avg or precomputed:<path>");
  embed->add_option("--word-vectors", common.word_vectors, "Word-vector text file");
  embed->add_option("--stopwords", common.stopwords, "Stopword list");
  embed->add_flag("--content-only", content_only, "Average content tokens only");
  embed->add_flag("--no-normalize", no_normalize, "Keep raw vector norms");
  embed->add_option("--out", out, "Output .lhae file")->required();

  // index
  auto* index = app.add_subcommand("index", "Build an approximate nearest-neighbour index");
  std::string embeddings;
  AnnParams ann;
  index->add_option("--embeddings", embeddings, "Embedding matrix")->required()->check(CLI::ExistingFile);
  index->add_option("--trees", ann.trees, "Number of trees")->check(CLI::PositiveNumber);
  index->add_option("--leaf-size", ann.leaf_size, "Maximum leaf size")->check(CLI::PositiveNumber);
  index->add_option("--search-k", ann.search_k, "Default candidate budget (0 = automatic)");
  index->add_option("--seed", ann.seed, "Build seed");
  index->add_option("--out", out, "Output .lhai file")->required();

  // align-docs
  auto* adocs = app.add_subcommand("align-docs", "K nearest target documents per source document");
  std::string source_emb, index_file;
  std::size_t k = 5;
  double theta_d = 0.5;
  std::uint64_t search_k = 0;
  adocs->add_option("--source-embeddings", source_emb, "Source document embeddings")->required()->check(CLI::ExistingFile);
  adocs->add_option("--index", index_file, "Target document index")->required()->check(CLI::ExistingFile);
  adocs->add_option("--k", k, "Neighbours per source")->check(CLI::PositiveNumber);
  adocs->add_option("--theta-d", theta_d, "Minimum document similarity");
  adocs->add_option("--search-k", search_k, "Candidate budget override");
  adocs->add_option("--out", out, "Output TSV")->required();

  // align-sents
  auto* asents = app.add_subcommand("align-sents", "Sentence alignment inside aligned document pairs");
  std::string doc_pairs, src_corpus, tgt_corpus, src_tag = "source", tgt_tag = "target";
  std::string scorer_name = "cosine", src_sent_emb, tgt_sent_emb, exclude, filter_stage = "group", tsv;
  std::vector<std::string> scorer_params;
  double theta_s = 0.65, min_overlap = 0.4, max_len_ratio = 1.5;
  bool no_filter = false;
  std::size_t k_sent = 5;
  asents->add_option("--doc-pairs", doc_pairs, "Document pairs TSV")->required()->check(CLI::ExistingFile);
  asents->add_option("--source-corpus", src_corpus, "Source JSONL corpus")->required()->check(CLI::ExistingFile);
  asents->add_option("--target-corpus", tgt_corpus, "Target JSONL corpus")->required()->check(CLI::ExistingFile);
  asents->add_option("--source-tag", src_tag);
  asents->add_option("--target-tag", tgt_tag);
  asents->add_option("--stopwords", common.stopwords, "Stopword list");
  asents->add_option("--word-vectors", common.word_vectors, "Word-vector text file");
  asents->add_option("--scorer", scorer_name, "cosine, overlap, bm25, wmd or rwmd");
  asents->add_option("--scorer-param", scorer_params, "Scorer parameter k=v (k1, b)");
  asents->add_option("--strategy", strategy, "Sentence embedding when no matrices are given");
  asents->add_option("--source-embeddings", src_sent_emb, "Precomputed source sentence embeddings");
  asents->add_option("--target-embeddings", tgt_sent_emb, "Precomputed target sentence embeddings");
  asents->add_option("--k", k_sent, "Nearest neighbours per sentence")->check(CLI::PositiveNumber);
  asents->add_option("--theta-s", theta_s, "Minimum sentence similarity");
  asents->add_option("--min-overlap", min_overlap, "Minimum unigram overlap");
  asents->add_option("--max-len-ratio", max_len_ratio, "Maximum target/source token ratio");
  asents->add_option("--exclude", exclude, "Exclusion TSV source<TAB>target")->check(CLI::ExistingFile);
  asents->add_option("--filter-stage", filter_stage, "group or pair")->check(CLI::IsMember({"group", "pair"}));
  asents->add_flag("--no-filter", no_filter, "Disable overlap/length/exclusion filters");
  asents->add_option("--out", out, "Output JSONL")->required();
  asents->add_option("--tsv", tsv, "Also write source<TAB>target TSV");

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate against the annotated alignment data");
  eval->require_subcommand(1);
  std::string data_dir, doc_strategy = "avg", mode = "lha", rescorer, json_out;
  std::size_t noise = 1000, rescore_top = 50, eval_k = 1;
  std::uint64_t seed = 1;
  bool use_index = false, good_partial = false;
  const auto eval_options = [&](CLI::App* sub) {
    sub->add_option("--data", data_dir, "Evaluation data directory")->required();
    sub->add_option("--word-vectors", common.word_vectors, "Word-vector text file");
    sub->add_option("--stopwords", common.stopwords, "Stopword list");
    sub->add_option("--scorer", scorer_name, "cosine, overlap, bm25, wmd or rwmd");
    sub->add_option("--scorer-param", scorer_params, "Scorer parameter k=v");
    sub->add_option("--k", eval_k, "Neighbours per unit (0 = every pair)");
    sub->add_flag("--good-partial", good_partial, "Count good_partial pairs as positives");
    sub->add_option("--json", json_out, "Write the report as JSON");
  };
  auto* eval_sent = eval->add_subcommand("sent", "Sentence alignment within gold article pairs");
  eval_options(eval_sent);
  eval_sent->add_option("--strategy", strategy, "Sentence embedding");
  eval_sent->add_option("--rescorer", rescorer, "Re-score the top candidates with this scorer");
  eval_sent->add_option("--rescore-top", rescore_top, "Candidates re-scored per unit");
  auto* eval_doc = eval->add_subcommand("doc", "Document alignment with noise articles");
  eval_options(eval_doc);
  eval_doc->add_option("--doc-strategy", doc_strategy, "Document embedding");
  eval_doc->add_option("--noise", noise, "Noise articles per side");
  eval_doc->add_option("--seed", seed, "Noise sampling seed");
  eval_doc->add_flag("--use-index", use_index, "Query an index instead of an exhaustive scan");
  auto* eval_joint_cmd = eval->add_subcommand("joint", "Sentence alignment across the noisy collection");
  eval_options(eval_joint_cmd);
  eval_joint_cmd->add_option("--mode", mode, "lha or global")->check(CLI::IsMember({"lha", "global"}));
  eval_joint_cmd->add_option("--strategy", strategy, "Sentence embedding");
  eval_joint_cmd->add_option("--doc-strategy", doc_strategy, "Document embedding");
  eval_joint_cmd->add_option("--noise", noise, "Noise articles per side");
  eval_joint_cmd->add_option("--seed", seed, "Noise sampling and index seed");
  eval_joint_cmd->add_flag("--use-index", use_index, "Query an index instead of an exhaustive scan");
  eval_joint_cmd->add_option("--rescorer", rescorer, "Re-score the top candidates with this scorer");
  eval_joint_cmd->add_option("--rescore-top", rescore_top, "Candidates re-scored per unit");

  // run
  auto* run = app.add_subcommand("run", "Run the full pipeline from a config file");
  std::string config_path;
  std::vector<std::string> sets;
  bool check_only = false;
  run->add_option("--config", config_path, "Pipeline config JSON")->required()->check(CLI::ExistingFile);
  run->add_option("--set", sets, "Override a config key (key=value, dotted for nested keys)");
  run->add_flag("--check", check_only, "Validate the config and exit");

  // convert-gold
  auto* convert = app.add_subcommand("convert-gold", "Convert labelled TSV pairs into the evaluation layout");
  std::string gold_tsv;
  convert->add_option("--tsv", gold_tsv, "article<TAB>label<TAB>source<TAB>target")->required()->check(CLI::ExistingFile);
  convert->add_option("--out", out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);
  log::set_quiet(quiet);

  try {
    if (*embed) {
      const auto c = Corpus::load(corpus, tag, common.tokenizer());
      const auto m = embed_corpus(c.documents(), parse_level(level), common.strategy(strategy, content_only), !no_normalize);
      save_embeddings(m, out);
      log::info("wrote " + std::to_string(m.rows()) + " rows to " + out);
    } else if (*index) {
      const auto idx = AnnIndex::build(load_embeddings(embeddings), ann);
      idx.save(out);
      log::info("indexed " + std::to_string(idx.size()) + " rows");
    } else if (*adocs) {
      const auto src = load_embeddings(source_emb);
      const auto idx = AnnIndex::load(index_file);
      std::vector<DocPair> pairs;
      if (search_k) {
        // query with an explicit budget
        for (std::size_t r = 0; r < src.rows(); ++r) {
          for (const auto& n : idx.query(src.row(r), k, search_k)) {
            if (n.similarity >= theta_d) pairs.push_back({src.unit_id(r), n.unit_id, n.similarity});
          }
        }
      } else {
        pairs = align_documents(src, idx, k, theta_d, common.threads);
      }
      save_doc_pairs(out, pairs);
      log::info("wrote " + std::to_string(pairs.size()) + " document pairs");
    } else if (*asents) {
      const auto sources = Corpus::load(src_corpus, src_tag, common.tokenizer());
      const auto targets = Corpus::load(tgt_corpus, tgt_tag, common.tokenizer());
      SentAlignConfig sc;
      sc.k = k_sent;
      sc.theta_s = theta_s;
      sc.scorer = Scorer::parse(scorer_name, parse_params(scorer_params));
      sc.filter.min_overlap = min_overlap;
      sc.filter.max_len_ratio = max_len_ratio;
      sc.filter.stage = filter_stage == "pair" ? FilterStage::kPair : FilterStage::kGroup;
      if (!exclude.empty()) sc.filter.load_exclusions(exclude);
      sc.filter.validate();
      sc.apply_filters = !no_filter;
      sc.threads = common.threads;

      ScoringResources res;
      EmbeddingMatrix se, te;
      Bm25Stats bm25;
      if (sc.scorer.needs_embeddings()) {
        if (!src_sent_emb.empty() && !tgt_sent_emb.empty()) {
          se = load_embeddings(src_sent_emb);
          te = load_embeddings(tgt_sent_emb);
          se.normalize();
          te.normalize();
        } else {
          const auto strat = common.strategy(strategy);
          se = embed_corpus(sources.documents(), EmbeddingLevel::kSentence, strat, true);
          te = embed_corpus(targets.documents(), EmbeddingLevel::kSentence, strat, true);
        }
        res.source_embeddings = &se;
        res.target_embeddings = &te;
      }
      if (sc.scorer.needs_word_vectors()) {
        if (!common.table()) throw InvalidArgument("scorer '" + scorer_name + "' needs --word-vectors");
        res.words = common.table();
      }
      if (sc.scorer.needs_bm25()) {
        std::vector<std::vector<std::string>> units;
        for (const auto& d : targets.documents()) {
          for (const auto& s : d.sentences) units.push_back(content_tokens(s));
        }
        bm25 = Bm25Stats::build(units, sc.scorer.params().k1, sc.scorer.params().b);
        res.bm25 = &bm25;
      }
      SentAlignStats stats;
      const auto groups = align_sentences(load_doc_pairs(doc_pairs), sources, targets, sc, res, &stats);
      save_groups_jsonl(out, groups);
      if (!tsv.empty()) save_groups_tsv(tsv, groups);
      log::info("doc pairs " + std::to_string(stats.doc_pairs) + ", nn pairs " + std::to_string(stats.nn_pairs) +
                ", groups " + std::to_string(stats.groups_merged) + ", filtered " +
                std::to_string(stats.groups_filtered) + ", duplicates " + std::to_string(stats.duplicates_removed) +
                ", emitted " + std::to_string(groups.size()));
    } else if (*eval) {
      const bool need_noise = !*eval_sent;
      const auto data = EvalDataset::load(data_dir, common.tokenizer(), need_noise);
      EvalConfig ec;
      ec.scorer = Scorer::parse(scorer_name, parse_params(scorer_params));
      ec.k = eval_k;
      ec.words = common.table();
      ec.good_partial_positive = good_partial;
      ec.noise_per_side = noise;
      ec.seed = seed;
      ec.use_index = use_index;
      ec.index.seed = seed;
      ec.threads = common.threads;
      std::optional<EmbeddingStrategy> sent_strategy, doc_strat;
      if (ec.scorer.needs_embeddings() && (*eval_sent || *eval_joint_cmd)) sent_strategy = common.strategy(strategy);
      if (*eval_joint_cmd || (*eval_doc && ec.scorer.needs_embeddings())) doc_strat = common.strategy(doc_strategy);
      ec.sentence_embedder = sent_strategy ? &*sent_strategy : nullptr;
      ec.document_embedder = doc_strat ? &*doc_strat : nullptr;
      if (!rescorer.empty()) {
        ec.rescorer = Scorer::parse(rescorer);
        ec.rescore_top = rescore_top;
      }
      if ((ec.scorer.needs_word_vectors() || (ec.rescorer && ec.rescorer->needs_word_vectors())) && !ec.words) {
        throw InvalidArgument("word-vector scorers need --word-vectors");
      }
      EvalReport report;
      if (*eval_sent) {
        report = eval_sentence_alignment(data, ec);
      } else if (*eval_doc) {
        report = eval_document_alignment(data, ec);
      } else {
        report = eval_joint(data, mode == "global" ? JointMode::kGlobal : JointMode::kLha, ec);
      }
      emit_report(report, json_out);
    } else if (*run) {
      const auto config = PipelineConfig::load(config_path, sets);
      if (check_only) {
        const auto findings = validate_config(config);
        bool bad = false;
        for (const auto& f : findings) {
          const bool err = f.severity == Finding::Severity::kError;
          bad |= err;
          std::cout << (err ? "error   " : "warning ") << f.key << ": " << f.message << '\n';
        }
        if (findings.empty()) std::cout << "config ok\n";
        return bad ? 2 : 0;
      }
      const auto summary = run_pipeline(config);
      std::cout << summary.to_json().dump(2) << '\n';
    } else if (*convert) {
      convert_labelled_tsv(gold_tsv, out);
      log::info("wrote evaluation files to " + out);
    }
  } catch (const std::exception& e) {
    std::cerr << "lha: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
