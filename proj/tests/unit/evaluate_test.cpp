#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "lha/error.hpp"
#include "lha/evaluate.hpp"
#include "oracles/oracles.hpp"

using namespace lha;

namespace {

std::vector<ScoredCandidate> scored_of(std::initializer_list<std::tuple<const char*, const char*, double>> items) {
  std::vector<ScoredCandidate> out;
  for (const auto& [a, b, s] : items) out.push_back({{a, b}, s});
  return out;
}

void expect_consistent(const EvalReport& r) {
  const double p = r.precision_at_max, q = r.recall_at_max;
  EXPECT_NEAR(r.f1_max, p + q > 0 ? 2 * p * q / (p + q) : 0.0, 1e-9);
  for (double x : {r.f1_max, p, q}) {
    EXPECT_GE(x, 0.0);
    EXPECT_LE(x, 1.0);
  }
}

// Synthetic collection with precomputed embeddings. Gold target sentences sit
// close to their source sentence; every noise target document carries
// distractors that sit even closer to a gold source sentence, while document
// vectors single out the right article.
struct Synthetic {
  EvalDataset data;
  EmbeddingStrategy sentences = EmbeddingStrategy::precomputed(EmbeddingMatrix(1));
  EmbeddingStrategy documents = EmbeddingStrategy::precomputed(EmbeddingMatrix(1));

  explicit Synthetic(std::uint64_t seed, std::size_t gold = 8, std::size_t per_doc = 4, std::size_t noise = 12) {
    constexpr std::size_t dim = 48;
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> g;
    const auto random_vec = [&] {
      std::vector<float> v(dim);
      for (auto& x : v) x = g(rng);
      normalize_vector(v);
      return v;
    };
    const auto near = [&](const std::vector<float>& base, float spread) {
      auto v = base;
      for (auto& x : v) x += spread * g(rng) / std::sqrt(float(dim));
      normalize_vector(v);
      return v;
    };
    EmbeddingMatrix sm(dim), dm(dim);
    std::vector<Document> src, tgt;
    std::vector<std::vector<float>> gold_source_rows;
    for (std::size_t d = 0; d < gold; ++d) {
      const auto topic = random_vec();
      const std::string s_id = "gs" + std::to_string(d), t_id = "gt" + std::to_string(d);
      dm.append(s_id, topic);
      dm.append(t_id, near(topic, 0.3f));
      std::vector<std::string> s_text, t_text;
      for (std::size_t i = 0; i < per_doc; ++i) {
        const auto a = random_vec();
        gold_source_rows.push_back(a);
        sm.append(sentence_unit_id(s_id, i), a);
        sm.append(sentence_unit_id(t_id, i), near(a, 0.5f));
        s_text.push_back("source " + std::to_string(d) + " " + std::to_string(i) + ".");
        t_text.push_back("target " + std::to_string(d) + " " + std::to_string(i) + ".");
        data.gold.push_back({sentence_unit_id(s_id, i), sentence_unit_id(t_id, i), GoldLabel::kGood});
      }
      src.push_back(testutil::make_doc(s_id, s_text));
      tgt.push_back(testutil::make_doc(t_id, t_text));
      data.gold_doc_pairs.emplace_back(s_id, t_id);
    }
    std::size_t next = 0;
    for (std::size_t n = 0; n < noise; ++n) {
      for (int side = 0; side < 2; ++side) {
        const std::string id = (side ? "nt" : "ns") + std::to_string(n);
        dm.append(id, random_vec());
        std::vector<std::string> text;
        for (std::size_t i = 0; i < per_doc; ++i) {
          const auto row = side ? near(gold_source_rows[next++ % gold_source_rows.size()], 0.2f) : random_vec();
          sm.append(sentence_unit_id(id, i), row);
          text.push_back("noise " + id + " " + std::to_string(i) + ".");
        }
        (side ? data.noise_targets : data.noise_sources).push_back(testutil::make_doc(id, text));
      }
    }
    data.gold_sources = Corpus(src);
    data.gold_targets = Corpus(tgt);
    sentences = EmbeddingStrategy::precomputed(sm);
    documents = EmbeddingStrategy::precomputed(dm);
  }

  EvalConfig config() const {
    EvalConfig c;
    c.sentence_embedder = &sentences;
    c.document_embedder = &documents;
    c.noise_per_side = data.noise_sources.size();
    return c;
  }
};

}  // namespace

TEST(GoldLabel, ParseVariants) {
  EXPECT_EQ(parse_gold_label("good"), GoldLabel::kGood);
  EXPECT_EQ(parse_gold_label("Good Partial"), GoldLabel::kGoodPartial);
  EXPECT_EQ(parse_gold_label("non-valid"), GoldLabel::kNonvalid);
  EXPECT_EQ(parse_gold_label("partial"), GoldLabel::kPartial);
  EXPECT_THROW(parse_gold_label("great"), InvalidArgument);
  for (auto l : {GoldLabel::kGood, GoldLabel::kGoodPartial, GoldLabel::kPartial, GoldLabel::kNonvalid}) {
    EXPECT_EQ(parse_gold_label(to_string(l)), l);
  }
}

TEST(F1maxSweep, Examples) {
  const auto r = f1max_sweep(scored_of({{"a", "b", 0.9}, {"a", "c", 0.8}}), {{"a", "b"}});
  EXPECT_DOUBLE_EQ(r.f1_max, 1.0);
  EXPECT_DOUBLE_EQ(r.best_threshold, 0.9);
  EXPECT_DOUBLE_EQ(r.precision_at_max, 1.0);
  EXPECT_DOUBLE_EQ(r.recall_at_max, 1.0);

  const auto sep = f1max_sweep(scored_of({{"a", "x", 0.9}, {"b", "y", 0.7}, {"c", "z", 0.2}}), {{"a", "x"}, {"b", "y"}});
  EXPECT_DOUBLE_EQ(sep.f1_max, 1.0);

  const auto none = f1max_sweep(scored_of({{"a", "x", 0.9}}), {{"q", "r"}});
  EXPECT_DOUBLE_EQ(none.f1_max, 0.0);
}

TEST(F1maxSweep, UnscoredGoldCountsAsMiss) {
  const auto r = f1max_sweep(scored_of({{"a", "b", 0.5}}), {{"a", "b"}, {"c", "d"}});
  EXPECT_DOUBLE_EQ(r.recall_at_max, 0.5);
  EXPECT_DOUBLE_EQ(r.f1_max, 2.0 / 3.0);
  EXPECT_EQ(r.positives_total, 2u);
}

TEST(F1maxSweep, TiesGoToHigherThreshold) {
  // cut 0.9: tp 1, retrieved 1 -> 2/3; cut 0.5: tp 2, retrieved 4 -> 4/6
  const auto r = f1max_sweep(scored_of({{"a", "1", 0.9}, {"b", "2", 0.5}, {"c", "3", 0.5}, {"d", "4", 0.5}}),
                             {{"a", "1"}, {"b", "2"}});
  EXPECT_DOUBLE_EQ(r.best_threshold, 0.9);
}

TEST(F1maxSweep, Errors) {
  EXPECT_THROW(f1max_sweep(scored_of({{"a", "b", 1}}), {}), InvalidArgument);
  EXPECT_THROW(f1max_sweep(scored_of({{"a", "b", 1}, {"a", "b", 0.5}}), {{"a", "b"}}), InvalidArgument);
  const auto empty = f1max_sweep({}, {{"a", "b"}});
  EXPECT_DOUBLE_EQ(empty.f1_max, 0.0);
  EXPECT_TRUE(std::isinf(empty.best_threshold));
  EXPECT_TRUE(empty.to_json()["best_threshold"].is_null());
}

TEST(F1maxSweep, MatchesBruteForce) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 300; ++trial) {
    std::uniform_int_distribution<int> n(1, 30), level(0, trial % 2 ? 1000 : 5);
    std::vector<ScoredCandidate> scored;
    std::vector<std::pair<oracle::Key, double>> plain;
    std::set<PairKey> gold;
    for (int i = n(rng); i > 0; --i) {
      PairKey key{"s" + std::to_string(i), "t" + std::to_string(i)};
      const double s = level(rng) / 7.0;
      scored.push_back({key, s});
      plain.emplace_back(key, s);
      if (rng() % 3 == 0) gold.insert(key);
    }
    gold.insert({"unscored", "gold"});
    const auto r = f1max_sweep(scored, gold);
    const auto o = oracle::brute_force_sweep(plain, gold);
    EXPECT_EQ(r.f1_max, o.f1);
    EXPECT_EQ(r.best_threshold, o.threshold);
    EXPECT_EQ(r.retrieved_at_max, o.retrieved);
    EXPECT_EQ(r.true_positives_at_max, o.true_positives);
    expect_consistent(r);
  }
}

TEST(EvalReport, JsonAndTable) {
  auto r = f1max_sweep(scored_of({{"a", "b", 0.9}}), {{"a", "b"}});
  r.task = "sentence";
  r.seed = 7;
  const auto j = r.to_json();
  EXPECT_EQ(j["seed"], 7);
  EXPECT_DOUBLE_EQ(j["tp_percent"].get<double>(), 100.0);
  EXPECT_NE(r.to_table().find("F1max"), std::string::npos);
}

TEST(EvalSentence, OracleScorerIsPerfect) {
  Synthetic s(1, 4, 3, 0);
  const auto gold = s.data.positives();
  const MatrixFn oracle_fn = [&](const Document& a, const Document& b) {
    SimMatrix m;
    for (const auto& x : a.sentences) m.source_ids.push_back(x.unit_id());
    for (const auto& y : b.sentences) m.target_ids.push_back(y.unit_id());
    for (const auto& x : m.source_ids) {
      for (const auto& y : m.target_ids) m.values.push_back(gold.count({x, y}) ? 1.0 : 0.0);
    }
    return m;
  };
  const auto r = eval_sentence_alignment(s.data, oracle_fn, 0);
  EXPECT_DOUBLE_EQ(r.f1_max, 1.0);
  EXPECT_EQ(r.candidates, 4u * 3u * 3u);
  EXPECT_EQ(r.units, 4u * 3u * 2u);
}

TEST(EvalSentence, EmbeddingConfig) {
  Synthetic s(2, 5, 4, 0);
  const auto r = eval_sentence_alignment(s.data, s.config());
  EXPECT_GT(r.f1_max, 0.9);
  expect_consistent(r);
}

TEST(EvalDocument, SelfPairedWithoutNoiseIsPerfect) {
  Synthetic s(3, 6, 2, 0);
  auto cfg = s.config();
  // self-paired: use the source document rows for both sides
  EvalDataset self = s.data;
  std::vector<Document> renamed;
  self.gold_doc_pairs.clear();
  for (const auto& d : s.data.gold_sources.documents()) self.gold_doc_pairs.emplace_back(d.doc_id, d.doc_id);
  self.gold_targets = s.data.gold_sources;
  cfg.noise_per_side = 0;
  const auto r = eval_document_alignment(self, cfg);
  EXPECT_DOUBLE_EQ(r.f1_max, 1.0);
  EXPECT_EQ(r.seed, std::optional<std::uint64_t>(1));
}

TEST(EvalDocument, WordScorerPath) {
  Synthetic s(4, 4, 2, 3);
  auto cfg = s.config();
  cfg.scorer = Scorer::parse("overlap");
  // texts share "source"/"target" prefixes only; report must still be well formed
  const auto r = eval_document_alignment(s.data, cfg);
  expect_consistent(r);
  EXPECT_EQ(r.units, 2u * (4 + 3));
}

TEST(EvalJoint, LhaDominatesGlobal) {
  Synthetic s(5);
  const auto cfg = s.config();
  const auto lha = eval_joint(s.data, JointMode::kLha, cfg);
  const auto global = eval_joint(s.data, JointMode::kGlobal, cfg);
  EXPECT_GT(lha.f1_max, global.f1_max + 0.1) << lha.f1_max << " vs " << global.f1_max;
  EXPECT_TRUE(lha.best_doc_threshold.has_value());
  expect_consistent(lha);
  expect_consistent(global);
}

TEST(EvalJoint, IndexedRunsAreDeterministic) {
  Synthetic s(6);
  auto cfg = s.config();
  cfg.use_index = true;
  cfg.index.trees = 3;
  const auto a = eval_joint(s.data, JointMode::kGlobal, cfg);
  const auto b = eval_joint(s.data, JointMode::kGlobal, cfg);
  EXPECT_EQ(a.f1_max, b.f1_max);
  EXPECT_EQ(a.best_threshold, b.best_threshold);
  EXPECT_EQ(a.candidates, b.candidates);
}

TEST(EvalJoint, GlobalNeedsEmbeddingRetrieval) {
  Synthetic s(7, 2, 2, 1);
  auto cfg = s.config();
  cfg.scorer = Scorer::parse("overlap");
  EXPECT_THROW(eval_joint(s.data, JointMode::kGlobal, cfg), InvalidArgument);
}

TEST(WithNoise, SeededAndSized) {
  Synthetic s(8, 2, 1, 10);
  const auto [a1, b1] = with_noise(s.data, 4, 99);
  const auto [a2, b2] = with_noise(s.data, 4, 99);
  const auto [a3, b3] = with_noise(s.data, 4, 100);
  EXPECT_EQ(a1.size(), 6u);
  EXPECT_EQ(b1.size(), 6u);
  EXPECT_EQ(a1.documents(), a2.documents());
  EXPECT_EQ(b1.documents(), b2.documents());
  EXPECT_NE(a1.documents(), a3.documents());
  EXPECT_THROW(with_noise(s.data, 11, 1), InvalidArgument);
}

TEST(Dataset, ConvertAndLoad) {
  testutil::TempDir dir;
  testutil::write_file(dir / "pairs.tsv",
                       "Art One\tgood\tThe cat sat.\tA cat sat.\n"
                       "Art One\tpartial\tThe cat sat.\tIt rained.\n"
                       "Art#Two\tgood partial\tDogs bark loudly.\tDogs bark.\n");
  convert_labelled_tsv(dir / "pairs.tsv", dir / "data");
  Tokenizer tok;
  const auto d = EvalDataset::load(dir / "data", tok, false);
  EXPECT_EQ(d.gold_sources.size(), 2u);
  EXPECT_EQ(d.gold_targets.at("Art One").sentences.size(), 2u);
  EXPECT_EQ(d.gold.size(), 3u);
  EXPECT_EQ(d.positives(), (std::set<PairKey>{{"Art One#0", "Art One#0"}}));
  EXPECT_EQ(d.positives(true).size(), 2u);
  EXPECT_EQ(d.doc_positives().size(), 2u);
  EXPECT_TRUE(d.gold_sources.find("Art_Two"));
}

TEST(Dataset, MissingFilesExplainHowToFetch) {
  testutil::TempDir dir;
  Tokenizer tok;
  try {
    EvalDataset::load(dir.path(), tok, true);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("convert-gold"), std::string::npos);
  }
}

TEST(Dataset, BadTsvLine) {
  testutil::TempDir dir;
  testutil::write_file(dir / "bad.tsv", "only\ttwo\n");
  EXPECT_THROW(convert_labelled_tsv(dir / "bad.tsv", dir / "out"), ParseError);
}
