#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lha/ann_index.hpp"
#include "lha/sent_align.hpp"

namespace lha {

inline constexpr const char* kToolVersion = "lha 0.1.0";

struct FilterConfig {
  double min_overlap = 0.4;
  double max_len_ratio = 1.5;
  std::optional<std::filesystem::path> exclude;
  FilterStage stage = FilterStage::kGroup;
  bool enabled = true;
};

/// Declarative run description. Relative paths in a config file resolve
/// against the file's directory.
struct PipelineConfig {
  std::filesystem::path source_corpus;
  std::filesystem::path target_corpus;
  std::string source_tag = "source";
  std::string target_tag = "target";
  std::optional<std::filesystem::path> stopwords;
  std::optional<std::filesystem::path> word_vectors;
  std::string doc_embedding = "avg";   // "avg" or "precomputed:<path>"
  std::string sent_embedding = "avg";
  bool content_only = false;
  bool normalize = true;
  std::size_t k_doc = 5;
  std::size_t k_sent = 5;
  double theta_d = 0.5;
  double theta_s = 0.65;
  std::string scorer = "cosine";
  std::map<std::string, std::string> scorer_params;
  FilterConfig filter;
  AnnParams index;
  std::uint64_t seed = 42;
  unsigned threads = 1;
  std::filesystem::path work_dir = "lha_work";
  std::filesystem::path output = "aligned.jsonl";
  std::optional<std::filesystem::path> output_tsv;
  std::optional<std::filesystem::path> summary;  // default: <work_dir>/summary.json

  static PipelineConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
  static PipelineConfig load(const std::filesystem::path& path,
                             const std::vector<std::string>& overrides = {});
  nlohmann::json to_json() const;
};

/// "a.b=value": value is parsed as JSON when possible, otherwise taken as a string.
void apply_override(nlohmann::json& j, const std::string& assignment);

struct Finding {
  enum class Severity { kError, kWarning } severity;
  std::string key;
  std::string message;
};

std::vector<Finding> validate_config(const PipelineConfig& config);

struct StageReport {
  std::string name;
  bool cached = false;
  std::size_t count = 0;  // rows, pairs or groups produced
  double seconds = 0.0;
};

struct RunSummary {
  std::vector<StageReport> stages;
  std::size_t doc_pairs = 0;
  std::size_t groups = 0;
  double mean_source_tokens = 0.0;
  double mean_target_tokens = 0.0;
  double multi_sentence_source_pct = 0.0;
  double multi_sentence_target_pct = 0.0;

  nlohmann::json to_json() const;
};

/// embed -> index -> align-docs -> align-sents (filter, emit). Each stage is
/// skipped when the manifest shows identical input hashes, parameters and
/// outputs. A failing stage aborts with its name; the manifest keeps every
/// stage completed before it.
RunSummary run_pipeline(const PipelineConfig& config);

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_hex(std::string_view data);

}  // namespace lha
