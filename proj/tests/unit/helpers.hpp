#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lha/corpus.hpp"
#include "lha/embeddings.hpp"

namespace testutil {

inline std::filesystem::path fixtures() { return LHA_FIXTURES; }

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("lha_test_" + std::to_string(rd()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  out << content;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline lha::Document make_doc(const std::string& id, const std::vector<std::string>& sentences,
                              const lha::Tokenizer& tok = lha::Tokenizer()) {
  lha::Document d;
  d.doc_id = id;
  d.dataset_tag = "test";
  for (std::uint32_t i = 0; i < sentences.size(); ++i) {
    d.sentences.push_back({id, i, sentences[i], tok.tokenize(sentences[i])});
  }
  return d;
}

inline lha::WordVectorTable table_from(const std::string& text) {
  std::istringstream in(text);
  return lha::parse_word_vectors(in);
}

}  // namespace testutil
