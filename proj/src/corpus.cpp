#include "lha/corpus.hpp"

#include <clocale>
#include <cwctype>
#include <locale.h>

#include <algorithm>
#include <array>
#include <json.hpp>

#include "lha/error.hpp"

namespace lha {

namespace {

using json = nlohmann::json;

// NLTK English stopword inventory.
constexpr std::array kEnglishStopwords = {
    "i", "me", "my", "myself", "we", "our", "ours", "ourselves", "you", "you're", "you've",
    "you'll", "you'd", "your", "yours", "yourself", "yourselves", "he", "him", "his", "himself",
    "she", "she's", "her", "hers", "herself", "it", "it's", "its", "itself", "they", "them",
    "their", "theirs", "themselves", "what", "which", "who", "whom", "this", "that", "that'll",
    "these", "those", "am", "is", "are", "was", "were", "be", "been", "being", "have", "has",
    "had", "having", "do", "does", "did", "doing", "a", "an", "the", "and", "but", "if", "or",
    "because", "as", "until", "while", "of", "at", "by", "for", "with", "about", "against",
    "between", "into", "through", "during", "before", "after", "above", "below", "to", "from",
    "up", "down", "in", "out", "on", "off", "over", "under", "again", "further", "then", "once",
    "here", "there", "when", "where", "why", "how", "all", "any", "both", "each", "few", "more",
    "most", "other", "some", "such", "no", "nor", "not", "only", "own", "same", "so", "than",
    "too", "very", "s", "t", "can", "will", "just", "don", "don't", "should", "should've", "now",
    "d", "ll", "m", "o", "re", "ve", "y", "ain", "aren", "aren't", "couldn", "couldn't", "didn",
    "didn't", "doesn", "doesn't", "hadn", "hadn't", "hasn", "hasn't", "haven", "haven't", "isn",
    "isn't", "ma", "mightn", "mightn't", "mustn", "mustn't", "needn", "needn't", "shan", "shan't",
    "shouldn", "shouldn't", "wasn", "wasn't", "weren", "weren't", "won", "won't", "wouldn",
    "wouldn't"};

// Lowercased, without the trailing period.
constexpr std::array kAbbreviations = {
    "mr",   "mrs",  "ms",   "dr",  "prof", "sr",   "jr",  "st",    "mt",   "vs",   "etc",
    "e.g",  "i.e",  "no",   "fig", "gen",  "col",  "lt",  "sgt",   "capt", "rev",  "inc",
    "ltd",  "co",   "corp", "jan", "feb",  "mar",  "apr", "jun",   "jul",  "aug",  "sep",
    "sept", "oct",  "nov",  "dec", "dept", "est",  "u.s", "u.k",   "a.m",  "p.m",  "ca",
    "cf",   "al",   "vol",  "pp",  "ed",   "eds",  "approx", "gov", "sen",  "rep",  "ft"};

locale_t utf8_locale() {
  static locale_t loc = [] {
    locale_t l = newlocale(LC_CTYPE_MASK, "C.UTF-8", static_cast<locale_t>(0));
    if (!l) l = newlocale(LC_CTYPE_MASK, "C.utf8", static_cast<locale_t>(0));
    return l;
  }();
  return loc;
}

struct CodePoint {
  char32_t value;
  std::size_t offset;
  std::size_t length;
};

// Invalid sequences decode byte-by-byte with value U+FFFD.
std::vector<CodePoint> decode_utf8(std::string_view s) {
  std::vector<CodePoint> out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t len = 1;
    char32_t cp = 0xFFFD;
    if (c < 0x80) {
      cp = c;
    } else if ((c >> 5) == 0x6) {
      len = 2;
    } else if ((c >> 4) == 0xE) {
      len = 3;
    } else if ((c >> 3) == 0x1E) {
      len = 4;
    }
    if (len > 1) {
      bool ok = i + len <= s.size();
      char32_t v = c & (0x7F >> len);
      for (std::size_t k = 1; ok && k < len; ++k) {
        const auto cc = static_cast<unsigned char>(s[i + k]);
        if ((cc >> 6) != 0x2) ok = false;
        v = (v << 6) | (cc & 0x3F);
      }
      if (ok) {
        cp = v;
      } else {
        len = 1;
      }
    }
    out.push_back({cp, i, len});
    i += len;
  }
  return out;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

bool is_space(char32_t cp) {
  if (cp < 0x80) return cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == '\f' || cp == '\v';
  const locale_t loc = utf8_locale();
  return loc && iswspace_l(static_cast<wint_t>(cp), loc);
}

bool is_punct(char32_t cp) {
  if (cp < 0x80) return std::ispunct(static_cast<int>(cp)) != 0;
  const locale_t loc = utf8_locale();
  return loc && iswpunct_l(static_cast<wint_t>(cp), loc) && !iswalnum_l(static_cast<wint_t>(cp), loc);
}

char32_t lower(char32_t cp) {
  if (cp < 0x80) return (cp >= 'A' && cp <= 'Z') ? cp + 32 : cp;
  const locale_t loc = utf8_locale();
  if (!loc) return cp;
  return static_cast<char32_t>(towlower_l(static_cast<wint_t>(cp), loc));
}

bool looks_numeric(std::string_view s) {
  bool digit = false;
  for (char c : s) {
    if (c >= '0' && c <= '9') {
      digit = true;
    } else if (std::string_view(".,:/-+%").find(c) == std::string_view::npos) {
      return false;
    }
  }
  return digit;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n\f\v");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n\f\v");
  return s.substr(b, e - b + 1);
}

bool is_closing(char c) {
  return c == '"' || c == '\'' || c == ')' || c == ']' || c == '}';
}

bool is_terminal(char c) { return c == '.' || c == '!' || c == '?'; }

bool is_abbreviation(std::string_view word) {
  // strip leading brackets/quotes
  while (!word.empty() && std::string_view("\"'([{").find(word.front()) != std::string_view::npos) {
    word.remove_prefix(1);
  }
  if (word.empty()) return false;
  if (word.size() == 1 && word[0] >= 'A' && word[0] <= 'Z') return true;  // initial
  const std::string lw = to_lower(word);
  return std::find(kAbbreviations.begin(), kAbbreviations.end(), lw) != kAbbreviations.end();
}

}  // namespace

std::string sentence_unit_id(std::string_view doc_id, std::uint32_t ordinal) {
  std::string id(doc_id);
  id += '#';
  id += std::to_string(ordinal);
  return id;
}

std::string Sentence::unit_id() const { return sentence_unit_id(doc_id, ordinal); }

std::size_t Document::token_count() const noexcept {
  std::size_t n = 0;
  for (const auto& s : sentences) n += s.tokens.size();
  return n;
}

const StopwordList& StopwordList::english() {
  static const StopwordList list{
      std::unordered_set<std::string>(kEnglishStopwords.begin(), kEnglishStopwords.end())};
  return list;
}

StopwordList StopwordList::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open stopword list: " + path.string());
  std::unordered_set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    const auto w = trim(line);
    if (w.empty() || w.front() == '#') continue;
    words.insert(to_lower(w));
  }
  return StopwordList(std::move(words));
}

bool StopwordList::contains(std::string_view normalized) const {
  return words_.find(std::string(normalized)) != words_.end();
}

std::string to_lower(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (const auto& cp : decode_utf8(text)) {
    if (cp.value == 0xFFFD && cp.length == 1 && static_cast<unsigned char>(text[cp.offset]) >= 0x80) {
      out.push_back(text[cp.offset]);
    } else {
      append_utf8(out, lower(cp.value));
    }
  }
  return out;
}

std::string normalize_text(std::string_view text) {
  std::string collapsed;
  collapsed.reserve(text.size());
  bool pending_space = false;
  for (const auto& cp : decode_utf8(text)) {
    if (is_space(cp.value)) {
      pending_space = !collapsed.empty();
      continue;
    }
    if (pending_space) collapsed.push_back(' ');
    pending_space = false;
    collapsed.append(text.substr(cp.offset, cp.length));
  }
  return to_lower(collapsed);
}

Token Tokenizer::make_token(std::string surface) const {
  Token t;
  t.normalized = to_lower(surface);
  const auto cps = decode_utf8(surface);
  t.is_punct = !cps.empty() &&
               std::all_of(cps.begin(), cps.end(), [](const CodePoint& c) { return is_punct(c.value); });
  t.is_number = looks_numeric(t.normalized);
  t.is_stopword = stopwords_->contains(t.normalized);
  t.surface = std::move(surface);
  return t;
}

std::vector<Token> Tokenizer::tokenize(std::string_view text) const {
  std::vector<Token> tokens;
  const auto cps = decode_utf8(text);
  std::size_t i = 0;
  while (i < cps.size()) {
    if (is_space(cps[i].value)) {
      ++i;
      continue;
    }
    std::size_t end = i;
    while (end < cps.size() && !is_space(cps[end].value)) ++end;

    std::size_t core_begin = i;
    while (core_begin < end && is_punct(cps[core_begin].value)) ++core_begin;
    std::size_t core_end = end;
    while (core_end > core_begin && is_punct(cps[core_end - 1].value)) --core_end;

    auto emit = [&](std::size_t from, std::size_t to) {
      const std::size_t off = cps[from].offset;
      const std::size_t len = cps[to - 1].offset + cps[to - 1].length - off;
      tokens.push_back(make_token(std::string(text.substr(off, len))));
    };
    for (std::size_t k = i; k < core_begin; ++k) emit(k, k + 1);
    if (core_begin < core_end) emit(core_begin, core_end);
    for (std::size_t k = std::max(core_end, core_begin); k < end; ++k) emit(k, k + 1);
    i = end;
  }
  return tokens;
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  const std::size_t n = text.size();
  std::size_t i = 0;
  while (i < n) {
    if (!is_terminal(text[i])) {
      ++i;
      continue;
    }
    const std::size_t term = i;
    std::size_t j = i;
    while (j < n && is_terminal(text[j])) ++j;
    const bool single_period = j == term + 1 && text[term] == '.';
    while (j < n && is_closing(text[j])) ++j;
    if (j < n && !std::isspace(static_cast<unsigned char>(text[j]))) {
      i = j;
      continue;
    }
    std::size_t next = j;
    while (next < n && std::isspace(static_cast<unsigned char>(text[next]))) ++next;
    bool split = true;
    if (next < n && std::islower(static_cast<unsigned char>(text[next]))) split = false;
    if (split && single_period) {
      std::size_t w = term;
      while (w > start && !std::isspace(static_cast<unsigned char>(text[w - 1]))) --w;
      if (is_abbreviation(text.substr(w, term - w))) split = false;
    }
    if (split) {
      const auto piece = trim(text.substr(start, j - start));
      if (!piece.empty()) out.emplace_back(piece);
      start = j;
    }
    i = j;
  }
  const auto tail = trim(text.substr(std::min(start, n)));
  if (!tail.empty()) out.emplace_back(tail);
  return out;
}

std::vector<std::string> content_tokens(const std::vector<Token>& tokens) {
  std::vector<std::string> out;
  for (const auto& t : tokens) {
    if (t.is_content()) out.push_back(t.normalized);
  }
  return out;
}

std::vector<std::string> content_tokens(const Sentence& sentence) {
  return content_tokens(sentence.tokens);
}

CorpusReader::CorpusReader(const std::filesystem::path& path, std::string dataset_tag,
                           const Tokenizer& tokenizer, CorpusSchema schema)
    : owned_(std::make_unique<std::ifstream>(path)),
      in_(owned_.get()),
      dataset_tag_(std::move(dataset_tag)),
      tokenizer_(&tokenizer),
      schema_(schema) {
  if (!*owned_) throw Error("cannot open corpus: " + path.string());
}

CorpusReader::CorpusReader(std::istream& in, std::string dataset_tag, const Tokenizer& tokenizer,
                           CorpusSchema schema)
    : in_(&in), dataset_tag_(std::move(dataset_tag)), tokenizer_(&tokenizer), schema_(schema) {}

std::optional<Document> CorpusReader::next() {
  std::string line;
  while (std::getline(*in_, line)) {
    ++line_;
    if (trim(line).empty()) continue;
    return parse_record(line);
  }
  return std::nullopt;
}

Document CorpusReader::parse_record(std::string_view line) {
  json rec;
  try {
    rec = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON record: ") + e.what(), line_);
  }
  if (!rec.is_object()) throw ParseError("record is not a JSON object", line_);
  const auto id_it = rec.find("id");
  if (id_it == rec.end() || !id_it->is_string()) throw ParseError("record has no string \"id\"", line_);

  Document doc;
  doc.doc_id = id_it->get<std::string>();
  doc.dataset_tag = dataset_tag_;
  if (doc.doc_id.empty()) throw ParseError("empty document id", line_);
  if (const auto t = rec.find("title"); t != rec.end() && !t->is_null()) {
    if (!t->is_string()) throw ParseError("\"title\" must be a string", line_);
    doc.title = t->get<std::string>();
  }

  std::vector<std::string> texts;
  const auto sents = rec.find("sentences");
  const auto raw = rec.find("text");
  const bool has_sents = sents != rec.end() && !sents->is_null();
  const bool has_text = raw != rec.end() && !raw->is_null();
  if (schema_ == CorpusSchema::kPreSplit && !has_sents) {
    throw ParseError("record '" + doc.doc_id + "' lacks \"sentences\"", line_);
  }
  if (schema_ == CorpusSchema::kRawText && !has_text) {
    throw ParseError("record '" + doc.doc_id + "' lacks \"text\"", line_);
  }
  if (has_sents && schema_ != CorpusSchema::kRawText) {
    if (!sents->is_array()) throw ParseError("\"sentences\" must be an array", line_);
    for (const auto& s : *sents) {
      if (!s.is_string()) throw ParseError("sentence entries must be strings", line_);
      const auto t = trim(s.get_ref<const std::string&>());
      if (t.empty()) throw ParseError("empty sentence in document '" + doc.doc_id + "'", line_);
      texts.emplace_back(t);
    }
  } else if (has_text) {
    if (!raw->is_string()) throw ParseError("\"text\" must be a string", line_);
    texts = split_sentences(raw->get_ref<const std::string&>());
  } else {
    throw ParseError("record '" + doc.doc_id + "' has neither \"text\" nor \"sentences\"", line_);
  }
  if (texts.empty()) throw ParseError("empty document '" + doc.doc_id + "'", line_);

  if (!seen_.insert(doc.doc_id).second) {
    throw ParseError("duplicate document id '" + doc.doc_id + "' in dataset '" + dataset_tag_ + "'",
                     line_);
  }

  doc.sentences.reserve(texts.size());
  for (std::size_t k = 0; k < texts.size(); ++k) {
    Sentence s;
    s.doc_id = doc.doc_id;
    s.ordinal = static_cast<std::uint32_t>(k);
    s.tokens = tokenizer_->tokenize(texts[k]);
    s.text = std::move(texts[k]);
    doc.sentences.push_back(std::move(s));
  }
  return doc;
}

Corpus::Corpus(std::vector<Document> docs) : docs_(std::move(docs)) {
  by_id_.reserve(docs_.size());
  for (std::size_t i = 0; i < docs_.size(); ++i) {
    if (!by_id_.emplace(docs_[i].doc_id, i).second) {
      throw Error("duplicate document id '" + docs_[i].doc_id + "'");
    }
  }
}

Corpus Corpus::load(const std::filesystem::path& path, const std::string& dataset_tag,
                    const Tokenizer& tokenizer, CorpusSchema schema) {
  CorpusReader reader(path, dataset_tag, tokenizer, schema);
  std::vector<Document> docs;
  while (auto d = reader.next()) docs.push_back(std::move(*d));
  return Corpus(std::move(docs));
}

const Document* Corpus::find(std::string_view doc_id) const {
  const auto it = by_id_.find(std::string(doc_id));
  return it == by_id_.end() ? nullptr : &docs_[it->second];
}

const Document& Corpus::at(std::string_view doc_id) const {
  if (const auto* d = find(doc_id)) return *d;
  throw Error("unknown document id '" + std::string(doc_id) + "'");
}

std::size_t Corpus::sentence_count() const noexcept {
  std::size_t n = 0;
  for (const auto& d : docs_) n += d.sentences.size();
  return n;
}

void write_document(std::ostream& out, const Document& doc) {
  json rec;
  rec["id"] = doc.doc_id;
  if (doc.title) rec["title"] = *doc.title;
  json sents = json::array();
  for (const auto& s : doc.sentences) sents.push_back(s.text);
  rec["sentences"] = std::move(sents);
  out << rec.dump() << '\n';
}

void save_corpus(const std::filesystem::path& path, const std::vector<Document>& docs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write corpus: " + path.string());
  for (const auto& d : docs) write_document(out, d);
}

}  // namespace lha
