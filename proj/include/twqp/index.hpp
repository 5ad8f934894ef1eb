#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "twqp/analysis.hpp"
#include "twqp/error.hpp"

namespace twqp {

/// Internal document number. Numbers follow the lexicographic order of the
/// external doc_id, so ordering by DocNo is ordering by doc_id.
struct DocNo {
  std::uint32_t value = 0;
  friend auto operator<=>(DocNo, DocNo) = default;
};

using TermId = std::uint32_t;

struct Posting {
  DocNo doc;
  std::uint32_t tf = 0;
  friend bool operator==(const Posting&, const Posting&) = default;
};

struct TermCount {
  TermId term = 0;
  std::uint32_t tf = 0;
  friend bool operator==(const TermCount&, const TermCount&) = default;
};

struct Document {
  std::string doc_id;
  std::string text;
};

/// Immutable inverted index with the collection statistics needed by the
/// language-model scorers: tf(w,d), tf(w,D), |d| and |D|. Also keeps a
/// forward index (per-document term counts) for random tf lookups.
class Index {
 public:
  std::size_t doc_count() const { return doc_names_.size(); }
  std::size_t vocabulary_size() const { return terms_.size(); }
  std::uint64_t total_tokens() const { return total_tokens_; }
  const AnalyzerConfig& analyzer() const { return analyzer_; }

  std::optional<TermId> term_id(std::string_view term) const {
    auto it = std::lower_bound(terms_.begin(), terms_.end(), term,
                               [](const std::string& a, std::string_view b) { return a < b; });
    if (it == terms_.end() || *it != term) return std::nullopt;
    return static_cast<TermId>(it - terms_.begin());
  }
  const std::string& term(TermId id) const { return terms_.at(id); }

  std::span<const Posting> postings(TermId id) const { return postings_.at(id); }
  std::uint64_t collection_tf(TermId id) const { return collection_tf_.at(id); }
  std::uint64_t collection_tf(std::string_view term) const {
    auto id = term_id(term);
    return id ? collection_tf_[*id] : 0;
  }
  std::size_t doc_freq(TermId id) const { return postings_.at(id).size(); }

  std::optional<DocNo> find_doc(std::string_view doc_id) const {
    auto it = std::lower_bound(doc_names_.begin(), doc_names_.end(), doc_id,
                               [](const std::string& a, std::string_view b) { return a < b; });
    if (it == doc_names_.end() || *it != doc_id) return std::nullopt;
    return DocNo{static_cast<std::uint32_t>(it - doc_names_.begin())};
  }
  const std::string& doc_name(DocNo d) const { return doc_names_.at(d.value); }
  std::uint32_t doc_length(DocNo d) const { return doc_lengths_.at(d.value); }

  std::span<const TermCount> doc_terms(DocNo d) const { return forward_.at(d.value); }

  std::uint32_t tf(TermId term, DocNo d) const {
    const auto& row = forward_.at(d.value);
    auto it = std::lower_bound(row.begin(), row.end(), term,
                               [](const TermCount& a, TermId b) { return a.term < b; });
    return (it != row.end() && it->term == term) ? it->tf : 0;
  }

  friend bool operator==(const Index&, const Index&) = default;

 private:
  friend class IndexBuilder;
  friend Index load_index(std::istream& in);

  void rebuild_forward() {
    forward_.assign(doc_names_.size(), {});
    for (TermId t = 0; t < postings_.size(); ++t) {
      for (const Posting& p : postings_[t]) forward_[p.doc.value].push_back({t, p.tf});
    }
  }

  AnalyzerConfig analyzer_;
  std::vector<std::string> terms_;  // sorted
  std::vector<std::vector<Posting>> postings_;
  std::vector<std::uint64_t> collection_tf_;
  std::vector<std::string> doc_names_;  // sorted
  std::vector<std::uint32_t> doc_lengths_;
  std::vector<std::vector<TermCount>> forward_;
  std::uint64_t total_tokens_ = 0;
};

/// Single-pass builder. Documents are analyzed as they are added; term ids and
/// document numbers are assigned in lexicographic order by finish().
class IndexBuilder {
 public:
  explicit IndexBuilder(AnalyzerConfig config = {}) : config_(std::move(config)) {}

  void add(const Document& doc) {
    if (!seen_.insert(doc.doc_id).second) throw Error("duplicate doc_id '" + doc.doc_id + "'");
    std::unordered_map<std::uint32_t, std::uint32_t> counts;
    const auto tokens = analyze(doc.text, config_);
    for (const auto& token : tokens) {
      auto [it, inserted] = provisional_.try_emplace(token, static_cast<std::uint32_t>(vocab_.size()));
      if (inserted) vocab_.push_back(token);
      ++counts[it->second];
    }
    std::vector<TermCount> row;
    row.reserve(counts.size());
    for (auto [term, tf] : counts) row.push_back({term, tf});
    names_.push_back(doc.doc_id);
    lengths_.push_back(static_cast<std::uint32_t>(tokens.size()));
    rows_.push_back(std::move(row));
  }

  Index finish() && {
    if (names_.empty()) throw Error("cannot build an index from an empty corpus");
    Index index;
    index.analyzer_ = std::move(config_);

    std::vector<std::uint32_t> term_order(vocab_.size());
    std::iota(term_order.begin(), term_order.end(), 0U);
    std::sort(term_order.begin(), term_order.end(),
              [&](std::uint32_t a, std::uint32_t b) { return vocab_[a] < vocab_[b]; });
    std::vector<TermId> remap(vocab_.size());
    index.terms_.reserve(vocab_.size());
    for (std::uint32_t rank = 0; rank < term_order.size(); ++rank) {
      remap[term_order[rank]] = rank;
      index.terms_.push_back(std::move(vocab_[term_order[rank]]));
    }

    std::vector<std::uint32_t> doc_order(names_.size());
    std::iota(doc_order.begin(), doc_order.end(), 0U);
    std::sort(doc_order.begin(), doc_order.end(),
              [&](std::uint32_t a, std::uint32_t b) { return names_[a] < names_[b]; });

    index.postings_.assign(index.terms_.size(), {});
    index.collection_tf_.assign(index.terms_.size(), 0);
    index.forward_.reserve(names_.size());
    for (std::uint32_t rank = 0; rank < doc_order.size(); ++rank) {
      const std::uint32_t src = doc_order[rank];
      index.doc_names_.push_back(std::move(names_[src]));
      index.doc_lengths_.push_back(lengths_[src]);
      index.total_tokens_ += lengths_[src];
      auto row = std::move(rows_[src]);
      for (auto& entry : row) entry.term = remap[entry.term];
      std::sort(row.begin(), row.end(),
                [](const TermCount& a, const TermCount& b) { return a.term < b.term; });
      for (const auto& entry : row) {
        index.postings_[entry.term].push_back({DocNo{rank}, entry.tf});
        index.collection_tf_[entry.term] += entry.tf;
      }
      index.forward_.push_back(std::move(row));
    }
    return index;
  }

 private:
  AnalyzerConfig config_;
  std::unordered_set<std::string> seen_;
  std::unordered_map<std::string, std::uint32_t> provisional_;
  std::vector<std::string> vocab_;
  std::vector<std::string> names_;
  std::vector<std::uint32_t> lengths_;
  std::vector<std::vector<TermCount>> rows_;
};

inline Index build_index(std::span<const Document> corpus, const AnalyzerConfig& config = {}) {
  IndexBuilder builder(config);
  for (const auto& doc : corpus) builder.add(doc);
  return std::move(builder).finish();
}

/// tf(w,D) / |D|; zero for out-of-vocabulary terms.
inline double collection_prob(std::string_view term, const Index& index) {
  if (index.total_tokens() == 0) return 0.0;
  return static_cast<double>(index.collection_tf(term)) / static_cast<double>(index.total_tokens());
}

inline double collection_prob(TermId term, const Index& index) {
  if (index.total_tokens() == 0) return 0.0;
  return static_cast<double>(index.collection_tf(term)) / static_cast<double>(index.total_tokens());
}

// ---------------------------------------------------------------------------
// Snapshot format (all integers little-endian):
//   magic "TWQPIDX\0", u32 version,
//   analyzer: u8 lowercase, u8 stemmer, u32 n, n strings (stopwords),
//   u32 docs, per doc: string name, u32 length,
//   u32 terms, per term: string text, u32 df, df x (u32 doc, u32 tf).
// Strings are u32 byte length followed by the bytes.
// ---------------------------------------------------------------------------

inline constexpr char kSnapshotMagic[8] = {'T', 'W', 'Q', 'P', 'I', 'D', 'X', '\0'};
inline constexpr std::uint32_t kSnapshotVersion = 1;

namespace detail {

inline void write_u32(std::ostream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                         static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
  out.write(bytes, 4);
}

inline void write_string(std::ostream& out, std::string_view s) {
  write_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::uint32_t read_u32(std::istream& in) {
  unsigned char bytes[4];
  if (!in.read(reinterpret_cast<char*>(bytes), 4)) throw Error("truncated index snapshot");
  return static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
         (static_cast<std::uint32_t>(bytes[2]) << 16) | (static_cast<std::uint32_t>(bytes[3]) << 24);
}

inline std::string read_string(std::istream& in) {
  const std::uint32_t size = read_u32(in);
  std::string s(size, '\0');
  if (size > 0 && !in.read(s.data(), size)) throw Error("truncated index snapshot");
  return s;
}

}  // namespace detail

inline void save_index(const Index& index, std::ostream& out) {
  using detail::write_string;
  using detail::write_u32;
  out.write(kSnapshotMagic, sizeof kSnapshotMagic);
  write_u32(out, kSnapshotVersion);
  const auto& a = index.analyzer();
  out.put(a.lowercase ? 1 : 0);
  out.put(a.stemmer == Stemmer::porter ? 1 : 0);
  write_u32(out, static_cast<std::uint32_t>(a.stopwords.size()));
  for (const auto& w : a.stopwords) write_string(out, w);

  write_u32(out, static_cast<std::uint32_t>(index.doc_count()));
  for (std::uint32_t d = 0; d < index.doc_count(); ++d) {
    write_string(out, index.doc_name(DocNo{d}));
    write_u32(out, index.doc_length(DocNo{d}));
  }
  write_u32(out, static_cast<std::uint32_t>(index.vocabulary_size()));
  for (TermId t = 0; t < index.vocabulary_size(); ++t) {
    write_string(out, index.term(t));
    const auto postings = index.postings(t);
    write_u32(out, static_cast<std::uint32_t>(postings.size()));
    for (const Posting& p : postings) {
      write_u32(out, p.doc.value);
      write_u32(out, p.tf);
    }
  }
  if (!out) throw Error("failed to write index snapshot");
}

inline Index load_index(std::istream& in) {
  using detail::read_string;
  using detail::read_u32;
  char magic[sizeof kSnapshotMagic];
  if (!in.read(magic, sizeof magic) || !std::equal(magic, magic + sizeof magic, kSnapshotMagic))
    throw Error("not an index snapshot (bad magic)");
  const std::uint32_t version = read_u32(in);
  if (version != kSnapshotVersion)
    throw Error("unsupported index snapshot version " + std::to_string(version));

  Index index;
  const int lowercase = in.get();
  const int stemmer = in.get();
  if (!in) throw Error("truncated index snapshot");
  index.analyzer_.lowercase = lowercase != 0;
  index.analyzer_.stemmer = stemmer != 0 ? Stemmer::porter : Stemmer::none;
  index.analyzer_.stopwords.clear();
  for (std::uint32_t n = read_u32(in); n > 0; --n) index.analyzer_.stopwords.insert(read_string(in));

  const std::uint32_t docs = read_u32(in);
  if (docs == 0) throw Error("index snapshot has no documents");
  for (std::uint32_t d = 0; d < docs; ++d) {
    index.doc_names_.push_back(read_string(in));
    index.doc_lengths_.push_back(read_u32(in));
    index.total_tokens_ += index.doc_lengths_.back();
  }
  const std::uint32_t terms = read_u32(in);
  index.postings_.resize(terms);
  index.collection_tf_.assign(terms, 0);
  for (TermId t = 0; t < terms; ++t) {
    index.terms_.push_back(read_string(in));
    const std::uint32_t df = read_u32(in);
    auto& list = index.postings_[t];
    list.reserve(df);
    for (std::uint32_t i = 0; i < df; ++i) {
      const std::uint32_t doc = read_u32(in);
      const std::uint32_t tf = read_u32(in);
      if (doc >= docs) throw Error("corrupt index snapshot: posting references doc " + std::to_string(doc));
      list.push_back({DocNo{doc}, tf});
      index.collection_tf_[t] += tf;
    }
  }
  index.rebuild_forward();
  return index;
}

inline void save_index(const Index& index, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  save_index(index, out);
}

inline Index load_index(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open index snapshot '" + path.string() + "'");
  return load_index(in);
}

// ---------------------------------------------------------------------------
// Corpus readers
// ---------------------------------------------------------------------------

/// One JSON object per line with string fields "doc_id" and "text". Blank
/// lines are skipped.
inline std::vector<Document> read_jsonl_corpus(std::istream& in) {
  std::vector<Document> docs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto record = nlohmann::json::parse(line);
      docs.push_back({record.at("doc_id").get<std::string>(), record.at("text").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
      throw Error("corpus line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return docs;
}

inline std::vector<Document> read_jsonl_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open corpus '" + path.string() + "'");
  return read_jsonl_corpus(in);
}

/// Every regular file in the directory is one document; the filename is the
/// doc_id.
inline std::vector<Document> read_directory_corpus(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw Error("'" + dir.string() + "' is not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Document> docs;
  for (const auto& file : files) {
    std::ifstream in(file, std::ios::binary);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    docs.push_back({file.filename().string(), std::move(text)});
  }
  return docs;
}

inline std::vector<Document> read_corpus(const std::filesystem::path& path) {
  return std::filesystem::is_directory(path) ? read_directory_corpus(path) : read_jsonl_corpus(path);
}

inline void write_jsonl_corpus(std::ostream& out, std::span<const Document> docs) {
  for (const auto& doc : docs) out << nlohmann::json{{"doc_id", doc.doc_id}, {"text", doc.text}}.dump() << '\n';
}

}  // namespace twqp
