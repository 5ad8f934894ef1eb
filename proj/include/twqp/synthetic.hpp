#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include <fmt/format.h>

#include "twqp/analysis.hpp"
#include "twqp/error.hpp"
#include "twqp/evaluation.hpp"
#include "twqp/index.hpp"
#include "twqp/porter_stemmer.hpp"

namespace twqp {

// Desk-scale test collections with planted topical structure. Every topic owns
// a small set of words; documents about a topic mix those words into Zipfian
// background text and are judged relevant to it. Some background documents
// carry a few stray topic words so retrieval is not trivially perfect.

struct SyntheticSpec {
  std::uint64_t seed = 32;
  std::size_t docs = 200;
  std::size_t vocab = 2000;
  std::size_t queries = 20;
  std::size_t topic_words = 8;
  std::size_t min_doc_length = 30;
  std::size_t max_doc_length = 90;
  double topical_doc_rate = 0.5;    // chance a non-seed doc is about some topic
  double topical_token_rate = 0.12; // share of topic words inside a topical doc
  double distractor_rate = 0.6;     // chance a background doc gets stray topic words
};

struct SyntheticCollection {
  std::vector<Document> docs;
  std::vector<Topic> topics;
  Qrels qrels;
  // Per topic, in topic order: the words planted for it that are not in its
  // title, and words planted for other topics.
  std::vector<std::vector<std::string>> on_topic;
  std::vector<std::vector<std::string>> off_topic;
  std::vector<std::vector<std::string>> topic_words;
};

namespace detail {

// Pronounceable lowercase words that are fixed points of the analyzer (not
// stopwords, unchanged by the stemmer), so generated text analyzes to itself.
inline std::vector<std::string> make_vocabulary(std::size_t n, std::mt19937_64& rng) {
  static constexpr std::string_view kOnsets[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p",
                                                 "r", "s", "t", "v", "z", "br", "dr", "gl", "kr",
                                                 "pl", "st", "tr", "sn"};
  static constexpr std::string_view kVowels[] = {"a", "o", "u", "i"};
  static constexpr std::string_view kCodas[] = {"", "", "k", "m", "n", "p", "t", "x", "rk", "nd"};
  const PorterStemmer stem;
  const auto& stop = default_stopwords();
  std::uniform_int_distribution<std::size_t> onset(0, std::size(kOnsets) - 1);
  std::uniform_int_distribution<std::size_t> vowel(0, std::size(kVowels) - 1);
  std::uniform_int_distribution<std::size_t> coda(0, std::size(kCodas) - 1);
  std::uniform_int_distribution<int> syllables(2, 3);

  std::vector<std::string> words;
  std::unordered_set<std::string> seen;
  while (words.size() < n) {
    std::string w;
    const int count = syllables(rng);
    for (int s = 0; s < count; ++s) {
      w += kOnsets[onset(rng)];
      w += kVowels[vowel(rng)];
    }
    w += kCodas[coda(rng)];
    if (w.size() < 4 || stop.contains(w) || stem(w) != w || !seen.insert(w).second) continue;
    words.push_back(std::move(w));
  }
  return words;
}

// Zipf(1) rank sampler over [0, n).
class ZipfSampler {
 public:
  explicit ZipfSampler(std::size_t n) {
    std::vector<double> weights(n);
    for (std::size_t i = 0; i < n; ++i) weights[i] = 1.0 / static_cast<double>(i + 1);
    dist_ = std::discrete_distribution<std::size_t>(weights.begin(), weights.end());
  }
  std::size_t operator()(std::mt19937_64& rng) { return dist_(rng); }

 private:
  std::discrete_distribution<std::size_t> dist_;
};

}  // namespace detail

/// Checks the planted structure: every topic has at least one relevant doc and
/// every relevant doc contains at least one word of its topic.
inline void verify_synthetic(const SyntheticCollection& c) {
  for (std::size_t t = 0; t < c.topics.size(); ++t) {
    const auto& judgments = c.qrels.judgments(c.topics[t].id);
    if (c.qrels.relevant_count(c.topics[t].id) == 0)
      throw Error("synthetic topic " + c.topics[t].id + " has no relevant document");
    const std::set<std::string> words(c.topic_words[t].begin(), c.topic_words[t].end());
    for (const auto& [doc_id, grade] : judgments) {
      if (grade < 1) continue;
      auto doc = std::find_if(c.docs.begin(), c.docs.end(), [&](const Document& d) { return d.doc_id == doc_id; });
      if (doc == c.docs.end()) throw Error("synthetic qrels reference missing doc " + doc_id);
      const auto tokens = analyze(doc->text, AnalyzerConfig{});
      if (std::none_of(tokens.begin(), tokens.end(), [&](const std::string& w) { return words.contains(w); }))
        throw Error("relevant doc " + doc_id + " shares no word with topic " + c.topics[t].id);
    }
  }
}

inline SyntheticCollection make_synthetic(const SyntheticSpec& spec) {
  if (spec.docs < 1 || spec.vocab < 1 || spec.queries < 1) throw Error("synthetic sizes must be >= 1");
  if (spec.min_doc_length < 1 || spec.max_doc_length < spec.min_doc_length)
    throw Error("synthetic document lengths must satisfy 1 <= min <= max");
  std::mt19937_64 rng(spec.seed);
  const auto vocab = detail::make_vocabulary(spec.vocab, rng);

  // Topic words come first; whatever remains is background vocabulary.
  const std::size_t per_topic =
      std::max<std::size_t>(1, std::min(spec.topic_words, spec.vocab / (spec.queries + 1)));
  SyntheticCollection out;
  out.topic_words.resize(spec.queries);
  for (std::size_t t = 0; t < spec.queries; ++t) {
    for (std::size_t j = 0; j < per_topic; ++j) out.topic_words[t].push_back(vocab[(t * per_topic + j) % vocab.size()]);
  }
  std::vector<std::string> background(vocab.begin() + static_cast<std::ptrdiff_t>(std::min(vocab.size(), spec.queries * per_topic)),
                                      vocab.end());
  if (background.empty()) background = vocab;

  std::vector<std::vector<std::size_t>> doc_topics(spec.docs);
  for (std::size_t t = 0; t < spec.queries; ++t) doc_topics[t % spec.docs].push_back(t);
  std::bernoulli_distribution topical_doc(spec.topical_doc_rate);
  std::uniform_int_distribution<std::size_t> any_topic(0, spec.queries - 1);
  for (std::size_t d = spec.queries; d < spec.docs; ++d) {
    if (topical_doc(rng)) doc_topics[d].push_back(any_topic(rng));
  }

  detail::ZipfSampler background_rank(background.size());
  detail::ZipfSampler topic_rank(per_topic);
  std::uniform_int_distribution<std::size_t> length(spec.min_doc_length, spec.max_doc_length);
  std::bernoulli_distribution topical_token(spec.topical_token_rate);
  std::bernoulli_distribution distractor(spec.distractor_rate);
  std::uniform_int_distribution<std::size_t> stray_count(1, 3);

  const int width = static_cast<int>(std::to_string(spec.docs).size());
  for (std::size_t d = 0; d < spec.docs; ++d) {
    std::vector<std::string> tokens;
    const std::size_t n = length(rng);
    const auto& topics = doc_topics[d];
    for (std::size_t i = 0; i < n; ++i) {
      if (!topics.empty() && topical_token(rng)) {
        const std::size_t t = topics[i % topics.size()];
        tokens.push_back(out.topic_words[t][topic_rank(rng)]);
      } else {
        tokens.push_back(background[background_rank(rng)]);
      }
    }
    // Guarantee each topic of the doc is actually present in its text.
    for (std::size_t j = 0; j < topics.size(); ++j) {
      const std::size_t slot = (j * 7) % tokens.size();
      tokens[slot] = out.topic_words[topics[j]][topic_rank(rng)];
    }
    if (topics.empty() && distractor(rng)) {
      const std::size_t t = any_topic(rng);
      for (std::size_t s = stray_count(rng); s > 0; --s) {
        tokens[std::uniform_int_distribution<std::size_t>(0, tokens.size() - 1)(rng)] =
            out.topic_words[t][topic_rank(rng)];
      }
    }
    std::string text;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (i > 0) text += (i % 12 == 0) ? ". " : " ";
      text += tokens[i];
    }
    out.docs.push_back({fmt::format("doc{:0{}}", d + 1, width), std::move(text)});
  }

  const int qwidth = std::max(3, static_cast<int>(std::to_string(spec.queries).size()));
  for (std::size_t t = 0; t < spec.queries; ++t) {
    const std::string qid = fmt::format("q{:0{}}", t + 1, qwidth);
    // Titles use two or three of the topic's words, chosen without replacement.
    std::vector<std::string> words = out.topic_words[t];
    std::shuffle(words.begin(), words.end(), rng);
    const std::size_t title_len = std::min<std::size_t>(words.size(), 2 + (rng() % 2));
    std::string title;
    for (std::size_t i = 0; i < title_len; ++i) title += (i ? " " : "") + words[i];
    out.topics.push_back({qid, title});
    out.on_topic.emplace_back(words.begin() + static_cast<std::ptrdiff_t>(title_len), words.end());
    std::vector<std::string> off;
    for (std::size_t u = 0; u < spec.queries; ++u) {
      if (u == t) continue;
      for (const auto& w : out.topic_words[u]) {
        if (std::find(out.topic_words[t].begin(), out.topic_words[t].end(), w) == out.topic_words[t].end())
          off.push_back(w);
      }
    }
    out.off_topic.push_back(std::move(off));
    for (std::size_t d = 0; d < spec.docs; ++d) {
      if (std::find(doc_topics[d].begin(), doc_topics[d].end(), t) != doc_topics[d].end()) {
        out.qrels.add(qid, out.docs[d].doc_id, 1);
      }
    }
  }
  verify_synthetic(out);
  return out;
}

/// Writes corpus.jsonl, topics.tsv, qrels.txt and planted.tsv into dir.
inline void write_synthetic(const SyntheticCollection& c, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "corpus.jsonl", std::ios::binary);
    write_jsonl_corpus(out, c.docs);
  }
  {
    std::ofstream out(dir / "topics.tsv", std::ios::binary);
    for (const auto& t : c.topics) out << t.id << '\t' << t.title << '\n';
  }
  {
    std::ofstream out(dir / "qrels.txt", std::ios::binary);
    for (const auto& t : c.topics) {
      for (const auto& [doc, grade] : c.qrels.judgments(t.id)) out << t.id << " 0 " << doc << ' ' << grade << '\n';
    }
  }
  {
    std::ofstream out(dir / "planted.tsv", std::ios::binary);
    for (std::size_t t = 0; t < c.topics.size(); ++t) {
      for (const auto& w : c.on_topic[t]) out << c.topics[t].id << "\ton\t" << w << '\n';
      for (const auto& w : c.off_topic[t]) out << c.topics[t].id << "\toff\t" << w << '\n';
    }
  }
}

}  // namespace twqp
