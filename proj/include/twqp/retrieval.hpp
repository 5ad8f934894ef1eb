#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "twqp/analysis.hpp"
#include "twqp/error.hpp"
#include "twqp/index.hpp"

namespace twqp {

/// A bag of analyzed terms. Duplicates are meaningful: each occurrence adds a
/// log-probability term to the query likelihood.
struct Query {
  std::string id;
  std::vector<std::string> terms;

  friend bool operator==(const Query&, const Query&) = default;
};

/// Bag union of q with one extra term (the single-term expansion q OR w).
inline Query expand_query(const Query& q, std::string term) {
  if (term.empty()) throw Error("expansion term must be non-empty");
  Query expanded = q;
  expanded.terms.push_back(std::move(term));
  return expanded;
}

/// Removes one occurrence of term from the bag.
inline Query remove_term(const Query& q, std::string_view term) {
  Query reduced = q;
  auto it = std::find(reduced.terms.begin(), reduced.terms.end(), term);
  if (it == reduced.terms.end()) throw Error("term '" + std::string(term) + "' is not in query " + q.id);
  reduced.terms.erase(it);
  return reduced;
}

/// Unique terms of the bag with their multiplicities, ordered by term.
inline std::map<std::string, std::size_t> term_counts(const Query& q) {
  std::map<std::string, std::size_t> counts;
  for (const auto& t : q.terms) ++counts[t];
  return counts;
}

struct ScoredDoc {
  DocNo doc;
  double score = 0.0;

  friend bool operator==(const ScoredDoc&, const ScoredDoc&) = default;
};

/// Ordering used by every ranked list: score descending, then doc_id
/// ascending. Negative infinity sorts below every finite score.
inline bool ranks_before(const ScoredDoc& a, const ScoredDoc& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.doc < b.doc;
}

/// The top-k documents retrieved for one query, scores in log space.
struct RankedList {
  std::string query_id;
  std::vector<ScoredDoc> entries;
  std::size_t k = 0;

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }
  friend bool operator==(const RankedList&, const RankedList&) = default;
};

inline constexpr double kNegativeInfinity = -std::numeric_limits<double>::infinity();

namespace detail {

inline void check_mu(double mu) {
  if (!(mu >= 0.0) || !std::isfinite(mu)) throw Error("smoothing mass mu must be finite and >= 0");
}

inline void check_doc(DocNo doc, const Index& index) {
  if (doc.value >= index.doc_count()) throw Error("unknown document number " + std::to_string(doc.value));
}

// Dirichlet estimate from raw counts.
inline double dirichlet(double tf, double doc_length, double cp, double mu) {
  const double denom = doc_length + mu;
  if (denom == 0.0) return 0.0;
  return (tf + mu * cp) / denom;
}

}  // namespace detail

/// Dirichlet-smoothed document language model:
/// (tf(w,d) + mu * tf(w,D)/|D|) / (|d| + mu).
inline double smoothed_prob(std::string_view term, DocNo doc, double mu, const Index& index) {
  detail::check_mu(mu);
  detail::check_doc(doc, index);
  const auto id = index.term_id(term);
  const double tf = id ? index.tf(*id, doc) : 0.0;
  const double cp = id ? collection_prob(*id, index) : 0.0;
  return detail::dirichlet(tf, index.doc_length(doc), cp, mu);
}

inline double smoothed_prob(std::string_view term, std::string_view doc_id, double mu, const Index& index) {
  const auto doc = index.find_doc(doc_id);
  if (!doc) throw Error("unknown doc_id '" + std::string(doc_id) + "'");
  return smoothed_prob(term, *doc, mu, index);
}

/// Unsmoothed document model tf(w,d)/|d| (zero for empty documents).
inline double document_mle(TermId term, DocNo doc, const Index& index) {
  const auto length = index.doc_length(doc);
  return length == 0 ? 0.0 : static_cast<double>(index.tf(term, doc)) / length;
}

/// Query log-likelihood: sum over the bag of log smoothed_prob(q_i, d).
/// A zero-probability term makes the whole score negative infinity.
inline double score_ql(const Query& q, DocNo doc, double mu, const Index& index) {
  detail::check_mu(mu);
  detail::check_doc(doc, index);
  double score = 0.0;
  for (const auto& term : q.terms) {
    const auto id = index.term_id(term);
    const double tf = id ? index.tf(*id, doc) : 0.0;
    const double cp = id ? collection_prob(*id, index) : 0.0;
    const double p = detail::dirichlet(tf, index.doc_length(doc), cp, mu);
    if (p <= 0.0) return kNegativeInfinity;
    score += std::log(p);
  }
  return score;
}

/// Top-k documents by query likelihood among the documents containing at
/// least one query term.
inline RankedList retrieve_topk(const Query& q, std::size_t k, double mu, const Index& index) {
  if (k == 0) throw Error("retrieval depth k must be >= 1");
  detail::check_mu(mu);
  RankedList list{q.id, {}, k};

  struct QueryTerm {
    TermId id;
    double count;
    double background;  // log(mu * cp) for docs without the term
    double mu_cp;
  };
  std::vector<QueryTerm> known;
  double missing = 0.0;  // multiplicity of out-of-vocabulary terms
  for (const auto& [term, count] : term_counts(q)) {
    if (auto id = index.term_id(term)) {
      const double mu_cp = mu * collection_prob(*id, index);
      known.push_back({*id, static_cast<double>(count), mu_cp > 0.0 ? std::log(mu_cp) : kNegativeInfinity, mu_cp});
    } else {
      missing += static_cast<double>(count);
    }
  }
  if (known.empty()) return list;

  std::vector<DocNo> candidates;
  {
    std::vector<char> seen(index.doc_count(), 0);
    for (const auto& qt : known) {
      for (const Posting& p : index.postings(qt.id)) {
        if (!seen[p.doc.value]) {
          seen[p.doc.value] = 1;
          candidates.push_back(p.doc);
        }
      }
    }
  }

  const double bag_size = static_cast<double>(q.terms.size());
  std::vector<ScoredDoc> scored;
  scored.reserve(candidates.size());
  if (mu > 0.0 && missing == 0.0) {
    // score(d) = sum_i c_i log(tf_i + mu cp_i) - |q| log(|d| + mu); terms absent
    // from d contribute their background value, the rest are looked up.
    double background = 0.0;
    for (const auto& qt : known) background += qt.count * qt.background;
    std::vector<double> acc(index.doc_count(), background);
    for (const auto& qt : known) {
      for (const Posting& p : index.postings(qt.id)) {
        acc[p.doc.value] += qt.count * (std::log(p.tf + qt.mu_cp) - qt.background);
      }
    }
    for (DocNo d : candidates) {
      scored.push_back({d, acc[d.value] - bag_size * std::log(index.doc_length(d) + mu)});
    }
  } else {
    for (DocNo d : candidates) scored.push_back({d, score_ql(q, d, mu, index)});
  }

  const std::size_t depth = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(depth), scored.end(),
                    ranks_before);
  scored.resize(depth);
  list.entries = std::move(scored);
  return list;
}

/// Retrieval front-end over one index that counts how many retrievals it has
/// served. Safe to share across threads.
class Searcher {
 public:
  explicit Searcher(const Index& index) : index_(&index) {}

  RankedList retrieve(const Query& q, std::size_t k, double mu) const {
    ++retrievals_;
    return retrieve_topk(q, k, mu, *index_);
  }

  const Index& index() const { return *index_; }
  std::size_t retrieval_count() const { return retrievals_.load(); }
  void reset_count() { retrievals_ = 0; }

 private:
  const Index* index_;
  mutable std::atomic<std::size_t> retrievals_{0};
};

/// Turns raw topic text into a query with the index's analyzer. Terms that do
/// not occur in the collection are dropped when drop_unknown is set.
inline Query make_query(std::string id, std::string_view text, const Index& index, bool drop_unknown = true) {
  Query q{std::move(id), analyze(text, index.analyzer())};
  if (drop_unknown) {
    std::erase_if(q.terms, [&](const std::string& t) { return !index.term_id(t).has_value(); });
  }
  return q;
}

// ---------------------------------------------------------------------------
// TREC run files: "query_id Q0 doc_id rank score tag"
// ---------------------------------------------------------------------------

inline void write_trec_run(std::ostream& out, const RankedList& list, const Index& index, std::string_view tag) {
  std::size_t rank = 1;
  for (const auto& e : list.entries) {
    out << fmt::format("{} Q0 {} {} {:.6f} {}\n", list.query_id, index.doc_name(e.doc), rank++, e.score, tag);
  }
}

struct RunEntry {
  std::string doc_id;
  std::size_t rank = 0;
  double score = 0.0;
};

/// Parses a run file into per-query entry lists ordered by rank.
inline std::map<std::string, std::vector<RunEntry>> read_trec_run(std::istream& in) {
  std::map<std::string, std::vector<RunEntry>> runs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream fields(line);
    std::string qid, q0, doc, score_text, tag;
    std::size_t rank = 0;
    if (!(fields >> qid >> q0 >> doc >> rank >> score_text)) {
      throw Error("run line " + std::to_string(line_no) + ": expected 'query_id Q0 doc_id rank score tag'");
    }
    double score = 0.0;
    try {
      score = std::stod(score_text);
    } catch (const std::exception&) {
      if (score_text == "-inf") {
        score = kNegativeInfinity;
      } else {
        throw Error("run line " + std::to_string(line_no) + ": bad score '" + score_text + "'");
      }
    }
    runs[qid].push_back({doc, rank, score});
  }
  for (auto& [qid, entries] : runs) {
    std::stable_sort(entries.begin(), entries.end(),
                     [](const RunEntry& a, const RunEntry& b) { return a.rank < b.rank; });
  }
  return runs;
}

/// Resolves a parsed run against an index. Unknown doc_ids are an error.
inline RankedList to_ranked_list(const std::string& query_id, const std::vector<RunEntry>& entries,
                                 const Index& index) {
  RankedList list{query_id, {}, entries.size()};
  for (const auto& e : entries) {
    auto doc = index.find_doc(e.doc_id);
    if (!doc) throw Error("run for query " + query_id + " references unknown doc_id '" + e.doc_id + "'");
    list.entries.push_back({*doc, e.score});
  }
  return list;
}

/// External doc_ids of a list, in rank order.
inline std::vector<std::string> doc_names(const RankedList& list, const Index& index) {
  std::vector<std::string> names;
  names.reserve(list.size());
  for (const auto& e : list.entries) names.push_back(index.doc_name(e.doc));
  return names;
}

}  // namespace twqp
