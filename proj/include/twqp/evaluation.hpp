#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <limits>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "twqp/error.hpp"

namespace twqp {

/// Relevance judgments for one query: doc_id -> grade.
using Judgments = std::map<std::string, int, std::less<>>;

/// TREC qrels; a document is relevant when its grade is >= 1.
class Qrels {
 public:
  void add(const std::string& query_id, const std::string& doc_id, int grade) {
    auto [it, inserted] = judgments_[query_id].emplace(doc_id, grade);
    if (!inserted) throw Error("duplicate judgment for (" + query_id + ", " + doc_id + ")");
  }

  bool has_query(std::string_view query_id) const { return judgments_.find(query_id) != judgments_.end(); }

  const Judgments& judgments(std::string_view query_id) const {
    static const Judgments empty;
    auto it = judgments_.find(query_id);
    return it == judgments_.end() ? empty : it->second;
  }

  std::size_t relevant_count(std::string_view query_id) const {
    std::size_t n = 0;
    for (const auto& [doc, grade] : judgments(query_id)) n += grade >= 1 ? 1 : 0;
    return n;
  }

  std::vector<std::string> query_ids() const {
    std::vector<std::string> ids;
    for (const auto& [id, j] : judgments_) ids.push_back(id);
    return ids;
  }

 private:
  std::map<std::string, Judgments, std::less<>> judgments_;
};

inline bool is_relevant(const Judgments& judgments, std::string_view doc_id) {
  auto it = judgments.find(doc_id);
  return it != judgments.end() && it->second >= 1;
}

/// "query_id 0 doc_id grade", whitespace separated.
inline Qrels read_qrels(std::istream& in) {
  Qrels qrels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream fields(line);
    std::string qid, iteration, doc;
    int grade = 0;
    if (!(fields >> qid >> iteration >> doc >> grade))
      throw Error("qrels line " + std::to_string(line_no) + ": expected 'query_id 0 doc_id grade'");
    if (grade < 0) throw Error("qrels line " + std::to_string(line_no) + ": negative grade");
    qrels.add(qid, doc, grade);
  }
  return qrels;
}

inline Qrels read_qrels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open qrels '" + path.string() + "'");
  return read_qrels(in);
}

struct Topic {
  std::string id;
  std::string title;
};

/// "query_id<TAB>title text" per line.
inline std::vector<Topic> read_topics(std::istream& in) {
  std::vector<Topic> topics;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0)
      throw Error("topics line " + std::to_string(line_no) + ": expected 'query_id<TAB>title'");
    topics.push_back({line.substr(0, tab), line.substr(tab + 1)});
  }
  return topics;
}

inline std::vector<Topic> read_topics(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open topics '" + path.string() + "'");
  return read_topics(in);
}

// ---------------------------------------------------------------------------
// Per-query measures. Rankings are doc_ids in rank order.
// ---------------------------------------------------------------------------

/// Relevant documents in the first cutoff positions divided by cutoff.
inline double precision_at(std::span<const std::string> ranking, const Judgments& judgments,
                           std::size_t cutoff = 10) {
  if (cutoff == 0) throw Error("precision cutoff must be >= 1");
  const std::size_t n = std::min(cutoff, ranking.size());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i) hits += is_relevant(judgments, ranking[i]) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(cutoff);
}

/// Average precision over the first depth positions; nullopt when the query
/// has no relevant documents.
inline std::optional<double> average_precision(std::span<const std::string> ranking, const Judgments& judgments,
                                               std::size_t depth = 1000) {
  std::size_t total_relevant = 0;
  for (const auto& [doc, grade] : judgments) total_relevant += grade >= 1 ? 1 : 0;
  if (total_relevant == 0) return std::nullopt;
  const std::size_t n = std::min(depth, ranking.size());
  std::size_t hits = 0;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (is_relevant(judgments, ranking[i])) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(i + 1);
    }
  }
  return sum / static_cast<double>(total_relevant);
}

/// 1 / rank of the first relevant document, 0 if none is retrieved.
inline double reciprocal_rank(std::span<const std::string> ranking, const Judgments& judgments) {
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    if (is_relevant(judgments, ranking[i])) return 1.0 / static_cast<double>(i + 1);
  }
  return 0.0;
}

/// (#better - #worse) / #queries; ties count as neither.
inline double robustness_index(std::span<const double> method, std::span<const double> baseline) {
  if (method.size() != baseline.size()) throw Error("robustness index needs equally sized vectors");
  if (method.empty()) throw Error("robustness index of an empty query set");
  long better = 0;
  long worse = 0;
  for (std::size_t i = 0; i < method.size(); ++i) {
    if (method[i] > baseline[i]) ++better;
    if (method[i] < baseline[i]) ++worse;
  }
  return static_cast<double>(better - worse) / static_cast<double>(method.size());
}

struct TTestResult {
  double t = 0.0;
  double p_value = 1.0;
  std::size_t df = 0;
  // Zero variance with a non-zero mean difference: t is unbounded and the
  // p-value is reported as 0.
  bool degenerate = false;
};

/// Two-tailed paired t-test on a - b with n - 1 degrees of freedom.
inline TTestResult paired_ttest(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error("paired t-test needs equally sized samples");
  if (a.size() < 2) throw Error("paired t-test needs at least two pairs");
  const std::size_t n = a.size();
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
  mean /= static_cast<double>(n);
  double ss = 0.0;
  bool all_zero = true;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    all_zero = all_zero && d == 0.0;
    ss += (d - mean) * (d - mean);
  }
  TTestResult result;
  result.df = n - 1;
  if (all_zero) return result;
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  const double se = sd / std::sqrt(static_cast<double>(n));
  if (se == 0.0) {
    result.t = mean > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
    result.p_value = 0.0;
    result.degenerate = true;
    return result;
  }
  result.t = mean / se;
  const boost::math::students_t dist(static_cast<double>(result.df));
  result.p_value = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(result.t))));
  return result;
}

// ---------------------------------------------------------------------------
// Run-level evaluation
// ---------------------------------------------------------------------------

struct QueryMeasures {
  double p10 = 0.0;
  std::optional<double> ap;  // absent when the query has no relevant docs
  std::optional<double> rr;
};

struct MeanMeasures {
  double p10 = 0.0;
  double map = 0.0;
  double mrr = 0.0;
  std::size_t queries = 0;          // queries contributing to p@10
  std::size_t judged_queries = 0;   // queries with >= 1 relevant doc (MAP/MRR)
};

struct RunEvaluation {
  std::map<std::string, QueryMeasures> per_query;
  MeanMeasures means;
  std::vector<std::string> excluded;  // queries without relevant documents
};

/// Evaluates every query of the run that appears in the qrels. Queries in the
/// qrels but missing from the run count as empty rankings.
inline RunEvaluation evaluate_run(const std::map<std::string, std::vector<std::string>>& rankings,
                                  const Qrels& qrels, std::size_t depth = 1000) {
  RunEvaluation eval;
  for (const auto& qid : qrels.query_ids()) {
    auto it = rankings.find(qid);
    const std::vector<std::string> none;
    const auto& ranking = it == rankings.end() ? none : it->second;
    std::span<const std::string> view(ranking.data(), std::min(depth, ranking.size()));
    const auto& judgments = qrels.judgments(qid);
    QueryMeasures qm;
    qm.p10 = precision_at(view, judgments, 10);
    qm.ap = average_precision(view, judgments, depth);
    if (qm.ap) {
      qm.rr = reciprocal_rank(view, judgments);
    } else {
      eval.excluded.push_back(qid);
    }
    eval.per_query.emplace(qid, qm);
  }
  for (const auto& [qid, qm] : eval.per_query) {
    eval.means.p10 += qm.p10;
    ++eval.means.queries;
    if (qm.ap) {
      eval.means.map += *qm.ap;
      eval.means.mrr += *qm.rr;
      ++eval.means.judged_queries;
    }
  }
  if (eval.means.queries > 0) eval.means.p10 /= static_cast<double>(eval.means.queries);
  if (eval.means.judged_queries > 0) {
    eval.means.map /= static_cast<double>(eval.means.judged_queries);
    eval.means.mrr /= static_cast<double>(eval.means.judged_queries);
  }
  return eval;
}

enum class Measure { P10, AP, RR };

/// Per-query values of one measure over the queries where it is defined, in
/// query_id order.
inline std::vector<double> measure_vector(const RunEvaluation& eval, Measure measure) {
  std::vector<double> values;
  for (const auto& [qid, qm] : eval.per_query) {
    switch (measure) {
      case Measure::P10: values.push_back(qm.p10); break;
      case Measure::AP:
        if (qm.ap) values.push_back(*qm.ap);
        break;
      case Measure::RR:
        if (qm.rr) values.push_back(*qm.rr);
        break;
    }
  }
  return values;
}

/// Grid point with the highest score; ties go to the smaller grid value.
template <typename Value, typename Score>
Value argmax_grid(std::span<const Value> grid, Score&& score, std::vector<std::pair<Value, double>>* trace = nullptr) {
  if (grid.empty()) throw Error("parameter grid is empty");
  std::vector<Value> sorted(grid.begin(), grid.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  Value best = sorted.front();
  double best_score = -std::numeric_limits<double>::infinity();
  for (const Value& v : sorted) {
    const double s = score(v);
    if (trace) trace->emplace_back(v, s);
    if (s > best_score) {
      best_score = s;
      best = v;
    }
  }
  return best;
}

}  // namespace twqp
