#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "twqp/error.hpp"
#include "twqp/index.hpp"
#include "twqp/retrieval.hpp"

namespace twqp {

struct Rm3Params {
  std::size_t m = 10;     // feedback documents
  double mu = 1000.0;     // smoothing for the document weights
  double lambda = 0.9;    // mass kept on the original query model
  std::size_t n = 100;    // expansion terms kept by top_n_terms

  friend bool operator==(const Rm3Params&, const Rm3Params&) = default;
};

struct TermProb {
  std::string term;
  double prob = 0.0;

  friend bool operator==(const TermProb&, const TermProb&) = default;
};

/// RM3 distribution over terms, stored sorted by term.
struct RelevanceModel {
  std::vector<TermProb> term_probs;
  Rm3Params params;

  double prob(std::string_view term) const {
    auto it = std::lower_bound(term_probs.begin(), term_probs.end(), term,
                               [](const TermProb& a, std::string_view b) { return a.term < b; });
    return (it != term_probs.end() && it->term == term) ? it->prob : 0.0;
  }
};

/// Normalized feedback-document weights p_d(q) / sum_d' p_d'(q) for the top-m
/// documents, computed from log likelihoods by subtracting the maximum before
/// exponentiating.
inline std::vector<double> feedback_doc_weights(const Query& q, const RankedList& top, std::size_t m, double mu,
                                                const Index& index) {
  m = std::min(m, top.size());
  std::vector<double> logs(m);
  for (std::size_t i = 0; i < m; ++i) logs[i] = score_ql(q, top.entries[i].doc, mu, index);
  const double max_log = m == 0 ? 0.0 : *std::max_element(logs.begin(), logs.end());
  std::vector<double> weights(m, m == 0 ? 0.0 : 1.0 / static_cast<double>(m));
  if (m == 0 || !std::isfinite(max_log)) return weights;
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    weights[i] = std::exp(logs[i] - max_log);
    total += weights[i];
  }
  for (auto& w : weights) w /= total;
  return weights;
}

/// p(w) = lambda * p_q(w) + (1 - lambda) * sum_{d in top-m} p_d(w) * weight(d),
/// with unsmoothed query and document models.
inline RelevanceModel build_rm3(const Query& q, const RankedList& initial, const Rm3Params& params,
                                const Index& index) {
  if (!(params.lambda >= 0.0 && params.lambda <= 1.0)) throw Error("RM3 lambda must lie in [0, 1]");
  if (initial.empty()) throw Error("RM3 needs a non-empty initial list for query " + initial.query_id);
  if (q.terms.empty()) throw Error("RM3 needs a non-empty query");
  if (params.m == 0) throw Error("RM3 feedback depth m must be >= 1");
  std::size_t m = params.m;
  if (m > initial.size()) {
    spdlog::warn("query {}: RM3 feedback depth {} exceeds list length {}, clamping", q.id, m, initial.size());
    m = initial.size();
  }

  std::map<std::string, double> probs;
  const double query_size = static_cast<double>(q.terms.size());
  for (const auto& [term, count] : term_counts(q)) {
    probs[term] += params.lambda * static_cast<double>(count) / query_size;
  }

  const auto weights = feedback_doc_weights(q, initial, m, params.mu, index);
  // Accumulate per term id first so each term string is touched once.
  std::map<TermId, double> feedback;
  for (std::size_t i = 0; i < m; ++i) {
    const DocNo doc = initial.entries[i].doc;
    const auto length = index.doc_length(doc);
    if (length == 0) continue;
    for (const TermCount& tc : index.doc_terms(doc)) {
      feedback[tc.term] += weights[i] * static_cast<double>(tc.tf) / length;
    }
  }
  for (const auto& [id, mass] : feedback) probs[index.term(id)] += (1.0 - params.lambda) * mass;

  RelevanceModel rm;
  rm.params = params;
  rm.params.m = m;
  rm.term_probs.reserve(probs.size());
  for (auto& [term, p] : probs) {
    if (p > 0.0) rm.term_probs.push_back({term, p});
  }
  return rm;
}

/// The n most probable terms, ties broken by ascending term.
inline std::vector<TermProb> top_n_terms(const RelevanceModel& rm, std::size_t n) {
  if (n == 0) throw Error("top_n_terms needs n >= 1");
  std::vector<TermProb> sorted = rm.term_probs;
  const std::size_t keep = std::min(n, sorted.size());
  std::partial_sort(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(keep), sorted.end(),
                    [](const TermProb& a, const TermProb& b) {
                      if (a.prob != b.prob) return a.prob > b.prob;
                      return a.term < b.term;
                    });
  sorted.resize(keep);
  return sorted;
}

/// Debug dump: "term probability", sorted by term, 10 decimals.
inline void write_relevance_model(std::ostream& out, const RelevanceModel& rm) {
  for (const auto& tp : rm.term_probs) out << fmt::format("{} {:.10f}\n", tp.term, tp.prob);
}

}  // namespace twqp
