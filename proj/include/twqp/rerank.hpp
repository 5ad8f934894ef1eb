#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "twqp/error.hpp"
#include "twqp/index.hpp"
#include "twqp/relevance_model.hpp"
#include "twqp/retrieval.hpp"
#include "twqp/weighting.hpp"

namespace twqp {

struct RerankConfig {
  std::size_t rerank_depth = 100;
  std::size_t k = 1000;
  double mu = 1000.0;

  void validate() const {
    if (rerank_depth < 1 || rerank_depth > k) throw Error("rerank depth must satisfy 1 <= depth <= k");
    if (!(mu > 0.0)) throw Error("re-ranking needs mu > 0");
  }
};

/// Re-scores the top rerank_depth entries by sum_w weight(w) * log p_d(w) and
/// re-sorts them. The tail keeps its relative order below the block; its
/// scores are shifted by a constant so the list stays sorted by score.
/// Terms absent from the collection are ignored (their log-probability is -inf
/// for every document).
inline RankedList rerank_weighted(const RankedList& initial, std::span<const std::pair<std::string, double>> weights,
                                  const RerankConfig& cfg, const Index& index) {
  cfg.validate();
  std::vector<std::pair<TermId, double>> resolved;
  for (const auto& [term, weight] : weights) {
    if (auto id = index.term_id(term)) resolved.emplace_back(*id, weight);
  }

  RankedList out{initial.query_id, {}, initial.k};
  const std::size_t depth = std::min(cfg.rerank_depth, initial.size());
  std::vector<ScoredDoc> block(initial.entries.begin(), initial.entries.begin() + static_cast<std::ptrdiff_t>(depth));
  for (auto& entry : block) {
    const double length = index.doc_length(entry.doc);
    double score = 0.0;
    for (const auto& [id, weight] : resolved) {
      const double p = detail::dirichlet(index.tf(id, entry.doc), length, collection_prob(id, index), cfg.mu);
      score += weight * std::log(p);
    }
    entry.score = score;
  }
  std::sort(block.begin(), block.end(), ranks_before);

  out.entries = std::move(block);
  if (depth < initial.size()) {
    const double block_min = out.entries.empty() ? 0.0 : out.entries.back().score;
    const double tail_top = initial.entries[depth].score;
    const double offset = (block_min - 1.0) - tail_top;
    const bool shift = std::isfinite(offset);
    for (std::size_t i = depth; i < initial.size(); ++i) {
      ScoredDoc e = initial.entries[i];
      if (shift) e.score += offset;
      out.entries.push_back(e);
    }
  }
  return out;
}

/// Log-linear re-scoring with a term weight table.
inline RankedList rerank_twqp(const RankedList& initial, const TermWeightTable& table, const RerankConfig& cfg,
                              const Index& index) {
  std::vector<std::pair<std::string, double>> weights;
  weights.reserve(table.weights.size());
  for (const auto& tw : table.weights) weights.emplace_back(tw.term, tw.weight);
  return rerank_weighted(initial, weights, cfg, index);
}

/// Cross-entropy re-scoring sum_w p_RM3(w) log p_d(w) over the model's top-n
/// terms.
inline RankedList rerank_rm3(const RankedList& initial, const RelevanceModel& rm, const RerankConfig& cfg,
                             const Index& index) {
  std::vector<std::pair<std::string, double>> weights;
  for (const auto& tp : top_n_terms(rm, rm.params.n)) weights.emplace_back(tp.term, tp.prob);
  return rerank_weighted(initial, weights, cfg, index);
}

}  // namespace twqp
