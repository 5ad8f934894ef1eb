#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_set>

#include <spdlog/spdlog.h>

#include "twqp/error.hpp"
#include "twqp/index.hpp"
#include "twqp/retrieval.hpp"

namespace twqp {

// Post-retrieval quality predictors over a RankedList, plus the per-term
// signals (nWIG, SROR) used by the baseline weighting schemes.

enum class PredictorKind { WIG, NQC, ScoreRatio };

inline std::string_view to_string(PredictorKind kind) {
  switch (kind) {
    case PredictorKind::WIG: return "WIG";
    case PredictorKind::NQC: return "NQC";
    case PredictorKind::ScoreRatio: return "ScoreRatio";
  }
  return "?";
}

inline PredictorKind parse_predictor(std::string_view name) {
  if (name == "WIG") return PredictorKind::WIG;
  if (name == "NQC") return PredictorKind::NQC;
  if (name == "ScoreRatio") return PredictorKind::ScoreRatio;
  throw Error("unknown predictor '" + std::string(name) + "' (expected WIG, NQC or ScoreRatio)");
}

inline constexpr std::size_t kWigDefaultDepth = 5;
inline constexpr std::size_t kNqcDefaultDepth = 150;
inline constexpr std::size_t kNwigDefaultDepth = 50;

inline std::size_t default_depth(PredictorKind kind) {
  return kind == PredictorKind::NQC ? kNqcDefaultDepth : kWigDefaultDepth;
}

struct PredictorSpec {
  PredictorKind kind = PredictorKind::NQC;
  std::size_t m = kNqcDefaultDepth;  // ignored by ScoreRatio

  static PredictorSpec of(PredictorKind kind) { return {kind, default_depth(kind)}; }
  friend bool operator==(const PredictorSpec&, const PredictorSpec&) = default;
};

namespace detail {

inline std::size_t clamp_depth(std::size_t m, const RankedList& list) {
  if (m == 0) throw Error("predictor depth m must be >= 1");
  return std::min(m, list.size());
}

}  // namespace detail

/// Weighted information gain:
/// 1/(m sqrt|q|) * sum_{d in top-m} sum_i log(p_d(q_i) / p_D(q_i)).
/// Out-of-vocabulary query terms are skipped and counted in *skipped.
inline double predict_wig(const RankedList& list, const Query& q, std::size_t m, double mu, const Index& index,
                          std::size_t* skipped = nullptr) {
  if (list.empty()) throw Error("WIG is undefined on an empty list");
  if (q.terms.empty()) throw Error("WIG needs a non-empty query");
  m = detail::clamp_depth(m, list);
  double sum = 0.0;
  std::size_t oov = 0;
  for (const auto& term : q.terms) {
    const double cp = collection_prob(term, index);
    if (cp <= 0.0) {
      ++oov;
      continue;
    }
    const double log_cp = std::log(cp);
    for (std::size_t i = 0; i < m; ++i) {
      sum += std::log(smoothed_prob(term, list.entries[i].doc, mu, index)) - log_cp;
    }
  }
  if (oov > 0) spdlog::warn("query {}: WIG skipped {} out-of-vocabulary term occurrence(s)", q.id, oov);
  if (skipped) *skipped = oov;
  return sum / (static_cast<double>(m) * std::sqrt(static_cast<double>(q.terms.size())));
}

/// Population standard deviation of the first m values.
inline double score_spread(const RankedList& list, std::size_t m) {
  m = std::min(m, list.size());
  if (m == 0) return 0.0;
  double mean = 0.0;
  for (std::size_t i = 0; i < m; ++i) mean += list.entries[i].score;
  mean /= static_cast<double>(m);
  double var = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double d = list.entries[i].score - mean;
    var += d * d;
  }
  return std::sqrt(var / static_cast<double>(m));
}

/// log p_D(q) = sum_i log(tf(q_i,D)/|D|). Throws for out-of-vocabulary terms.
inline double collection_log_likelihood(const Query& q, const Index& index) {
  double sum = 0.0;
  for (const auto& term : q.terms) {
    const double cp = collection_prob(term, index);
    if (cp <= 0.0) throw Error("collection likelihood undefined: '" + term + "' is out of vocabulary");
    sum += std::log(cp);
  }
  return sum;
}

/// Normalized query commitment: spread of the top-m log scores divided by the
/// magnitude of the collection log-likelihood of the query.
inline double predict_nqc(const RankedList& list, const Query& q, std::size_t m, const Index& index) {
  if (list.empty()) throw Error("NQC is undefined on an empty list");
  m = detail::clamp_depth(m, list);
  const double denom = std::abs(collection_log_likelihood(q, index));
  if (denom == 0.0) throw Error("NQC undefined: query " + q.id + " has zero collection log-likelihood");
  return score_spread(list, m) / denom;
}

/// Likelihood ratio between the first and last documents, exp(s_1 - s_k).
inline double predict_score_ratio(const RankedList& list) {
  if (list.empty()) throw Error("ScoreRatio is undefined on an empty list");
  const double gap = list.entries.front().score - list.entries.back().score;
  if (std::isnan(gap)) return 1.0;  // both ends at -inf
  return std::exp(gap);
}

/// Normalized WIG of a single term over the top-m documents of list:
/// [mean_d log p_d(w) - log p_D(w)] / (-log p_D(w)). Zero for OOV terms.
inline double nwig_term(std::string_view term, const RankedList& list, std::size_t m, double mu,
                        const Index& index) {
  if (list.empty()) throw Error("nWIG is undefined on an empty list");
  m = detail::clamp_depth(m, list);
  const double cp = collection_prob(term, index);
  if (cp <= 0.0) {
    spdlog::warn("nWIG: '{}' is out of vocabulary, weight set to 0", term);
    return 0.0;
  }
  const double log_cp = std::log(cp);
  if (log_cp == 0.0) return 0.0;  // single-term collection
  double mean = 0.0;
  for (std::size_t i = 0; i < m; ++i) mean += std::log(smoothed_prob(term, list.entries[i].doc, mu, index));
  mean /= static_cast<double>(m);
  return (mean - log_cp) / -log_cp;
}

/// Fraction of the overlap lost when term is removed from the query:
/// 1 - |D_q ∩ D_{q-w}| / |D_q|.
inline double result_overlap_loss(const RankedList& full, const RankedList& reduced) {
  if (full.empty()) return 0.0;
  std::unordered_set<std::uint32_t> reduced_docs;
  for (const auto& e : reduced.entries) reduced_docs.insert(e.doc.value);
  std::size_t shared = 0;
  for (const auto& e : full.entries) shared += reduced_docs.contains(e.doc.value) ? 1 : 0;
  return 1.0 - static_cast<double>(shared) / static_cast<double>(full.size());
}

/// SROR weight of a query term. base is D_q^[k] when already available.
inline double sror_term(std::string_view term, const Query& q, std::size_t k, double mu, const Searcher& searcher,
                        const RankedList* base = nullptr) {
  if (std::find(q.terms.begin(), q.terms.end(), term) == q.terms.end())
    throw Error("SROR: '" + std::string(term) + "' is not a term of query " + q.id);
  if (q.terms.size() == 1) return 1.0;
  RankedList own;
  if (!base) {
    own = searcher.retrieve(q, k, mu);
    base = &own;
  }
  const RankedList reduced = searcher.retrieve(remove_term(q, term), k, mu);
  return result_overlap_loss(*base, reduced);
}

/// Quality of a list under the given predictor. Empty lists get the
/// predictor's floor value (0 for WIG and NQC, 1 for ScoreRatio).
inline double predict(const PredictorSpec& spec, const RankedList& list, const Query& q, double mu,
                      const Index& index) {
  if (list.empty()) return spec.kind == PredictorKind::ScoreRatio ? 1.0 : 0.0;
  switch (spec.kind) {
    case PredictorKind::WIG: return predict_wig(list, q, spec.m, mu, index);
    case PredictorKind::NQC: return predict_nqc(list, q, spec.m, index);
    case PredictorKind::ScoreRatio: return predict_score_ratio(list);
  }
  throw Error("unknown predictor kind");
}

}  // namespace twqp
