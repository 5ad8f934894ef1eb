#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "twqp/detail/parallel.hpp"
#include "twqp/error.hpp"
#include "twqp/qpp.hpp"
#include "twqp/retrieval.hpp"

namespace twqp {

enum class WeightingMethod { TWQP_WIG, TWQP_NQC, TWQP_ScoreRatio, nWIG, ScoreRatio_norm, SROR };

inline constexpr WeightingMethod kAllWeightingMethods[] = {
    WeightingMethod::nWIG,     WeightingMethod::ScoreRatio_norm, WeightingMethod::SROR,
    WeightingMethod::TWQP_WIG, WeightingMethod::TWQP_ScoreRatio, WeightingMethod::TWQP_NQC};

inline std::string_view to_string(WeightingMethod method) {
  switch (method) {
    case WeightingMethod::TWQP_WIG: return "TWQP(WIG)";
    case WeightingMethod::TWQP_NQC: return "TWQP(NQC)";
    case WeightingMethod::TWQP_ScoreRatio: return "TWQP(ScoreRatio)";
    case WeightingMethod::nWIG: return "nWIG";
    case WeightingMethod::ScoreRatio_norm: return "ScoreRatio";
    case WeightingMethod::SROR: return "SROR";
  }
  return "?";
}

/// Accepts both display names ("TWQP(NQC)") and identifier style ("TWQP_NQC").
inline WeightingMethod parse_weighting_method(std::string_view name) {
  for (auto method : kAllWeightingMethods) {
    if (name == to_string(method)) return method;
  }
  if (name == "TWQP_WIG") return WeightingMethod::TWQP_WIG;
  if (name == "TWQP_NQC") return WeightingMethod::TWQP_NQC;
  if (name == "TWQP_ScoreRatio") return WeightingMethod::TWQP_ScoreRatio;
  if (name == "ScoreRatio_norm") return WeightingMethod::ScoreRatio_norm;
  throw Error("unknown weighting method '" + std::string(name) + "'");
}

inline bool is_twqp(WeightingMethod method) {
  return method == WeightingMethod::TWQP_WIG || method == WeightingMethod::TWQP_NQC ||
         method == WeightingMethod::TWQP_ScoreRatio;
}

inline PredictorKind predictor_of(WeightingMethod method) {
  switch (method) {
    case WeightingMethod::TWQP_WIG: return PredictorKind::WIG;
    case WeightingMethod::TWQP_NQC: return PredictorKind::NQC;
    case WeightingMethod::TWQP_ScoreRatio: return PredictorKind::ScoreRatio;
    default: throw Error(std::string(to_string(method)) + " is not a TWQP method");
  }
}

struct TermWeight {
  std::string term;
  double weight = 0.0;

  friend bool operator==(const TermWeight&, const TermWeight&) = default;
};

/// Weights for one query, sorted by term.
struct TermWeightTable {
  std::string query_id;
  WeightingMethod method = WeightingMethod::TWQP_NQC;
  std::vector<TermWeight> weights;

  std::optional<double> weight(std::string_view term) const {
    auto it = std::lower_bound(weights.begin(), weights.end(), term,
                               [](const TermWeight& a, std::string_view b) { return a.term < b; });
    if (it == weights.end() || it->term != term) return std::nullopt;
    return it->weight;
  }
  friend bool operator==(const TermWeightTable&, const TermWeightTable&) = default;
};

struct WeightingParams {
  std::size_t k = 1000;
  double mu = 1000.0;
  std::optional<std::size_t> predictor_depth{};  // overrides the WIG/NQC default
  std::size_t nwig_depth = kNwigDefaultDepth;
  std::size_t threads = 0;  // 0 = hardware concurrency

  PredictorSpec predictor(WeightingMethod method) const {
    auto spec = PredictorSpec::of(predictor_of(method));
    if (predictor_depth) spec.m = *predictor_depth;
    return spec;
  }
};

/// Logistic map from a predicted quality change to a weight in (0, 1).
inline double twqp_weight(double delta) { return 1.0 / (1.0 + std::exp(-delta)); }

/// Quality change from expanding q with w, given the base quality
/// P(D_q^[k]) computed once per query.
inline double delta_p(std::string_view term, const Query& q, double base_quality, const PredictorSpec& predictor,
                      std::size_t k, double mu, const Searcher& searcher) {
  const Query expanded = expand_query(q, std::string(term));
  const RankedList list = searcher.retrieve(expanded, k, mu);
  return predict(predictor, list, expanded, mu, searcher.index()) - base_quality;
}

/// P(D_{q OR w}^[k]) - P(D_q^[k]) with base_list = D_q^[k].
inline double delta_p(std::string_view term, const Query& q, const RankedList& base_list,
                      const PredictorSpec& predictor, std::size_t k, double mu, const Searcher& searcher) {
  const double base_quality = predict(predictor, base_list, q, mu, searcher.index());
  return delta_p(term, q, base_quality, predictor, k, mu, searcher);
}

/// Weighs the candidate terms for one query with the chosen method. SROR
/// ignores the candidates and weighs the query's own terms. TWQP methods issue
/// exactly one base retrieval plus one retrieval per candidate term.
inline TermWeightTable weigh_terms(const Query& q, std::span<const std::string> candidates, WeightingMethod method,
                                   const WeightingParams& params, const Searcher& searcher) {
  if (q.terms.empty()) throw Error("cannot weigh terms for empty query " + q.id);
  const Index& index = searcher.index();
  TermWeightTable table{q.id, method, {}};

  std::vector<std::string> terms;
  if (method == WeightingMethod::SROR) {
    for (const auto& [term, count] : term_counts(q)) terms.push_back(term);
  } else {
    terms.assign(candidates.begin(), candidates.end());
    std::sort(terms.begin(), terms.end());
    terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
    if (terms.empty()) throw Error("no candidate terms to weigh for query " + q.id);
  }
  std::vector<double> values(terms.size(), 0.0);

  switch (method) {
    case WeightingMethod::TWQP_WIG:
    case WeightingMethod::TWQP_NQC:
    case WeightingMethod::TWQP_ScoreRatio: {
      const PredictorSpec spec = params.predictor(method);
      const RankedList base = searcher.retrieve(q, params.k, params.mu);
      const double base_quality = predict(spec, base, q, params.mu, index);
      detail::parallel_for(terms.size(), params.threads, [&](std::size_t i) {
        values[i] = twqp_weight(delta_p(terms[i], q, base_quality, spec, params.k, params.mu, searcher));
      });
      break;
    }
    case WeightingMethod::nWIG: {
      const RankedList base = searcher.retrieve(q, params.k, params.mu);
      if (!base.empty()) {
        for (std::size_t i = 0; i < terms.size(); ++i) {
          values[i] = nwig_term(terms[i], base, params.nwig_depth, params.mu, index);
        }
      }
      break;
    }
    case WeightingMethod::ScoreRatio_norm: {
      detail::parallel_for(terms.size(), params.threads, [&](std::size_t i) {
        const RankedList single = searcher.retrieve(Query{q.id, {terms[i]}}, params.k, params.mu);
        values[i] = single.empty() ? 0.0 : predict_score_ratio(single);
      });
      double total = 0.0;
      for (double v : values) total += v;
      if (total > 0.0) {
        for (double& v : values) v /= total;
      }
      break;
    }
    case WeightingMethod::SROR: {
      const RankedList base = searcher.retrieve(q, params.k, params.mu);
      detail::parallel_for(terms.size(), params.threads, [&](std::size_t i) {
        values[i] = sror_term(terms[i], q, params.k, params.mu, searcher, &base);
      });
      break;
    }
  }

  table.weights.reserve(terms.size());
  for (std::size_t i = 0; i < terms.size(); ++i) table.weights.push_back({terms[i], values[i]});
  return table;
}

/// "query_id method term weight" lines, terms sorted, 8 decimals.
inline void write_weight_table(std::ostream& out, const TermWeightTable& table) {
  for (const auto& tw : table.weights) {
    out << fmt::format("{} {} {} {:.8f}\n", table.query_id, to_string(table.method), tw.term, tw.weight);
  }
}

/// Reads weight tables written by write_weight_table, keyed by query_id.
inline std::map<std::string, TermWeightTable> read_weight_tables(std::istream& in) {
  std::map<std::string, TermWeightTable> tables;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream fields(line);
    std::string qid, method, term;
    double weight = 0.0;
    if (!(fields >> qid >> method >> term >> weight))
      throw Error("weights line " + std::to_string(line_no) + ": expected 'query_id method term weight'");
    auto& table = tables[qid];
    table.query_id = qid;
    table.method = parse_weighting_method(method);
    table.weights.push_back({term, weight});
  }
  for (auto& [qid, table] : tables) {
    std::sort(table.weights.begin(), table.weights.end(),
              [](const TermWeight& a, const TermWeight& b) { return a.term < b.term; });
  }
  return tables;
}

}  // namespace twqp
