#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "twqp/detail/parallel.hpp"
#include "twqp/evaluation.hpp"
#include "twqp/relevance_model.hpp"
#include "twqp/rerank.hpp"
#include "twqp/retrieval.hpp"

namespace twqp {

// Grid searches that pick the smoothing mass of the initial retrieval and the
// feedback depth of the relevance model by mean average precision.

template <typename Value>
struct TuneResult {
  Value best{};
  std::vector<std::pair<Value, double>> map_by_value;  // ascending grid order
};

inline std::vector<double> default_mu_grid() {
  std::vector<double> grid;
  for (int mu = 100; mu <= 5000; mu += 100) grid.push_back(mu);
  return grid;
}

inline std::vector<std::size_t> default_rm3_m_grid() {
  std::vector<std::size_t> grid;
  for (std::size_t m = 5; m <= 100; m += 5) grid.push_back(m);
  return grid;
}

/// Mean AP of a set of lists against the qrels.
inline double mean_average_precision(std::span<const RankedList> lists, const Qrels& qrels, const Index& index,
                                     std::size_t depth = 1000) {
  std::map<std::string, std::vector<std::string>> rankings;
  for (const auto& list : lists) rankings[list.query_id] = doc_names(list, index);
  // Only queries that were actually run take part.
  Qrels subset;
  for (const auto& list : lists) {
    for (const auto& [doc, grade] : qrels.judgments(list.query_id)) subset.add(list.query_id, doc, grade);
  }
  return evaluate_run(rankings, subset, depth).means.map;
}

inline TuneResult<double> tune_mu(const Index& index, std::span<const Query> queries, const Qrels& qrels,
                                  std::span<const double> grid, std::size_t k = 1000, std::size_t threads = 0) {
  TuneResult<double> result;
  result.best = argmax_grid<double>(
      grid,
      [&](double mu) {
        std::vector<RankedList> lists(queries.size());
        detail::parallel_for(queries.size(), threads,
                             [&](std::size_t i) { lists[i] = retrieve_topk(queries[i], k, mu, index); });
        return mean_average_precision(lists, qrels, index, k);
      },
      &result.map_by_value);
  return result;
}

/// Picks the RM3 feedback depth m. Initial lists are retrieved once at ql_mu;
/// each is then re-ranked in full by cross entropy against the RM3 model, with
/// the same ql_mu for the document models.
inline TuneResult<std::size_t> tune_rm3_m(const Index& index, std::span<const Query> queries, const Qrels& qrels,
                                          std::span<const std::size_t> grid, double ql_mu, const Rm3Params& rm3,
                                          std::size_t k = 1000, std::size_t threads = 0) {
  std::vector<RankedList> initial(queries.size());
  detail::parallel_for(queries.size(), threads,
                       [&](std::size_t i) { initial[i] = retrieve_topk(queries[i], k, ql_mu, index); });
  TuneResult<std::size_t> result;
  result.best = argmax_grid<std::size_t>(
      grid,
      [&](std::size_t m) {
        std::vector<RankedList> reranked(queries.size());
        detail::parallel_for(queries.size(), threads, [&](std::size_t i) {
          if (initial[i].empty()) {
            reranked[i] = initial[i];
            return;
          }
          Rm3Params params = rm3;
          params.m = std::min(m, initial[i].size());
          const auto rm = build_rm3(queries[i], initial[i], params, index);
          reranked[i] = rerank_rm3(initial[i], rm, RerankConfig{k, k, ql_mu}, index);
        });
        return mean_average_precision(reranked, qrels, index, k);
      },
      &result.map_by_value);
  return result;
}

}  // namespace twqp
