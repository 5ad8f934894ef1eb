#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "twqp/config.hpp"
#include "twqp/detail/parallel.hpp"
#include "twqp/evaluation.hpp"
#include "twqp/index.hpp"
#include "twqp/relevance_model.hpp"
#include "twqp/rerank.hpp"
#include "twqp/retrieval.hpp"
#include "twqp/tuning.hpp"
#include "twqp/weighting.hpp"

namespace twqp {

// The full re-ranking protocol over one collection: tune mu (QLOpt), tune the
// RM3 feedback depth (RM3Opt), weigh RM3 terms with every weighting method,
// re-rank the top of the initial list, then evaluate everything against
// everything with paired t-tests and the robustness index vs RM3Opt.

struct MethodInfo {
  std::string name;   // display name, also the run tag
  std::string code;   // significance marker letter
  std::string file;   // file stem for run and weight dumps
};

inline const std::array<MethodInfo, 8>& experiment_methods() {
  static const std::array<MethodInfo, 8> methods = {{
      {"QLOpt", "i", "QLOpt"},
      {"RM3Opt", "r", "RM3Opt"},
      {"nWIG", "n", "nWIG"},
      {"ScoreRatio", "o", "ScoreRatio"},
      {"SROR", "s", "SROR"},
      {"TWQP(WIG)", "α", "TWQP_WIG"},
      {"TWQP(ScoreRatio)", "β", "TWQP_ScoreRatio"},
      {"TWQP(NQC)", "γ", "TWQP_NQC"},
  }};
  return methods;
}

inline constexpr double kSignificanceLevel = 0.05;

struct MethodResult {
  std::string name;
  std::vector<RankedList> runs;               // one per query, query order
  std::vector<TermWeightTable> weight_tables;  // empty for QLOpt / RM3Opt
  RunEvaluation eval;
};

struct ExperimentResult {
  double mu = 0.0;
  std::size_t rm3_m = 0;
  TuneResult<double> mu_tuning;
  TuneResult<std::size_t> m_tuning;
  std::vector<Query> queries;
  std::vector<MethodResult> methods;  // experiment_methods() order
  // [measure][a][b] p-values of the paired t-test between methods a and b.
  std::map<std::string, std::vector<std::vector<double>>> p_values;
  std::vector<double> ri_vs_rm3;  // per method, on p@10
};

/// Analyzes topic titles into queries. Terms unknown to the collection are
/// dropped; queries left empty are skipped with a warning.
inline std::vector<Query> make_queries(std::span<const Topic> topics, const Index& index) {
  std::vector<Query> queries;
  for (const auto& topic : topics) {
    Query q = make_query(topic.id, topic.title, index);
    if (q.terms.empty()) {
      spdlog::warn("query {} has no in-vocabulary terms, skipped", topic.id);
      continue;
    }
    queries.push_back(std::move(q));
  }
  return queries;
}

inline ExperimentResult run_experiment(const Index& index, std::span<const Topic> topics, const Qrels& qrels,
                                       const ExperimentConfig& cfg) {
  ExperimentResult result;
  std::vector<Query> all = make_queries(topics, index);
  for (auto& q : all) {
    if (qrels.has_query(q.id)) result.queries.push_back(std::move(q));
  }
  if (result.queries.empty()) throw Error("no query has relevance judgments");
  const auto& queries = result.queries;
  const std::size_t nq = queries.size();

  result.mu_tuning = tune_mu(index, queries, qrels, cfg.mu_grid, cfg.k, cfg.threads);
  result.mu = result.mu_tuning.best;
  result.m_tuning = tune_rm3_m(index, queries, qrels, cfg.rm3_m_grid, result.mu, cfg.rm3, cfg.k, cfg.threads);
  result.rm3_m = result.m_tuning.best;

  const auto& infos = experiment_methods();
  result.methods.resize(infos.size());
  for (std::size_t i = 0; i < infos.size(); ++i) {
    result.methods[i].name = infos[i].name;
    result.methods[i].runs.resize(nq);
    if (i >= 2) result.methods[i].weight_tables.resize(nq);
  }

  const Searcher searcher(index);
  WeightingParams wparams;
  wparams.k = cfg.k;
  wparams.mu = result.mu;
  wparams.nwig_depth = cfg.nwig_depth;
  wparams.threads = 1;  // parallelism is across queries
  const RerankConfig twqp_rerank{cfg.rerank_depth, cfg.k, result.mu};
  const RerankConfig rm3_rerank{cfg.k, cfg.k, result.mu};

  detail::parallel_for(nq, cfg.threads, [&](std::size_t qi) {
    const Query& q = queries[qi];
    const RankedList initial = retrieve_topk(q, cfg.k, result.mu, index);
    result.methods[0].runs[qi] = initial;
    if (initial.empty()) {
      for (std::size_t i = 1; i < infos.size(); ++i) result.methods[i].runs[qi] = initial;
      return;
    }
    Rm3Params rm3 = cfg.rm3;
    rm3.m = std::min(result.rm3_m, initial.size());
    const RelevanceModel rm = build_rm3(q, initial, rm3, index);
    result.methods[1].runs[qi] = rerank_rm3(initial, rm, rm3_rerank, index);

    std::vector<std::string> candidates;
    for (const auto& tp : top_n_terms(rm, cfg.rm3.n)) candidates.push_back(tp.term);

    for (std::size_t i = 2; i < infos.size(); ++i) {
      const WeightingMethod method = parse_weighting_method(infos[i].name);
      WeightingParams params = wparams;
      if (is_twqp(method) && predictor_of(method) == cfg.predictor.kind) params.predictor_depth = cfg.predictor.m;
      auto table = weigh_terms(q, candidates, method, params, searcher);
      result.methods[i].runs[qi] = rerank_twqp(initial, table, twqp_rerank, index);
      result.methods[i].weight_tables[qi] = std::move(table);
    }
  });

  for (auto& method : result.methods) {
    std::map<std::string, std::vector<std::string>> rankings;
    for (const auto& list : method.runs) rankings[list.query_id] = doc_names(list, index);
    Qrels subset;
    for (const auto& q : queries) {
      for (const auto& [doc, grade] : qrels.judgments(q.id)) subset.add(q.id, doc, grade);
    }
    method.eval = evaluate_run(rankings, subset, cfg.k);
  }

  const std::pair<const char*, Measure> measures[] = {{"p@10", Measure::P10}, {"MAP", Measure::AP}, {"MRR", Measure::RR}};
  for (const auto& [label, measure] : measures) {
    auto& table = result.p_values[label];
    table.assign(result.methods.size(), std::vector<double>(result.methods.size(), 1.0));
    for (std::size_t a = 0; a < result.methods.size(); ++a) {
      const auto va = measure_vector(result.methods[a].eval, measure);
      for (std::size_t b = a + 1; b < result.methods.size(); ++b) {
        const auto vb = measure_vector(result.methods[b].eval, measure);
        const double p = va.size() >= 2 ? paired_ttest(va, vb).p_value : 1.0;
        table[a][b] = table[b][a] = p;
      }
    }
  }
  const auto rm3_p10 = measure_vector(result.methods[1].eval, Measure::P10);
  for (const auto& method : result.methods) {
    result.ri_vs_rm3.push_back(robustness_index(measure_vector(method.eval, Measure::P10), rm3_p10));
  }
  return result;
}

/// Significance marker letters of every method that differs from method i.
inline std::string significance_markers(const ExperimentResult& r, const std::string& measure, std::size_t i) {
  std::string codes;
  const auto& table = r.p_values.at(measure);
  for (std::size_t j = 0; j < r.methods.size(); ++j) {
    if (j != i && table[i][j] < kSignificanceLevel) codes += experiment_methods()[j].code;
  }
  return codes;
}

inline std::string format_report_table(const ExperimentResult& r, const std::string& collection) {
  std::ostringstream out;
  out << fmt::format("Collection: {}  (queries={}, mu={}, rm3 m={})\n", collection, r.queries.size(), r.mu, r.rm3_m);
  out << fmt::format("{:<18} {:>14} {:>14} {:>14} {:>8}\n", "Method", "p@10", "MAP", "MRR", "RI");
  auto cell = [&](double v, const std::string& codes) {
    // Pad by code points so Greek markers align.
    std::string text = fmt::format("{:.1f}", 100.0 * v);
    if (!codes.empty()) text += "^" + codes;
    std::size_t width = 0;
    for (unsigned char c : text) width += (c & 0xC0) != 0x80 ? 1 : 0;
    return std::string(width < 14 ? 14 - width : 0, ' ') + text;
  };
  for (std::size_t i = 0; i < r.methods.size(); ++i) {
    const auto& m = r.methods[i].eval.means;
    out << fmt::format("{:<18} {} {} {} {:>8.3f}\n", r.methods[i].name, cell(m.p10, significance_markers(r, "p@10", i)),
                       cell(m.map, significance_markers(r, "MAP", i)), cell(m.mrr, significance_markers(r, "MRR", i)),
                       r.ri_vs_rm3[i]);
  }
  out << "Markers: ";
  for (const auto& info : experiment_methods()) out << info.code << "=" << info.name << " ";
  out << fmt::format("(paired two-tailed t-test, p < {})\n", kSignificanceLevel);
  return out.str();
}

inline nlohmann::json report_json(const ExperimentResult& r, const std::string& collection) {
  nlohmann::json methods = nlohmann::json::array();
  for (std::size_t i = 0; i < r.methods.size(); ++i) {
    const auto& m = r.methods[i].eval.means;
    methods.push_back({{"method", r.methods[i].name},
                       {"code", experiment_methods()[i].code},
                       {"p@10", {{"value", m.p10}, {"markers", significance_markers(r, "p@10", i)}}},
                       {"MAP", {{"value", m.map}, {"markers", significance_markers(r, "MAP", i)}}},
                       {"MRR", {{"value", m.mrr}, {"markers", significance_markers(r, "MRR", i)}}},
                       {"RI_vs_RM3Opt", r.ri_vs_rm3[i]}});
  }
  nlohmann::json pvalues;
  for (const auto& [measure, table] : r.p_values) pvalues[measure] = table;
  nlohmann::json tuning;
  for (const auto& [mu, map] : r.mu_tuning.map_by_value) tuning["mu"].push_back({mu, map});
  for (const auto& [m, map] : r.m_tuning.map_by_value) tuning["rm3_m"].push_back({m, map});
  return {{"collection", collection},
          {"queries", r.queries.size()},
          {"mu", r.mu},
          {"rm3_m", r.rm3_m},
          {"methods", methods},
          {"p_values", pvalues},
          {"tuning", tuning}};
}

/// Writes runs/, weights/, per_query.tsv, report.txt and report.json.
inline void write_experiment(const ExperimentResult& r, const Index& index, const std::string& collection,
                             const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "runs");
  fs::create_directories(dir / "weights");
  const auto& infos = experiment_methods();
  for (std::size_t i = 0; i < r.methods.size(); ++i) {
    std::ofstream run(dir / "runs" / (infos[i].file + ".run"), std::ios::binary);
    for (const auto& list : r.methods[i].runs) write_trec_run(run, list, index, infos[i].name);
    if (!r.methods[i].weight_tables.empty()) {
      std::ofstream weights(dir / "weights" / (infos[i].file + ".tsv"), std::ios::binary);
      for (const auto& table : r.methods[i].weight_tables) {
        if (!table.query_id.empty()) write_weight_table(weights, table);
      }
    }
  }
  {
    std::ofstream out(dir / "per_query.tsv", std::ios::binary);
    out << "method\tquery_id\tp@10\tAP\tRR\n";
    for (const auto& method : r.methods) {
      for (const auto& [qid, qm] : method.eval.per_query) {
        out << fmt::format("{}\t{}\t{:.6f}\t{}\t{}\n", method.name, qid, qm.p10,
                           qm.ap ? fmt::format("{:.6f}", *qm.ap) : "NA", qm.rr ? fmt::format("{:.6f}", *qm.rr) : "NA");
      }
    }
  }
  {
    std::ofstream out(dir / "report.txt", std::ios::binary);
    out << format_report_table(r, collection);
  }
  {
    std::ofstream out(dir / "report.json", std::ios::binary);
    out << report_json(r, collection).dump(2) << '\n';
  }
}

/// Loads every input named by the config, runs the protocol and writes the
/// outputs into cfg.output_dir.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  const Index index = build_index(read_corpus(cfg.corpus), cfg.analyzer);
  const auto topics = read_topics(cfg.topics);
  const Qrels qrels = read_qrels(cfg.qrels);
  auto result = run_experiment(index, topics, qrels, cfg);
  write_experiment(result, index, cfg.collection_name, cfg.output_dir);
  return result;
}

}  // namespace twqp
