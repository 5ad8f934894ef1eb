// twqp: command-line driver for indexing, retrieval, term weighting,
// re-ranking, evaluation and the end-to-end experiment protocol.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "twqp/twqp.hpp"

namespace fs = std::filesystem;
using namespace twqp;

namespace {

// Options shared by most subcommands. Each one overrides the config file only
// when given on the command line.
struct Overrides {
  std::optional<std::string> config;
  std::optional<std::string> corpus, topics, qrels, output;
  std::optional<std::size_t> k, rerank_depth, rm3_m, rm3_n, qpp_m, nwig_m, threads;
  std::optional<double> rm3_mu, rm3_lambda;
  std::optional<std::string> stemmer, stopwords, method, qpp_kind, mu_grid, m_grid, collection;
  bool no_lowercase = false;

  void add_paths(CLI::App* app) {
    app->add_option("--corpus", corpus, "Corpus: JSONL file (doc_id, text) or directory of text files");
    app->add_option("--topics", topics, "Topics file: query_id<TAB>title");
    app->add_option("--qrels", qrels, "TREC qrels file");
  }
  void add_analyzer(CLI::App* app) {
    app->add_option("--stemmer", stemmer, "porter | none");
    app->add_option("--stopwords", stopwords, "default | none | comma-separated list");
    app->add_flag("--no-lowercase", no_lowercase, "Keep token case");
  }
  void add_rm3(CLI::App* app) {
    app->add_option("--rm3-m", rm3_m, "RM3 feedback documents");
    app->add_option("--rm3-n", rm3_n, "RM3 expansion terms");
    app->add_option("--rm3-mu", rm3_mu, "RM3 document-weight smoothing");
    app->add_option("--rm3-lambda", rm3_lambda, "RM3 query-model mass");
  }

  ExperimentConfig resolve() const {
    ExperimentConfig c = config ? load_config(fs::path(*config)) : ExperimentConfig{};
    boost::property_tree::ptree pt;
    auto put = [&](const char* key, const auto& value) {
      if (value) pt.put(key, fmt::format("{}", *value));
    };
    put("paths.corpus", corpus);
    put("paths.topics", topics);
    put("paths.qrels", qrels);
    put("paths.output", output);
    put("paths.collection", collection);
    put("analyzer.stemmer", stemmer);
    put("analyzer.stopwords", stopwords);
    if (no_lowercase) pt.put("analyzer.lowercase", "false");
    put("retrieval.k", k);
    put("retrieval.rerank_depth", rerank_depth);
    put("retrieval.mu_grid", mu_grid);
    put("rm3.m", rm3_m);
    put("rm3.n", rm3_n);
    if (rm3_mu) pt.put("rm3.mu", detail::format_double(*rm3_mu));
    if (rm3_lambda) pt.put("rm3.lambda", detail::format_double(*rm3_lambda));
    put("rm3.m_grid", m_grid);
    put("weighting.method", method);
    put("weighting.nwig_m", nwig_m);
    put("qpp.kind", qpp_kind);
    put("qpp.m", qpp_m);
    put("run.threads", threads);
    return from_ptree(pt, std::move(c));
  }
};

std::ofstream open_output(const std::string& path) {
  if (auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  return out;
}

std::vector<Query> load_queries(const std::string& topics_path, const Index& index) {
  const auto topics = read_topics(fs::path(topics_path));
  return make_queries(topics, index);
}

std::vector<Query> judged(std::vector<Query> queries, const Qrels& qrels) {
  std::erase_if(queries, [&](const Query& q) { return !qrels.has_query(q.id); });
  if (queries.empty()) throw Error("no query has relevance judgments");
  return queries;
}

std::string require(const std::optional<std::string>& value, const char* what) {
  if (!value) throw Error(std::string("missing required option ") + what);
  return *value;
}

std::map<std::string, std::vector<std::string>> read_run_rankings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open run '" + path + "'");
  std::map<std::string, std::vector<std::string>> rankings;
  for (const auto& [qid, entries] : read_trec_run(in)) {
    auto& ranking = rankings[qid];
    for (const auto& e : entries) ranking.push_back(e.doc_id);
  }
  return rankings;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Query term weighting by predicted retrieval quality"};
  app.require_subcommand(1);
  spdlog::set_level(spdlog::level::warn);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Log progress to stderr");

  Overrides o;
  std::string index_path, out_path, run_path, weights_path, baseline_path, tag;
  double mu = 1000.0;
  std::size_t k = 1000;

  // index
  auto* cmd_index = app.add_subcommand("index", "Build an index snapshot from a corpus");
  cmd_index->add_option("--config", o.config, "Experiment config file");
  o.add_paths(cmd_index);
  o.add_analyzer(cmd_index);
  cmd_index->add_option("--out", out_path, "Snapshot file")->required();

  // search
  auto* cmd_search = app.add_subcommand("search", "Query-likelihood retrieval to a TREC run file");
  cmd_search->add_option("--index", index_path)->required();
  cmd_search->add_option("--topics", o.topics)->required();
  cmd_search->add_option("--k", k, "Retrieval depth")->capture_default_str();
  cmd_search->add_option("--mu", mu, "Dirichlet smoothing mass")->capture_default_str();
  cmd_search->add_option("--tag", tag, "Run tag")->default_val("QL");
  cmd_search->add_option("--out", out_path)->required();

  // tune-mu
  auto* cmd_tune_mu = app.add_subcommand("tune-mu", "Pick mu by MAP over a grid");
  cmd_tune_mu->add_option("--config", o.config);
  cmd_tune_mu->add_option("--index", index_path)->required();
  cmd_tune_mu->add_option("--topics", o.topics);
  cmd_tune_mu->add_option("--qrels", o.qrels);
  cmd_tune_mu->add_option("--grid", o.mu_grid, "a,b,c or start:stop:step (default 100:5000:100)");
  cmd_tune_mu->add_option("--k", o.k);
  cmd_tune_mu->add_option("--threads", o.threads);

  // tune-rm3
  auto* cmd_tune_rm3 = app.add_subcommand("tune-rm3", "Pick the RM3 feedback depth by MAP over a grid");
  cmd_tune_rm3->add_option("--config", o.config);
  cmd_tune_rm3->add_option("--index", index_path)->required();
  cmd_tune_rm3->add_option("--topics", o.topics);
  cmd_tune_rm3->add_option("--qrels", o.qrels);
  cmd_tune_rm3->add_option("--mu", mu, "Initial-retrieval mu")->capture_default_str();
  cmd_tune_rm3->add_option("--grid", o.m_grid, "a,b,c or start:stop:step (default 5:100:5)");
  cmd_tune_rm3->add_option("--k", o.k);
  cmd_tune_rm3->add_option("--threads", o.threads);
  o.add_rm3(cmd_tune_rm3);

  // weigh
  auto* cmd_weigh = app.add_subcommand("weigh", "Weigh RM3 candidate terms for every topic");
  cmd_weigh->add_option("--config", o.config);
  cmd_weigh->add_option("--index", index_path)->required();
  cmd_weigh->add_option("--topics", o.topics);
  cmd_weigh->add_option("--method", o.method, "TWQP(WIG) | TWQP(NQC) | TWQP(ScoreRatio) | nWIG | ScoreRatio | SROR");
  cmd_weigh->add_option("--qpp", o.qpp_kind, "Predictor for TWQP: WIG | NQC | ScoreRatio");
  cmd_weigh->add_option("--qpp-m", o.qpp_m, "Predictor depth override");
  cmd_weigh->add_option("--mu", mu, "Smoothing mass for retrieval and predictors")->capture_default_str();
  cmd_weigh->add_option("--k", o.k);
  cmd_weigh->add_option("--threads", o.threads);
  cmd_weigh->add_option("--rm-dump", run_path, "Also write each query's RM3 distribution here");
  o.add_rm3(cmd_weigh);
  cmd_weigh->add_option("--out", out_path)->required();

  // rerank
  auto* cmd_rerank = app.add_subcommand("rerank", "Re-rank an initial run with a weight table or RM3");
  cmd_rerank->add_option("--config", o.config);
  cmd_rerank->add_option("--index", index_path)->required();
  cmd_rerank->add_option("--run", run_path, "Initial run")->required();
  auto* weights_opt = cmd_rerank->add_option("--weights", weights_path, "Weight table from 'weigh'");
  bool use_rm3 = false;
  auto* rm3_flag = cmd_rerank->add_flag("--rm3", use_rm3, "Re-rank by RM3 cross entropy (needs --topics)");
  weights_opt->excludes(rm3_flag);
  cmd_rerank->add_option("--topics", o.topics);
  cmd_rerank->add_option("--mu", mu)->capture_default_str();
  cmd_rerank->add_option("--depth", o.rerank_depth, "Documents re-ranked from the top (default 100; RM3: all)");
  cmd_rerank->add_option("--tag", tag)->default_val("rerank");
  o.add_rm3(cmd_rerank);
  cmd_rerank->add_option("--out", out_path)->required();

  // eval
  auto* cmd_eval = app.add_subcommand("eval", "p@10, MAP and MRR of a run; optional comparison to a baseline");
  cmd_eval->add_option("--run", run_path)->required();
  cmd_eval->add_option("--qrels", o.qrels)->required();
  cmd_eval->add_option("--baseline", baseline_path, "Baseline run for t-tests and RI");
  cmd_eval->add_option("--k", k, "Evaluation depth")->capture_default_str();
  bool per_query = false;
  cmd_eval->add_flag("--per-query", per_query, "Print per-query values");

  // experiment
  auto* cmd_experiment = app.add_subcommand("experiment", "Run the full tuning, weighting and re-ranking protocol");
  cmd_experiment->add_option("--config", o.config);
  o.add_paths(cmd_experiment);
  o.add_analyzer(cmd_experiment);
  o.add_rm3(cmd_experiment);
  cmd_experiment->add_option("--out", o.output, "Output directory");
  cmd_experiment->add_option("--name", o.collection, "Collection label in reports");
  cmd_experiment->add_option("--k", o.k);
  cmd_experiment->add_option("--rerank-depth", o.rerank_depth);
  cmd_experiment->add_option("--mu-grid", o.mu_grid);
  cmd_experiment->add_option("--m-grid", o.m_grid);
  cmd_experiment->add_option("--qpp-m", o.qpp_m);
  cmd_experiment->add_option("--threads", o.threads);
  std::string save_config_path;
  cmd_experiment->add_option("--save-config", save_config_path, "Write the resolved config here");

  // make-synthetic
  auto* cmd_synth = app.add_subcommand("make-synthetic", "Generate a synthetic corpus, topics and qrels");
  SyntheticSpec synth;
  cmd_synth->add_option("--seed", synth.seed)->capture_default_str();
  cmd_synth->add_option("--docs", synth.docs)->capture_default_str()->check(CLI::PositiveNumber);
  cmd_synth->add_option("--vocab", synth.vocab)->capture_default_str()->check(CLI::PositiveNumber);
  cmd_synth->add_option("--queries", synth.queries)->capture_default_str()->check(CLI::PositiveNumber);
  cmd_synth->add_option("--out", out_path, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);
  if (verbose) spdlog::set_level(spdlog::level::info);

  try {
    if (cmd_index->parsed()) {
      const auto cfg = o.resolve();
      if (cfg.corpus.empty()) throw Error("missing required option --corpus");
      const Index index = build_index(read_corpus(cfg.corpus), cfg.analyzer);
      save_index(index, fs::path(out_path));
      std::cout << fmt::format("indexed {} documents, {} terms, {} tokens\n", index.doc_count(),
                               index.vocabulary_size(), index.total_tokens());
    } else if (cmd_search->parsed()) {
      const Index index = load_index(fs::path(index_path));
      auto out = open_output(out_path);
      for (const auto& q : load_queries(*o.topics, index)) write_trec_run(out, retrieve_topk(q, k, mu, index), index, tag);
    } else if (cmd_tune_mu->parsed()) {
      const auto cfg = o.resolve();
      const Index index = load_index(fs::path(index_path));
      const Qrels qrels = read_qrels(fs::path(require(o.qrels ? o.qrels : std::optional(cfg.qrels.string()), "--qrels")));
      const auto queries = judged(load_queries(o.topics.value_or(cfg.topics.string()), index), qrels);
      const auto tuned = tune_mu(index, queries, qrels, cfg.mu_grid, cfg.k, cfg.threads);
      for (const auto& [value, map] : tuned.map_by_value) std::cout << fmt::format("mu {} MAP {:.6f}\n", value, map);
      std::cout << fmt::format("best mu {}\n", tuned.best);
    } else if (cmd_tune_rm3->parsed()) {
      const auto cfg = o.resolve();
      const Index index = load_index(fs::path(index_path));
      const Qrels qrels = read_qrels(fs::path(o.qrels.value_or(cfg.qrels.string())));
      const auto queries = judged(load_queries(o.topics.value_or(cfg.topics.string()), index), qrels);
      const auto tuned = tune_rm3_m(index, queries, qrels, cfg.rm3_m_grid, mu, cfg.rm3, cfg.k, cfg.threads);
      for (const auto& [value, map] : tuned.map_by_value) std::cout << fmt::format("m {} MAP {:.6f}\n", value, map);
      std::cout << fmt::format("best m {}\n", tuned.best);
    } else if (cmd_weigh->parsed()) {
      auto cfg = o.resolve();
      const Index index = load_index(fs::path(index_path));
      const Searcher searcher(index);
      WeightingMethod method = cfg.weighting;
      if (o.qpp_kind) {
        const auto kind = parse_predictor(*o.qpp_kind);
        method = kind == PredictorKind::WIG ? WeightingMethod::TWQP_WIG
                 : kind == PredictorKind::NQC ? WeightingMethod::TWQP_NQC
                                              : WeightingMethod::TWQP_ScoreRatio;
      }
      WeightingParams params;
      params.k = cfg.k;
      params.mu = mu;
      params.nwig_depth = cfg.nwig_depth;
      params.threads = cfg.threads;
      if (o.qpp_m) params.predictor_depth = *o.qpp_m;
      auto out = open_output(out_path);
      std::optional<std::ofstream> rm_out;
      if (!run_path.empty()) rm_out = open_output(run_path);
      for (const auto& q : load_queries(o.topics.value_or(cfg.topics.string()), index)) {
        const RankedList initial = retrieve_topk(q, cfg.k, mu, index);
        if (initial.empty()) continue;
        Rm3Params rm3 = cfg.rm3;
        rm3.m = std::min(rm3.m, initial.size());
        const auto rm = build_rm3(q, initial, rm3, index);
        if (rm_out) {
          *rm_out << "# " << q.id << '\n';
          write_relevance_model(*rm_out, rm);
        }
        std::vector<std::string> candidates;
        for (const auto& tp : top_n_terms(rm, cfg.rm3.n)) candidates.push_back(tp.term);
        write_weight_table(out, weigh_terms(q, candidates, method, params, searcher));
      }
    } else if (cmd_rerank->parsed()) {
      auto cfg = o.resolve();
      const Index index = load_index(fs::path(index_path));
      std::ifstream run_in(run_path);
      if (!run_in) throw Error("cannot open run '" + run_path + "'");
      const auto runs = read_trec_run(run_in);
      auto out = open_output(out_path);
      if (use_rm3) {
        std::map<std::string, Query> queries;
        for (auto& q : load_queries(require(o.topics, "--topics"), index)) queries.emplace(q.id, q);
        for (const auto& [qid, entries] : runs) {
          auto q = queries.find(qid);
          if (q == queries.end() || entries.empty()) continue;
          const RankedList initial = to_ranked_list(qid, entries, index);
          Rm3Params rm3 = cfg.rm3;
          rm3.m = std::min(rm3.m, initial.size());
          const auto rm = build_rm3(q->second, initial, rm3, index);
          const std::size_t depth = o.rerank_depth.value_or(initial.size());
          write_trec_run(out, rerank_rm3(initial, rm, RerankConfig{depth, initial.size(), mu}, index), index, tag);
        }
      } else {
        if (weights_path.empty()) throw Error("rerank needs --weights or --rm3");
        std::ifstream win(weights_path);
        if (!win) throw Error("cannot open weights '" + weights_path + "'");
        const auto tables = read_weight_tables(win);
        for (const auto& [qid, entries] : runs) {
          auto table = tables.find(qid);
          if (table == tables.end() || entries.empty()) continue;
          const RankedList initial = to_ranked_list(qid, entries, index);
          const std::size_t depth = std::min(o.rerank_depth.value_or(100), initial.size());
          write_trec_run(out, rerank_twqp(initial, table->second, RerankConfig{depth, initial.size(), mu}, index), index,
                         tag);
        }
      }
    } else if (cmd_eval->parsed()) {
      const Qrels qrels = read_qrels(fs::path(*o.qrels));
      const auto eval = evaluate_run(read_run_rankings(run_path), qrels, k);
      if (per_query) {
        for (const auto& [qid, qm] : eval.per_query) {
          std::cout << fmt::format("{}\tp@10 {:.4f}\tAP {}\tRR {}\n", qid, qm.p10,
                                   qm.ap ? fmt::format("{:.4f}", *qm.ap) : "NA", qm.rr ? fmt::format("{:.4f}", *qm.rr) : "NA");
        }
      }
      std::cout << fmt::format("queries {} (judged {})\np@10 {:.4f}\nMAP {:.4f}\nMRR {:.4f}\n", eval.means.queries,
                               eval.means.judged_queries, eval.means.p10, eval.means.map, eval.means.mrr);
      if (!baseline_path.empty()) {
        const auto base = evaluate_run(read_run_rankings(baseline_path), qrels, k);
        const std::pair<const char*, Measure> measures[] = {{"p@10", Measure::P10}, {"MAP", Measure::AP}, {"MRR", Measure::RR}};
        for (const auto& [label, measure] : measures) {
          const auto a = measure_vector(eval, measure);
          const auto b = measure_vector(base, measure);
          if (a.size() < 2) continue;
          const auto t = paired_ttest(a, b);
          std::cout << fmt::format("t-test {} vs baseline: t={:.4f} p={:.6f}{}\n", label, t.t, t.p_value,
                                   t.degenerate ? " (zero-variance differences)" : "");
        }
        std::cout << fmt::format("RI(p@10) vs baseline: {:.4f}\n",
                                 robustness_index(measure_vector(eval, Measure::P10), measure_vector(base, Measure::P10)));
      }
    } else if (cmd_experiment->parsed()) {
      const auto cfg = o.resolve();
      if (cfg.corpus.empty() || cfg.topics.empty() || cfg.qrels.empty())
        throw Error("experiment needs corpus, topics and qrels (config file or flags)");
      if (!save_config_path.empty()) {
        auto out = open_output(save_config_path);
        save_config(cfg, out);
      }
      const auto result = run_experiment(cfg);
      std::cout << format_report_table(result, cfg.collection_name);
    } else if (cmd_synth->parsed()) {
      const auto collection = make_synthetic(synth);
      write_synthetic(collection, fs::path(out_path));
      std::cout << fmt::format("wrote {} documents and {} topics to {}\n", collection.docs.size(),
                               collection.topics.size(), out_path);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
