#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "twqp/analysis.hpp"
#include "twqp/error.hpp"
#include "twqp/qpp.hpp"
#include "twqp/relevance_model.hpp"
#include "twqp/tuning.hpp"
#include "twqp/weighting.hpp"

namespace twqp {

/// Everything the experiment pipeline needs. Defaults are the reference
/// protocol settings: depth 1000, top-100 re-ranking, RM3 with mu=1000,
/// lambda=0.9, n=100, mu grid 100..5000 and feedback-depth grid 5..100.
struct ExperimentConfig {
  std::filesystem::path corpus;
  std::filesystem::path topics;
  std::filesystem::path qrels;
  std::filesystem::path output_dir = "twqp-out";
  std::string collection_name = "collection";

  AnalyzerConfig analyzer;
  std::size_t k = 1000;
  std::size_t rerank_depth = 100;
  Rm3Params rm3;  // m is the fallback when the m grid is a single value
  WeightingMethod weighting = WeightingMethod::TWQP_NQC;
  PredictorSpec predictor = PredictorSpec::of(PredictorKind::NQC);
  std::size_t nwig_depth = kNwigDefaultDepth;
  std::vector<double> mu_grid = default_mu_grid();
  std::vector<std::size_t> rm3_m_grid = default_rm3_m_grid();
  std::uint64_t seed = 32;
  std::size_t threads = 0;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

namespace detail {

// Shortest text that parses back to the same double.
inline std::string format_double(double v) { return fmt::format("{}", v); }

inline bool parse_bool(const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw Error("expected a boolean, got '" + text + "'");
}

// "a,b,c" or "start:stop:step" (inclusive).
template <typename T>
std::vector<T> parse_grid(const std::string& text) {
  std::vector<T> grid;
  if (text.find(':') != std::string::npos) {
    std::istringstream in(text);
    std::string a, b, c;
    std::getline(in, a, ':');
    std::getline(in, b, ':');
    std::getline(in, c, ':');
    const double start = std::stod(a), stop = std::stod(b), step = c.empty() ? 1.0 : std::stod(c);
    if (!(step > 0.0)) throw Error("grid step must be positive in '" + text + "'");
    for (double v = start; v <= stop + 1e-9 * step; v += step) grid.push_back(static_cast<T>(v));
  } else {
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
      if (item.find_first_not_of(" ") == std::string::npos) continue;
      grid.push_back(static_cast<T>(std::stod(item)));
    }
  }
  if (grid.empty()) throw Error("empty parameter grid '" + text + "'");
  return grid;
}

template <typename T>
std::string join_grid(const std::vector<T>& grid) {
  std::string out;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (i) out += ',';
    if constexpr (std::is_floating_point_v<T>) {
      out += format_double(grid[i]);
    } else {
      out += std::to_string(grid[i]);
    }
  }
  return out;
}

inline std::string stopwords_to_text(const std::set<std::string>& words) {
  if (words == default_stopwords()) return "default";
  if (words.empty()) return "none";
  std::string out;
  for (const auto& w : words) out += (out.empty() ? "" : ",") + w;
  return out;
}

inline std::set<std::string> stopwords_from_text(const std::string& text) {
  if (text == "default") return default_stopwords();
  if (text == "none" || text.empty()) return {};
  std::set<std::string> words;
  std::istringstream in(text);
  std::string w;
  while (std::getline(in, w, ',')) {
    if (!w.empty()) words.insert(w);
  }
  return words;
}

}  // namespace detail

/// Sectioned key-value representation (INI).
inline boost::property_tree::ptree to_ptree(const ExperimentConfig& c) {
  boost::property_tree::ptree pt;
  pt.put("paths.corpus", c.corpus.string());
  pt.put("paths.topics", c.topics.string());
  pt.put("paths.qrels", c.qrels.string());
  pt.put("paths.output", c.output_dir.string());
  pt.put("paths.collection", c.collection_name);
  pt.put("analyzer.lowercase", c.analyzer.lowercase ? "true" : "false");
  pt.put("analyzer.stemmer", std::string(to_string(c.analyzer.stemmer)));
  pt.put("analyzer.stopwords", detail::stopwords_to_text(c.analyzer.stopwords));
  pt.put("retrieval.k", c.k);
  pt.put("retrieval.rerank_depth", c.rerank_depth);
  pt.put("retrieval.mu_grid", detail::join_grid(c.mu_grid));
  pt.put("rm3.m", c.rm3.m);
  pt.put("rm3.mu", detail::format_double(c.rm3.mu));
  pt.put("rm3.lambda", detail::format_double(c.rm3.lambda));
  pt.put("rm3.n", c.rm3.n);
  pt.put("rm3.m_grid", detail::join_grid(c.rm3_m_grid));
  pt.put("weighting.method", std::string(to_string(c.weighting)));
  pt.put("weighting.nwig_m", c.nwig_depth);
  pt.put("qpp.kind", std::string(to_string(c.predictor.kind)));
  pt.put("qpp.m", c.predictor.m);
  pt.put("run.seed", c.seed);
  pt.put("run.threads", c.threads);
  return pt;
}

/// Applies the keys present in pt on top of base. Unknown keys are errors.
inline ExperimentConfig from_ptree(const boost::property_tree::ptree& pt, ExperimentConfig c = {}) {
  static const std::set<std::string> known = {
      "paths.corpus",        "paths.topics",      "paths.qrels",       "paths.output",   "paths.collection",
      "analyzer.lowercase",  "analyzer.stemmer",  "analyzer.stopwords", "retrieval.k",   "retrieval.rerank_depth",
      "retrieval.mu_grid",   "rm3.m",             "rm3.mu",            "rm3.lambda",     "rm3.n",
      "rm3.m_grid",          "weighting.method",  "weighting.nwig_m",  "qpp.kind",       "qpp.m",
      "run.seed",            "run.threads"};
  for (const auto& [section, body] : pt) {
    for (const auto& [key, value] : body) {
      if (!known.contains(section + "." + key)) throw Error("unknown config key '" + section + "." + key + "'");
    }
  }
  auto get = [&](const char* key) { return pt.get_optional<std::string>(key); };
  auto get_size = [&](const char* key, std::size_t& out) {
    if (auto v = get(key)) out = static_cast<std::size_t>(std::stoull(*v));
  };
  try {
    if (auto v = get("paths.corpus")) c.corpus = *v;
    if (auto v = get("paths.topics")) c.topics = *v;
    if (auto v = get("paths.qrels")) c.qrels = *v;
    if (auto v = get("paths.output")) c.output_dir = *v;
    if (auto v = get("paths.collection")) c.collection_name = *v;
    if (auto v = get("analyzer.lowercase")) c.analyzer.lowercase = detail::parse_bool(*v);
    if (auto v = get("analyzer.stemmer")) c.analyzer.stemmer = parse_stemmer(*v);
    if (auto v = get("analyzer.stopwords")) c.analyzer.stopwords = detail::stopwords_from_text(*v);
    get_size("retrieval.k", c.k);
    get_size("retrieval.rerank_depth", c.rerank_depth);
    if (auto v = get("retrieval.mu_grid")) c.mu_grid = detail::parse_grid<double>(*v);
    get_size("rm3.m", c.rm3.m);
    if (auto v = get("rm3.mu")) c.rm3.mu = std::stod(*v);
    if (auto v = get("rm3.lambda")) c.rm3.lambda = std::stod(*v);
    get_size("rm3.n", c.rm3.n);
    if (auto v = get("rm3.m_grid")) c.rm3_m_grid = detail::parse_grid<std::size_t>(*v);
    if (auto v = get("weighting.method")) c.weighting = parse_weighting_method(*v);
    get_size("weighting.nwig_m", c.nwig_depth);
    if (auto v = get("qpp.kind")) {
      c.predictor.kind = parse_predictor(*v);
      if (!get("qpp.m")) c.predictor.m = default_depth(c.predictor.kind);
    }
    get_size("qpp.m", c.predictor.m);
    if (auto v = get("run.seed")) c.seed = std::stoull(*v);
    get_size("run.threads", c.threads);
  } catch (const std::logic_error& e) {  // std::stod/stoull failures
    throw Error(std::string("bad config value: ") + e.what());
  }
  if (c.k < 1) throw Error("retrieval.k must be >= 1");
  if (c.rerank_depth < 1 || c.rerank_depth > c.k) throw Error("retrieval.rerank_depth must be in [1, k]");
  if (c.rm3.lambda < 0.0 || c.rm3.lambda > 1.0) throw Error("rm3.lambda must be in [0, 1]");
  if (c.predictor.m < 1) throw Error("qpp.m must be >= 1");
  return c;
}

inline void save_config(const ExperimentConfig& c, std::ostream& out) {
  boost::property_tree::write_ini(out, to_ptree(c));
}

inline ExperimentConfig load_config(std::istream& in, ExperimentConfig base = {}) {
  boost::property_tree::ptree pt;
  try {
    boost::property_tree::read_ini(in, pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw Error(std::string("config: ") + e.what());
  }
  return from_ptree(pt, std::move(base));
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config '" + path.string() + "'");
  return load_config(in);
}

}  // namespace twqp
