// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include <boost/math/distributions/binomial.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "oracles.hpp"
#include "twqp/twqp.hpp"

using namespace twqp;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

AnalyzerConfig plain() {
  AnalyzerConfig c;
  c.stemmer = Stemmer::none;
  c.stopwords.clear();
  return c;
}

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Collects the first failure message; later checks keep running so the detail
// names the first problem found.
struct Check {
  Outcome out;
  void require(bool ok, const std::string& what) {
    if (!ok && out.pass) {
      out.pass = false;
      out.detail = what;
    }
  }
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

std::map<std::string, std::string> tree(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file()) files[fs::relative(entry.path(), dir).string()] = slurp(entry.path());
  }
  return files;
}

// 1. retrieve_topk against exhaustive scoring of every matching document.
Outcome retrieval_oracle() {
  Check c;
  const auto start = Clock::now();
  std::mt19937_64 rng(1001);
  std::size_t lists = 0;
  for (int corpus = 0; corpus < 10; ++corpus) {
    const std::size_t docs = 50 + rng() % 451;  // up to 500
    const std::size_t vocab = 30 + rng() % 400;
    const auto collection = oracle::random_corpus(rng, docs, vocab, 1, 60);
    const auto index = build_index(collection, plain());
    const auto r = oracle::recount(collection, plain());
    for (int qi = 0; qi < 10; ++qi) {
      std::vector<std::string> terms;
      for (std::size_t t = 1 + rng() % 4; t > 0; --t) terms.push_back("w" + std::to_string(rng() % vocab));
      const double mu = std::vector<double>{100, 1000, 2500}[rng() % 3];
      const std::size_t k = qi % 2 ? 1000 : 20;
      const auto list = retrieve_topk({"q", terms}, k, mu, index);

      std::vector<std::pair<std::string, double>> expected;
      for (const auto& [doc, row] : r.tf) {
        bool matches = false;
        for (const auto& w : terms) matches = matches || row.contains(w);
        if (matches) expected.emplace_back(doc, r.ql(doc, terms, mu));
      }
      std::sort(expected.begin(), expected.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
      });
      if (expected.size() > k) expected.resize(k);
      c.require(list.size() == expected.size(), fmt::format("corpus {} query {}: length mismatch", corpus, qi));
      for (std::size_t i = 0; i < std::min(list.size(), expected.size()); ++i) {
        c.require(index.doc_name(list.entries[i].doc) == expected[i].first,
                  fmt::format("corpus {} query {}: order differs at rank {}", corpus, qi, i + 1));
        const double got = list.entries[i].score;
        const double want = expected[i].second;
        c.require(got == want || std::abs(got - want) <= 1e-10,
                  fmt::format("corpus {} query {}: score differs at rank {} ({} vs {})", corpus, qi, i + 1,
                              got, want));
      }
      ++lists;
    }
  }
  const double elapsed = seconds_since(start);
  c.require(elapsed < 10.0, fmt::format("took {:.2f}s", elapsed));
  if (c.out.pass) c.out.detail = fmt::format("{} lists over 10 corpora, {:.2f}s", lists, elapsed);
  return c.out;
}

// 2. Query-indicator weights reproduce the query-likelihood ordering.
Outcome indicator_reduction() {
  Check c;
  SyntheticSpec spec;
  spec.docs = 500;
  spec.queries = 50;
  const auto collection = make_synthetic(spec);
  const auto index = build_index(collection.docs);
  std::mt19937_64 rng(2002);
  std::size_t checked = 0;
  for (const auto& topic : collection.topics) {
    auto q = make_query(topic.id, topic.title, index);
    // Random extra occurrences and a random background term.
    if (rng() % 2) q.terms.push_back(q.terms[rng() % q.terms.size()]);
    q.terms.push_back(index.term(static_cast<TermId>(rng() % index.vocabulary_size())));
    const auto initial = retrieve_topk(q, 1000, 1000, index);
    TermWeightTable table{q.id, WeightingMethod::TWQP_NQC, {}};
    for (const auto& [term, count] : term_counts(q)) table.weights.push_back({term, static_cast<double>(count)});
    const auto reranked = rerank_twqp(initial, table, RerankConfig{}, index);
    bool same = reranked.size() == initial.size();
    for (std::size_t i = 0; same && i < initial.size(); ++i) same = reranked.entries[i].doc == initial.entries[i].doc;
    c.require(same, "ordering changed for query " + q.id);
    ++checked;
  }
  if (c.out.pass) c.out.detail = fmt::format("{} queries, identical order", checked);
  return c.out;
}

// 3. RM3 sums to one and is linear in lambda.
Outcome rm3_properties() {
  Check c;
  std::mt19937_64 rng(3003);
  double worst_norm = 0.0;
  double worst_linear = 0.0;
  int draws = 0;
  while (draws < 100) {
    const auto docs = oracle::random_corpus(rng, 20 + rng() % 180, 20 + rng() % 200, 1, 80);
    const auto index = build_index(docs, plain());
    std::vector<std::string> terms;
    for (std::size_t t = 1 + rng() % 4; t > 0; --t) terms.push_back(index.term(static_cast<TermId>(rng() % index.vocabulary_size())));
    const Query q{"q", terms};
    const auto initial = retrieve_topk(q, 1000, 1000, index);
    const std::size_t m = 1 + rng() % 100;
    const double lambda = std::uniform_real_distribution<double>(0, 1)(rng);
    Rm3Params params{.m = std::min(m, initial.size()), .mu = 1000, .lambda = lambda, .n = 100};
    const auto rm = build_rm3(q, initial, params, index);
    params.lambda = 1.0;
    const auto rm1 = build_rm3(q, initial, params, index);
    params.lambda = 0.0;
    const auto rm0 = build_rm3(q, initial, params, index);
    double total = 0.0;
    for (const auto& tp : rm.term_probs) {
      total += tp.prob;
      worst_linear =
          std::max(worst_linear, std::abs(tp.prob - (lambda * rm1.prob(tp.term) + (1 - lambda) * rm0.prob(tp.term))));
    }
    worst_norm = std::max(worst_norm, std::abs(total - 1.0));
    ++draws;
  }
  c.require(worst_norm <= 1e-9, fmt::format("normalization off by {:.3g}", worst_norm));
  c.require(worst_linear <= 1e-12, fmt::format("linearity off by {:.3g}", worst_linear));
  if (c.out.pass) {
    c.out.detail = fmt::format("100 draws, max |sum-1| = {:.2g}, max linearity error = {:.2g}", worst_norm, worst_linear);
  }
  return c.out;
}

// 4. Sigmoid fixed points and monotonicity.
Outcome sigmoid_properties() {
  Check c;
  c.require(twqp_weight(0.0) == 0.5, "weight(0) != 0.5");
  c.require(std::abs(twqp_weight(std::log(3.0)) - 0.75) <= 1e-12, "weight(ln 3) != 0.75");
  c.require(std::abs(twqp_weight(-std::log(3.0)) - 0.25) <= 1e-12, "weight(-ln 3) != 0.25");
  double prev = -1.0;
  for (int i = 0; i < 1000; ++i) {
    const double x = -20.0 + 40.0 * i / 999.0;
    const double w = twqp_weight(x);
    c.require(w > prev, fmt::format("not increasing at x = {}", x));
    c.require(w > 0.0 && w < 1.0, fmt::format("out of (0,1) at x = {}", x));
    prev = w;
  }
  if (c.out.pass) c.out.detail = "fixed points exact, strictly increasing on 1000 points";
  return c.out;
}

// 5. Analytic zeros of the predictors.
Outcome predictor_zeros() {
  Check c;
  const std::vector<Document> docs = {{"d1", "x y"}, {"d2", "y x"}, {"d3", "x y x y"}};
  const auto index = build_index(docs, plain());
  const Query q{"q", {"x", "y"}};

  RankedList constant{"q", {}, 4};
  for (std::uint32_t i = 0; i < 4; ++i) constant.entries.push_back({DocNo{i}, -7.25});
  c.require(predict_nqc(constant, q, 150, index) == 0.0, "NQC on constant scores is not 0");

  // d1..d3 have exactly the collection's mix of x and y.
  const auto list = retrieve_topk(q, 3, 1000, index);
  c.require(predict_wig(list, q, 5, 1000, index) == 0.0, "WIG with p_d = p_D is not 0");

  RankedList a{"q", {}, 3}, b{"q", {}, 3}, disjoint{"q", {}, 3};
  for (std::uint32_t i = 0; i < 3; ++i) {
    a.entries.push_back({DocNo{i}, -1.0 * i});
    b.entries.push_back({DocNo{2 - i}, -1.0 * i});
    disjoint.entries.push_back({DocNo{i + 10}, 0.0});
  }
  c.require(result_overlap_loss(a, b) == 0.0, "SROR on identical sets is not 0");
  c.require(result_overlap_loss(a, disjoint) == 1.0, "SROR on disjoint lists is not 1");
  if (c.out.pass) c.out.detail = "NQC 0, WIG 0, SROR 0 and 1, all exact";
  return c.out;
}

// 6. Evaluation fixtures and the t-test against numerical integration.
Outcome evaluation_fixtures() {
  Check c;
  auto judged = [](std::initializer_list<const char*> docs) {
    Judgments j;
    for (const char* d : docs) j.emplace(d, 1);
    return j;
  };
  const std::vector<std::string> three = {"d1", "d2", "d3"};
  c.require(std::abs(*average_precision(three, judged({"d1", "d3"})) - 0.833333) <= 1e-6, "AP fixture");

  const std::vector<std::string> ten = {"r1", "n", "r2", "n", "n", "r3", "n", "n", "n", "n", "r4"};
  c.require(std::abs(precision_at(ten, judged({"r1", "r2", "r3", "r4"})) - 0.3) <= 1e-12, "p@10 with 3 of 10");
  c.require(precision_at(std::vector<std::string>{}, judged({"r1"})) == 0.0, "p@10 of empty run");
  const std::vector<std::string> five = {"r1", "n", "r2", "n", "n"};
  c.require(std::abs(precision_at(five, judged({"r1", "r2"})) - 0.2) <= 1e-12, "p@10 of short run");

  const std::vector<std::string> fourth = {"n", "n", "n", "r"};
  c.require(reciprocal_rank(fourth, judged({"r"})) == 0.25, "RR at rank 4");
  c.require(reciprocal_rank(std::vector<std::string>{"r"}, judged({"r"})) == 1.0, "RR at rank 1");
  c.require(reciprocal_rank(fourth, judged({"x"})) == 0.0, "RR with no relevant");

  const std::vector<double> base(10, 0.5);
  const std::vector<double> mixed = {0.6, 0.6, 0.6, 0.6, 0.6, 0.6, 0.4, 0.4, 0.5, 0.5};
  c.require(std::abs(robustness_index(mixed, base) - 0.4) <= 1e-12, "RI 6/2/2");
  c.require(robustness_index(base, base) == 0.0, "RI identical");
  c.require(robustness_index(std::vector<double>(10, 0.7), base) == 1.0, "RI all better");

  std::mt19937_64 rng(6006);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + rng() % 60;
    std::vector<double> diffs(n), zero(n, 0.0);
    std::normal_distribution<double> noise(std::uniform_real_distribution<double>(-0.2, 0.2)(rng), 0.3);
    for (auto& d : diffs) d = noise(rng);
    const auto r = paired_ttest(diffs, zero);
    worst = std::max(worst, std::abs(r.p_value - oracle::t_two_tailed_p(r.t, static_cast<double>(r.df))));
  }
  c.require(worst <= 1e-6, fmt::format("t-test p-value off by {:.3g}", worst));
  if (c.out.pass) c.out.detail = fmt::format("fixtures exact, max t-test deviation {:.2g} over 20 vectors", worst);
  return c.out;
}

// 7. The experiment command is byte-for-byte reproducible.
Outcome pipeline_determinism() {
  Check c;
  const auto dir = fs::temp_directory_path() / "twqp_acceptance_determinism";
  fs::remove_all(dir);
  const auto data = dir / "data";
  const std::string cli = TWQP_CLI;
  auto run = [&](const std::string& args) {
    const std::string command = cli + " " + args + " >/dev/null 2>&1";
    return std::system(command.c_str());
  };
  c.require(run(fmt::format("make-synthetic --seed 32 --docs 200 --queries 20 --out {}", data.string())) == 0,
            "make-synthetic failed");
  double slowest = 0.0;
  for (const char* out : {"run1", "run2"}) {
    const auto start = Clock::now();
    c.require(run(fmt::format("experiment --corpus {0}/corpus.jsonl --topics {0}/topics.tsv --qrels {0}/qrels.txt "
                              "--out {1}",
                              data.string(), (dir / out).string())) == 0,
              "experiment failed");
    slowest = std::max(slowest, seconds_since(start));
  }
  if (c.out.pass) {
    const auto first = tree(dir / "run1");
    const auto second = tree(dir / "run2");
    c.require(first.size() >= 8 + 6 + 3, fmt::format("only {} output files", first.size()));
    c.require(first == second, "outputs differ between runs");
    c.require(slowest < 60.0, fmt::format("experiment took {:.1f}s", slowest));
    if (c.out.pass) c.out.detail = fmt::format("{} files identical, slowest run {:.2f}s", first.size(), slowest);
  }
  fs::remove_all(dir);
  return c.out;
}

// 8. One base retrieval plus one per candidate term.
Outcome retrieval_budget() {
  Check c;
  const auto collection = make_synthetic(SyntheticSpec{});
  const auto index = build_index(collection.docs);
  const Searcher searcher(index);
  const Searcher counting(index);
  std::size_t queries = 0;
  for (const auto& topic : collection.topics) {
    const auto q = make_query(topic.id, topic.title, index);
    const auto initial = retrieve_topk(q, 1000, 1000, index);
    const auto rm = build_rm3(q, initial, Rm3Params{.m = std::min<std::size_t>(10, initial.size())}, index);
    std::vector<std::string> candidates;
    for (const auto& tp : top_n_terms(rm, 100)) candidates.push_back(tp.term);
    for (auto method : {WeightingMethod::TWQP_WIG, WeightingMethod::TWQP_NQC, WeightingMethod::TWQP_ScoreRatio}) {
      Searcher fresh(index);
      weigh_terms(q, candidates, method, {}, fresh);
      c.require(fresh.retrieval_count() == 1 + candidates.size(),
                fmt::format("{} {}: {} retrievals for |V| = {}", q.id, to_string(method), fresh.retrieval_count(),
                            candidates.size()));
    }
    ++queries;
  }
  if (c.out.pass) c.out.detail = fmt::format("{} queries x 3 TWQP methods, all exactly 1 + |V|", queries);
  return c.out;
}

// 9. NQC predicts a larger gain for planted on-topic terms than for terms
// planted for other topics.
Outcome directional_sanity() {
  Check c;
  SyntheticSpec spec;
  spec.queries = 30;
  const auto collection = make_synthetic(spec);
  const auto index = build_index(collection.docs);
  const Searcher searcher(index);
  const auto predictor = PredictorSpec::of(PredictorKind::NQC);

  std::size_t wins = 0, losses = 0, ties = 0;
  for (std::size_t t = 0; t < collection.topics.size(); ++t) {
    const auto q = make_query(collection.topics[t].id, collection.topics[t].title, index);
    const auto base = searcher.retrieve(q, 1000, 1000);
    const double base_quality = predict(predictor, base, q, 1000, index);
    auto mean_delta = [&](const std::vector<std::string>& words) {
      double sum = 0.0;
      std::size_t n = 0;
      for (const auto& w : words) {
        if (!index.term_id(w)) continue;
        sum += delta_p(w, q, base_quality, predictor, 1000, 1000, searcher);
        ++n;
      }
      return n == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(n);
    };
    const double on = mean_delta(collection.on_topic[t]);
    const double off = mean_delta(collection.off_topic[t]);
    if (std::isnan(on) || std::isnan(off) || on == off) {
      ++ties;
    } else if (on > off) {
      ++wins;
    } else {
      ++losses;
    }
  }
  const std::size_t n = wins + losses;
  // One-sided sign test: P(X >= wins) under Binomial(n, 1/2).
  double p = 1.0;
  if (n > 0) {
    const boost::math::binomial dist(static_cast<double>(n), 0.5);
    p = wins == 0 ? 1.0 : boost::math::cdf(boost::math::complement(dist, static_cast<double>(wins) - 1.0));
  }
  c.require(p < 0.05, fmt::format("sign test p = {:.3g} ({} on-topic wins, {} losses, {} ties)", p, wins, losses, ties));
  if (c.out.pass) c.out.detail = fmt::format("{} wins, {} losses, {} ties of 30; one-sided p = {:.3g}", wins, losses, ties, p);
  return c.out;
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::err);
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"retrieval matches exhaustive scoring", retrieval_oracle},
      {"indicator weights reduce to query likelihood", indicator_reduction},
      {"RM3 normalization and lambda linearity", rm3_properties},
      {"sigmoid fixed points and monotonicity", sigmoid_properties},
      {"predictor analytic zeros", predictor_zeros},
      {"evaluation fixtures and t-test", evaluation_fixtures},
      {"experiment output is deterministic", pipeline_determinism},
      {"TWQP retrieval budget is 1 + |V|", retrieval_budget},
      {"NQC favors planted on-topic terms", directional_sanity},
  };
  int failures = 0;
  int number = 0;
  for (const auto& [name, run] : criteria) {
    ++number;
    Outcome outcome;
    try {
      outcome = run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    failures += outcome.pass ? 0 : 1;
    std::cout << fmt::format("[{}] criterion {}: {} ({})", outcome.pass ? "PASS" : "FAIL", number, name, outcome.detail)
              << std::endl;
  }
  std::cout << fmt::format("{} of {} criteria passed", number - failures, number) << std::endl;
  return failures == 0 ? 0 : 1;
}
