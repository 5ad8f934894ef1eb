#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "twqp/qpp.hpp"
#include "twqp/synthetic.hpp"

using namespace twqp;

namespace {

AnalyzerConfig plain() {
  AnalyzerConfig c;
  c.stemmer = Stemmer::none;
  c.stopwords.clear();
  return c;
}

RankedList scores_list(std::initializer_list<double> scores) {
  RankedList list{"q", {}, scores.size()};
  std::uint32_t doc = 0;
  for (double s : scores) list.entries.push_back({DocNo{doc++}, s});
  return list;
}

RankedList docs_list(std::initializer_list<std::uint32_t> docs) {
  RankedList list{"q", {}, docs.size()};
  for (auto d : docs) list.entries.push_back({DocNo{d}, 0.0});
  return list;
}

}  // namespace

TEST(Wig, ZeroWhenDocumentModelsEqualCollectionModel) {
  // Every doc has the collection's term mix, so p_d(w) = p_D(w) exactly.
  const std::vector<Document> docs = {{"d1", "x y"}, {"d2", "y x"}, {"d3", "x y x y"}};
  const auto index = build_index(docs, plain());
  const Query q{"q", {"x", "y"}};
  const auto list = retrieve_topk(q, 10, 1000, index);
  EXPECT_EQ(predict_wig(list, q, 5, 1000, index), 0.0);
}

TEST(Wig, OneWhenDocumentModelIsEulerTimesCollection) {
  // d1 = "x", 100 tokens in total, so cp(x) = 1/100. Choose mu so that
  // (1 + mu cp) / (1 + mu) = e cp.
  std::string filler;
  for (int i = 0; i < 99; ++i) filler += "z ";
  const std::vector<Document> docs = {{"d1", "x"}, {"d2", filler}};
  const auto index = build_index(docs, plain());
  const double e = std::numbers::e;
  const double mu = (100.0 - e) / (e - 1.0);
  const Query q{"q", {"x"}};
  const auto list = retrieve_topk(q, 10, mu, index);
  ASSERT_EQ(list.size(), 1U);
  EXPECT_NEAR(predict_wig(list, q, 5, mu, index), 1.0, 1e-12);
}

TEST(Wig, MatchesDirectDoubleSum) {
  std::mt19937_64 rng(13);
  const auto docs = oracle::random_corpus(rng, 40, 25);
  const auto index = build_index(docs, plain());
  const auto r = oracle::recount(docs, plain());
  const std::vector<std::string> terms = {"w2", "w7", "w2"};
  const Query q{"q", terms};
  const auto list = retrieve_topk(q, 100, 300, index);
  for (std::size_t m : {1, 5, 12}) {
    double sum = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      for (const auto& w : terms) sum += std::log(r.p(index.doc_name(list.entries[i].doc), w, 300) / r.cp(w));
    }
    EXPECT_NEAR(predict_wig(list, q, m, 300, index), sum / (m * std::sqrt(3.0)), 1e-12);
  }
}

TEST(Wig, SkipsOutOfVocabularyTerms) {
  const std::vector<Document> docs = {{"d1", "x y"}, {"d2", "y"}};
  const auto index = build_index(docs, plain());
  const auto list = retrieve_topk({"q", {"x"}}, 10, 10, index);
  std::size_t skipped = 0;
  const double with_oov = predict_wig(list, {"q", {"x", "nowhere"}}, 5, 10, index, &skipped);
  EXPECT_EQ(skipped, 1U);
  // The skipped term still counts in the |q| normalizer.
  EXPECT_NEAR(with_oov, predict_wig(list, {"q", {"x"}}, 5, 10, index) / std::sqrt(2.0), 1e-15);
}

TEST(Wig, InvariantToShiftingListScores) {
  std::mt19937_64 rng(21);
  const auto docs = oracle::random_corpus(rng, 50, 20);
  const auto index = build_index(docs, plain());
  const Query q{"q", {"w1", "w4"}};
  const auto list = retrieve_topk(q, 50, 100, index);
  auto shifted = list;
  for (auto& e : shifted.entries) e.score += 17.5;
  EXPECT_EQ(predict_wig(list, q, 5, 100, index), predict_wig(shifted, q, 5, 100, index));
}

TEST(Nqc, ZeroOnConstantScoresAndSingleEntry) {
  const std::vector<Document> docs = {{"d1", "x"}, {"d2", "x y"}};
  const auto index = build_index(docs, plain());
  const Query q{"q", {"x"}};
  EXPECT_EQ(predict_nqc(scores_list({-4, -4, -4, -4}), q, 150, index), 0.0);
  EXPECT_EQ(predict_nqc(scores_list({-1, -7, -9}), q, 1, index), 0.0);
}

TEST(Nqc, PopulationSpreadOverCollectionLikelihood) {
  const auto list = scores_list({-1, -2, -3});
  // sqrt(2/3) / 10
  EXPECT_NEAR(score_spread(list, 150) / 10.0, 0.0816496580927726, 1e-15);

  const std::vector<Document> docs = {{"d1", "x y y"}, {"d2", "y z"}};
  const auto index = build_index(docs, plain());
  const Query q{"q", {"x", "y"}};
  const double cll = std::log(1.0 / 5.0) + std::log(3.0 / 5.0);
  EXPECT_NEAR(collection_log_likelihood(q, index), cll, 1e-15);
  EXPECT_NEAR(predict_nqc(list, q, 150, index), std::sqrt(2.0 / 3.0) / std::abs(cll), 1e-15);
  EXPECT_THROW(predict_nqc(list, {"q", {"x", "absent"}}, 150, index), Error);
}

TEST(Nqc, ScalesWithDeviations) {
  const std::vector<Document> docs = {{"d1", "x y"}, {"d2", "y"}};
  const auto index = build_index(docs, plain());
  const Query q{"q", {"x"}};
  std::mt19937_64 rng(5);
  std::normal_distribution<double> noise(0, 2);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> devs(30);
    double mean = 0.0;
    for (auto& d : devs) mean += (d = noise(rng));
    mean /= devs.size();
    for (auto& d : devs) d -= mean;
    const double c = std::uniform_real_distribution<double>(-3, 3)(rng);
    RankedList base{"q", {}, 30}, scaled{"q", {}, 30};
    for (std::uint32_t i = 0; i < devs.size(); ++i) {
      base.entries.push_back({DocNo{i}, -20 + devs[i]});
      scaled.entries.push_back({DocNo{i}, -20 + c * devs[i]});
    }
    EXPECT_NEAR(predict_nqc(scaled, q, 150, index), std::abs(c) * predict_nqc(base, q, 150, index), 1e-12);
  }
}

TEST(ScoreRatio, Examples) {
  EXPECT_EQ(predict_score_ratio(scores_list({-3.5})), 1.0);
  EXPECT_NEAR(predict_score_ratio(scores_list({-2, -4, -5})), std::exp(3.0), 1e-12);
  EXPECT_NEAR(predict_score_ratio(scores_list({-2, -5})), 20.0855369231877, 1e-12);
  EXPECT_EQ(predict_score_ratio(scores_list({-6, -6, -6})), 1.0);
  EXPECT_THROW(predict_score_ratio(RankedList{}), Error);
}

TEST(NwigTerm, ZeroAndOneCases) {
  const std::vector<Document> same = {{"d1", "x y"}, {"d2", "y x"}};
  const auto same_index = build_index(same, plain());
  const auto list = retrieve_topk({"q", {"x"}}, 10, 1000, same_index);
  EXPECT_EQ(nwig_term("x", list, 50, 1000, same_index), 0.0);

  // With mu = 0 a doc made only of w has p_d(w) = 1.
  const std::vector<Document> pure = {{"d1", "w w"}, {"d2", "w"}, {"d3", "v v v"}};
  const auto pure_index = build_index(pure, plain());
  const auto pure_list = retrieve_topk({"q", {"w"}}, 10, 0.0, pure_index);
  ASSERT_EQ(pure_list.size(), 2U);
  EXPECT_NEAR(nwig_term("w", pure_list, 50, 0.0, pure_index), 1.0, 1e-15);
  EXPECT_EQ(nwig_term("zzz", pure_list, 50, 0.0, pure_index), 0.0);
}

TEST(NwigTerm, MatchesDirectEvaluation) {
  std::mt19937_64 rng(31);
  const auto docs = oracle::random_corpus(rng, 60, 30);
  const auto index = build_index(docs, plain());
  const auto r = oracle::recount(docs, plain());
  const auto list = retrieve_topk({"q", {"w3", "w8"}}, 100, 1000, index);
  for (const std::string w : {"w0", "w3", "w15"}) {
    const std::size_t m = std::min<std::size_t>(50, list.size());
    double mean = 0.0;
    for (std::size_t i = 0; i < m; ++i) mean += std::log(r.p(index.doc_name(list.entries[i].doc), w, 1000));
    mean /= m;
    const double expected = (mean - std::log(r.cp(w))) / -std::log(r.cp(w));
    EXPECT_NEAR(nwig_term(w, list, 50, 1000, index), expected, 1e-12) << w;
  }
}

TEST(Sror, OverlapArithmetic) {
  EXPECT_EQ(result_overlap_loss(docs_list({1, 2, 3}), docs_list({3, 1, 2})), 0.0);
  EXPECT_EQ(result_overlap_loss(docs_list({1, 2, 3}), docs_list({4, 5, 6})), 1.0);
  EXPECT_EQ(result_overlap_loss(docs_list({0, 1, 2, 3, 4, 5, 6, 7, 8, 9}),
                                docs_list({0, 2, 4, 6, 8, 11, 13, 15, 17, 19})),
            0.5);
}

TEST(Sror, TermLevelBehaviour) {
  const std::vector<Document> docs = {{"d1", "x y"}, {"d2", "x"}, {"d3", "y z"}, {"d4", "z"}};
  const auto index = build_index(docs, plain());
  Searcher searcher(index);
  EXPECT_EQ(sror_term("x", {"q", {"x"}}, 10, 10, searcher), 1.0);
  EXPECT_THROW(sror_term("z", {"q", {"x", "y"}}, 10, 10, searcher), Error);
  // Dropping one of two copies of x leaves the same candidate set.
  EXPECT_EQ(sror_term("x", {"q", {"x", "x"}}, 10, 10, searcher), 0.0);
  // q = {x, z}: D_q = {d1,d2,d3,d4}; without z only d1,d2 remain.
  EXPECT_EQ(sror_term("z", {"q", {"x", "z"}}, 10, 10, searcher), 0.5);
}

TEST(Predict, EmptyListFallbackAndDeterminism) {
  const auto collection = make_synthetic(SyntheticSpec{});
  const auto index = build_index(collection.docs);
  const auto q = make_query("q", collection.topics[0].title, index);
  const RankedList empty{"q", {}, 1000};
  EXPECT_EQ(predict(PredictorSpec::of(PredictorKind::WIG), empty, q, 1000, index), 0.0);
  EXPECT_EQ(predict(PredictorSpec::of(PredictorKind::NQC), empty, q, 1000, index), 0.0);
  EXPECT_EQ(predict(PredictorSpec::of(PredictorKind::ScoreRatio), empty, q, 1000, index), 1.0);

  const auto list = retrieve_topk(q, 1000, 1000, index);
  for (auto kind : {PredictorKind::WIG, PredictorKind::NQC, PredictorKind::ScoreRatio}) {
    const double a = predict(PredictorSpec::of(kind), list, q, 1000, index);
    const double b = predict(PredictorSpec::of(kind), retrieve_topk(q, 1000, 1000, index), q, 1000, index);
    EXPECT_EQ(std::bit_cast<std::uint64_t>(a), std::bit_cast<std::uint64_t>(b));
  }
  EXPECT_GE(predict(PredictorSpec::of(PredictorKind::NQC), list, q, 1000, index), 0.0);
  EXPECT_GE(predict(PredictorSpec::of(PredictorKind::ScoreRatio), list, q, 1000, index), 1.0);
}

TEST(Predictor, NamesAndDefaults) {
  EXPECT_EQ(parse_predictor("NQC"), PredictorKind::NQC);
  EXPECT_THROW(parse_predictor("Clarity"), Error);
  EXPECT_EQ(PredictorSpec::of(PredictorKind::WIG).m, 5U);
  EXPECT_EQ(PredictorSpec::of(PredictorKind::NQC).m, 150U);
}
