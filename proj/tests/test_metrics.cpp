// Copyright 2026 The medcurate Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "medcurate/metrics.hpp"
#include "naive_metrics.hpp"
#include "test_util.hpp"

using namespace medcurate;

namespace {

TokenSequence seq(std::vector<std::string> t) { return TokenSequence{std::move(t)}; }
std::vector<TokenSequence> refs(std::initializer_list<std::vector<std::string>> rs) {
  std::vector<TokenSequence> out;
  for (const auto& r : rs) out.push_back(seq(r));
  return out;
}

constexpr double kTol = 1e-12;

TEST(Bleu, UnigramPrecisionWithMismatch) {
  EXPECT_NEAR(bleu_k(seq({"a", "b", "c", "d"}), refs({{"a", "b", "x", "d"}}), 1), 0.75, kTol);
}

TEST(Bleu, ClippingLimitsRepeatedTokens) {
  EXPECT_NEAR(bleu_k(seq({"a", "a", "a"}), refs({{"a"}}), 1), 1.0 / 3.0, kTol);
}

TEST(Bleu, PerfectMatchScoresOneForAllOrders) {
  const auto p = seq({"a", "b", "c", "d", "e"});
  const std::vector<TokenSequence> r = {p};
  for (int k = 1; k <= 4; ++k) EXPECT_NEAR(bleu_k(p, r, k), 1.0, kTol);
}

TEST(Bleu, EmptyPredictionScoresZeroAndEmptyRefsThrow) {
  EXPECT_EQ(bleu_k(seq({}), refs({{"a"}}), 1), 0.0);
  EXPECT_THROW(bleu_k(seq({"a"}), {}, 1), std::invalid_argument);
  EXPECT_THROW(bleu_k(seq({"a"}), refs({{"a"}}), 0), std::invalid_argument);
  EXPECT_THROW(bleu_k(seq({"a"}), refs({{"a"}}), 5), std::invalid_argument);
}

TEST(Bleu, BrevityPenaltyUsesClosestReference) {
  // c = 2; refs of length 3 and 5 -> r = 3.
  const auto p = seq({"a", "b"});
  const double expected = std::exp(1.0 - 3.0 / 2.0);
  EXPECT_NEAR(bleu_k(p, refs({{"a", "b", "c"}, {"a", "b", "c", "d", "e"}}), 1), expected, kTol);
  // Tie between lengths 1 and 3 for c = 2 goes to the shorter, so no penalty.
  EXPECT_NEAR(bleu_k(p, refs({{"a", "b", "c"}, {"a"}}), 1), 1.0, kTol);
}

TEST(Bleu, ZeroPrecisionWithoutSmoothingIsZero) {
  const auto p = seq({"a", "b", "c"});
  const auto r = refs({{"a", "x", "c"}});
  EXPECT_EQ(bleu_k(p, r, 2), 0.0);
  const double smoothed = bleu_k(p, r, 2, Smoothing::kAddEpsilon);
  EXPECT_GT(smoothed, 0.0);
  // p1 = 2/3, p2 = eps/2.
  EXPECT_NEAR(smoothed, std::sqrt((2.0 / 3.0) * (kSmoothingEpsilon / 2.0)), kTol);
}

TEST(Bleu, StatsPoolAcrossExamples) {
  const auto a = bleu_stats(seq({"a", "b"}), refs({{"a", "b"}}));
  const auto b = bleu_stats(seq({"c", "d"}), refs({{"c", "x"}}));
  BleuStats pooled = a;
  pooled += b;
  EXPECT_EQ(pooled.matches[0], 3u);
  EXPECT_EQ(pooled.totals[0], 4u);
  EXPECT_NEAR(bleu_from_stats(pooled, 1), 0.75, kTol);
}

TEST(Gleu, PooledOverlapExample) {
  EXPECT_NEAR(gleu(seq({"a", "b"}), refs({{"a", "c"}})), 1.0 / 3.0, kTol);
}

TEST(Gleu, PerfectAndMaxOverReferences) {
  const auto p = seq({"x", "y", "z"});
  EXPECT_NEAR(gleu(p, refs({{"x", "y", "z"}})), 1.0, kTol);
  EXPECT_NEAR(gleu(p, refs({{"x", "y", "z"}, {"q", "r"}})), 1.0, kTol);
  EXPECT_NEAR(gleu(p, refs({{"q", "r"}, {"x", "y", "z"}})), 1.0, kTol);
}

TEST(Gleu, DegenerateInputs) {
  EXPECT_EQ(gleu(seq({}), refs({{"a"}})), 0.0);
  EXPECT_THROW(gleu(seq({"a"}), {}), std::invalid_argument);
}

TEST(Gleu, MeanAggregationAveragesReferences) {
  const auto p = seq({"x", "y", "z"});
  EXPECT_NEAR(gleu(p, refs({{"x", "y", "z"}, {"q", "r"}}), 4, RefAggregation::kMean), 0.5, kTol);
}

TEST(Rouge, UnigramExample) {
  const auto s = rouge_n(seq({"a", "b", "c"}), refs({{"a", "c", "d"}}), 1);
  EXPECT_NEAR(s.precision, 2.0 / 3.0, kTol);
  EXPECT_NEAR(s.recall, 2.0 / 3.0, kTol);
  EXPECT_NEAR(s.f1, 2.0 / 3.0, kTol);
}

TEST(Rouge, PerfectAndDegenerate) {
  const auto p = seq({"a", "b", "c"});
  const auto r = rouge_n(p, refs({{"a", "b", "c"}}), 2);
  EXPECT_EQ(r, (Prf{1.0, 1.0, 1.0}));
  EXPECT_EQ(rouge_n(seq({"a"}), refs({{"a", "b"}}), 2), (Prf{0.0, 0.0, 0.0}));
  EXPECT_THROW(rouge_n(p, {}, 1), std::invalid_argument);
}

TEST(Rouge, TripleComesFromBestF1Reference) {
  // ref1: P=1/3 R=1 ; ref2: P=2/3 R=2/3 (F1 higher).
  const auto s = rouge_n(seq({"a", "b", "c"}), refs({{"a"}, {"a", "b", "d"}}), 1);
  EXPECT_NEAR(s.precision, 2.0 / 3.0, kTol);
  EXPECT_NEAR(s.recall, 2.0 / 3.0, kTol);
}

TEST(RougeL, LcsExample) {
  const auto s = rouge_l(seq({"a", "b", "c", "d"}), refs({{"a", "c", "b", "d"}}));
  EXPECT_NEAR(s.precision, 0.75, kTol);
  EXPECT_NEAR(s.recall, 0.75, kTol);
  EXPECT_NEAR(s.f1, 0.75, kTol);
}

TEST(RougeL, PerfectAndDisjoint) {
  EXPECT_EQ(rouge_l(seq({"a", "b"}), refs({{"a", "b"}})), (Prf{1.0, 1.0, 1.0}));
  EXPECT_EQ(rouge_l(seq({"a", "b"}), refs({{"c", "d"}})), (Prf{0.0, 0.0, 0.0}));
  EXPECT_THROW(rouge_l(seq({"a"}), {}), std::invalid_argument);
}

TEST(ScoreExample, PredictionEqualToReferenceIsPerfect) {
  EvalExample ex{"q1", "问题", {"多喝水，注意休息。", "别的答案"}, "内科", std::string("多喝水，注意休息。")};
  const auto s = score_example(ex, TokenPolicy::kCjkChar);
  for (double b : s.bleu) EXPECT_NEAR(b, 1.0, kTol);
  EXPECT_NEAR(s.gleu, 1.0, kTol);
  EXPECT_NEAR(s.rouge1.f1, 1.0, kTol);
  EXPECT_NEAR(s.rouge2.f1, 1.0, kTol);
  EXPECT_NEAR(s.rougeL.f1, 1.0, kTol);
}

TEST(ScoreExample, EmptyPredictionIsZero) {
  EvalExample ex{"q1", "问题", {"多喝水"}, "内科", std::string("")};
  EXPECT_EQ(score_example(ex, TokenPolicy::kCjkChar), SentenceScores{});
}

TEST(ScoreExample, MissingPredictionNamesExample) {
  EvalExample ex{"q-missing", "问题", {"a"}, "c", std::nullopt};
  try {
    score_example(ex, TokenPolicy::kCjkChar);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("q-missing"), std::string::npos);
  }
}

void expect_matches_oracle(const std::vector<std::string>& pred,
                           const std::vector<std::vector<std::string>>& rs) {
  std::vector<TokenSequence> r;
  for (const auto& x : rs) r.push_back(seq(x));
  const auto p = seq(pred);
  const auto s = score_tokens(p, r);
  for (int k = 1; k <= 4; ++k) {
    ASSERT_NEAR(s.bleu[k - 1], oracle::bleu(pred, rs, k), kTol) << "bleu-" << k;
    ASSERT_NEAR(bleu_k(p, r, k), s.bleu[k - 1], kTol);
  }
  ASSERT_NEAR(s.gleu, oracle::gleu(pred, rs), kTol);
  const std::pair<Prf, oracle::Prf> pairs[] = {{s.rouge1, oracle::rouge_n(pred, rs, 1)},
                                                {s.rouge2, oracle::rouge_n(pred, rs, 2)},
                                                {s.rougeL, oracle::rouge_l(pred, rs)}};
  for (const auto& [got, want] : pairs) {
    ASSERT_NEAR(got.precision, want.p, kTol);
    ASSERT_NEAR(got.recall, want.r, kTol);
    ASSERT_NEAR(got.f1, want.f, kTol);
  }
  for (const auto& x : rs) ASSERT_EQ(lcs_length(pred, x), oracle::lcs(pred, x));
}

TEST(OracleEquivalence, RandomSequences) {
  std::mt19937_64 rng(20260101);
  std::uniform_int_distribution<int> alpha(2, 20);
  std::uniform_int_distribution<int> nrefs(1, 4);
  for (int trial = 0; trial < 1500; ++trial) {
    const int a = alpha(rng);
    const auto pred = testutil::random_tokens(rng, 50, a);
    std::vector<std::vector<std::string>> rs(nrefs(rng));
    for (auto& r : rs) r = testutil::random_tokens(rng, 50, a);
    expect_matches_oracle(pred, rs);
  }
}

TEST(OracleEquivalence, GleuOrdersBeyondFour) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const auto pred = testutil::random_tokens(rng, 12, 3);
    const auto ref = testutil::random_tokens(rng, 12, 3);
    for (int n = 1; n <= 6; ++n) {
      ASSERT_NEAR(gleu(seq(pred), std::vector<TokenSequence>{seq(ref)}, n), oracle::gleu(pred, {ref}, n),
                  kTol);
    }
  }
}

TEST(Properties, AddingReferenceNeverLowersMaxScores) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 500; ++trial) {
    const auto p = seq(testutil::random_tokens(rng, 20, 4));
    std::vector<TokenSequence> r = {seq(testutil::random_tokens(rng, 20, 4))};
    const auto before = score_tokens(p, r);
    r.push_back(seq(testutil::random_tokens(rng, 20, 4)));
    const auto after = score_tokens(p, r);
    EXPECT_GE(after.gleu, before.gleu);
    EXPECT_GE(after.rouge1.f1, before.rouge1.f1);
    EXPECT_GE(after.rouge2.f1, before.rouge2.f1);
    EXPECT_GE(after.rougeL.f1, before.rougeL.f1);
  }
}

TEST(Properties, SingleReferenceF1IsSymmetric) {
  std::mt19937_64 rng(1234);
  for (int trial = 0; trial < 500; ++trial) {
    const auto a = seq(testutil::random_tokens(rng, 20, 4));
    const auto b = seq(testutil::random_tokens(rng, 20, 4));
    const std::vector<TokenSequence> ra = {a};
    const std::vector<TokenSequence> rb = {b};
    EXPECT_NEAR(rouge_n(a, rb, 1).f1, rouge_n(b, ra, 1).f1, kTol);
    EXPECT_NEAR(rouge_n(a, rb, 2).f1, rouge_n(b, ra, 2).f1, kTol);
    EXPECT_NEAR(rouge_l(a, rb).f1, rouge_l(b, ra).f1, kTol);
    EXPECT_NEAR(gleu(a, rb), gleu(b, ra), kTol);
  }
}

TEST(Properties, ScoresStayInUnitInterval) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 500; ++trial) {
    const auto p = seq(testutil::random_tokens(rng, 30, 3));
    const std::vector<TokenSequence> r = {seq(testutil::random_tokens(rng, 30, 3))};
    const auto s = score_tokens(p, r, MetricSettings{4, Smoothing::kAddEpsilon, RefAggregation::kMean});
    for (double v : {s.bleu[0], s.bleu[1], s.bleu[2], s.bleu[3], s.gleu, s.rouge1.f1, s.rouge2.f1, s.rougeL.f1}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(Properties, PrefixPredictionIsPenalisedForBrevity) {
  const auto ref = seq({"a", "b", "c", "d", "e", "f", "g", "h"});
  const std::vector<TokenSequence> r = {ref};
  double prev = 0.0;
  for (std::size_t len = 1; len <= ref.size(); ++len) {
    const auto p = seq(std::vector<std::string>(ref.tokens.begin(), ref.tokens.begin() + len));
    const double b = bleu_k(p, r, 1);
    EXPECT_NEAR(b, std::exp(1.0 - double(ref.size()) / double(len)), kTol);
    EXPECT_GT(b, prev);
    prev = b;
  }
}

TEST(MetricNames, RoundTrip) {
  for (auto s : {Smoothing::kNone, Smoothing::kAddEpsilon}) EXPECT_EQ(parse_smoothing(smoothing_name(s)), s);
  for (auto a : {RefAggregation::kMax, RefAggregation::kMean})
    EXPECT_EQ(parse_aggregation(aggregation_name(a)), a);
  EXPECT_THROW(parse_smoothing("laplace"), std::exception);
}

}  // namespace
