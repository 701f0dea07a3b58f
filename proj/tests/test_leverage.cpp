#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <numeric>

#include "atsp/error.hpp"
#include "atsp/leverage.hpp"
#include "atsp/matcore.hpp"
#include "oracles.hpp"

using namespace atsp;

namespace {

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

DenseMatrix ata(const DenseMatrix& a) { return oracle::naive_matmul(oracle::naive_transpose(a), a); }

// Every length-T sequence over {0..d-1} with its probability under p.
void enumerate(std::size_t d, std::size_t t, const std::vector<double>& p,
               const std::function<void(const std::vector<std::size_t>&, double)>& visit) {
  std::vector<std::size_t> seq(t, 0);
  for (;;) {
    double prob = 1.0;
    for (std::size_t j : seq) prob *= p[j];
    visit(seq, prob);
    std::size_t k = 0;
    while (k < t && ++seq[k] == d) seq[k++] = 0;
    if (k == t) return;
  }
}

}  // namespace

TEST(ExactLeverage, IdentityScoresAreOne) {
  const LeverageScores s = exact_leverage(AnyMatrix{DenseMatrix::identity(5)});
  EXPECT_TRUE(s.exact);
  for (double v : s.scores) EXPECT_NEAR(v, 1.0, 1e-12);
}

TEST(ExactLeverage, TwoIdenticalRows) {
  const LeverageScores s = exact_leverage(AnyMatrix{DenseMatrix::from_rows({{1}, {1}})});
  ASSERT_EQ(s.scores.size(), 2u);
  EXPECT_NEAR(s.scores[0], 0.5, 1e-15);
  EXPECT_NEAR(s.scores[1], 0.5, 1e-15);
}

TEST(ExactLeverage, MatchesOrthonormalBasisOracle) {
  const DenseMatrix a = oracle::random_dense(64, 8, 1);
  const auto expect = oracle::leverage_rows(a);
  const LeverageScores s = exact_leverage(AnyMatrix{a});
  for (std::size_t j = 0; j < 64; ++j) EXPECT_NEAR(s.scores[j], expect[j], 1e-10);
  const LeverageScores sp = exact_leverage(AnyMatrix{SparseMatrix::from_dense(a)});
  for (std::size_t j = 0; j < 64; ++j) EXPECT_NEAR(sp.scores[j], expect[j], 1e-10);
}

TEST(ExactLeverage, RangeAndSumEqualRank) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const std::size_t n = 2 + seed % 7;
    DenseMatrix a = oracle::random_dense(40, n, 50 + seed);
    std::size_t rank = n;
    if (seed % 3 == 0 && n >= 3) {  // force a dependent column
      for (std::size_t i = 0; i < 40; ++i) a(i, n - 1) = a(i, 0) + a(i, 1);
      rank = n - 1;
    }
    const LeverageScores s = exact_leverage(AnyMatrix{a});
    for (double v : s.scores) {
      EXPECT_GE(v, -1e-12);
      EXPECT_LE(v, 1.0 + 1e-12);
    }
    EXPECT_NEAR(sum(s.scores), double(rank), 1e-8) << seed;
  }
}

TEST(ApproxLeverage, IdentityWithinFactor) {
  const LeverageScores s = approx_leverage(AnyMatrix{DenseMatrix::identity(8)}, 0.5, 0.1, 3);
  EXPECT_FALSE(s.exact);
  for (double v : s.scores) {
    EXPECT_GE(v, 0.5);
    EXPECT_LE(v, 1.5);
  }
}

TEST(ApproxLeverage, ZeroRowsGetZeroScore) {
  DenseMatrix a(40, 6);
  for (std::size_t i = 0; i < 6; ++i) a(i, i) = 1.0;
  const LeverageScores s = approx_leverage(AnyMatrix{SparseMatrix::from_dense(a)}, 0.5, 0.1, 4);
  for (std::size_t j = 6; j < 40; ++j) EXPECT_LE(s.scores[j], 1e-12);
}

TEST(ApproxLeverage, MultiplicativeAccuracyOverSeeds) {
  int good = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const DenseMatrix a = oracle::random_dense(1024, 16, 1000 + seed);
    const auto exact = oracle::leverage_rows(a);
    const LeverageScores s = approx_leverage(AnyMatrix{a}, 0.5, 0.1, seed);
    double worst = 0.0;
    for (std::size_t j = 0; j < 1024; ++j) worst = std::max(worst, std::abs(s.scores[j] / exact[j] - 1.0));
    good += worst <= 0.5 ? 1 : 0;
    for (double v : s.scores) EXPECT_LE(v, 1.5);
  }
  EXPECT_GE(good, 90);
}

TEST(ApproxLeverage, DeterministicInSeedAndStorage) {
  const DenseMatrix a = oracle::random_dense(300, 5, 7);
  const auto s1 = approx_leverage(AnyMatrix{a}, 0.5, 0.1, 11).scores;
  EXPECT_EQ(s1, approx_leverage(AnyMatrix{a}, 0.5, 0.1, 11).scores);
  EXPECT_NE(s1, approx_leverage(AnyMatrix{a}, 0.5, 0.1, 12).scores);
}

TEST(ApproxLeverage, AmsJlAlsoAccurate) {
  LeverageConfig cfg;
  cfg.jl_kind = SketchKind::ams;
  const DenseMatrix a = oracle::random_dense(512, 8, 8);
  const auto exact = oracle::leverage_rows(a);
  const LeverageScores s = approx_leverage(AnyMatrix{a}, 0.5, 0.1, 1, cfg);
  for (std::size_t j = 0; j < 512; ++j) EXPECT_NEAR(s.scores[j] / exact[j], 1.0, 0.75);
}

TEST(ApproxLeverage, RankDeficientInputFails) {
  DenseMatrix a = oracle::random_dense(100, 4, 9);
  for (std::size_t i = 0; i < 100; ++i) a(i, 3) = a(i, 0);
  EXPECT_THROW(approx_leverage(AnyMatrix{a}, 0.5, 0.1, 1), ContractViolation);
  EXPECT_THROW(approx_leverage(AnyMatrix{oracle::random_dense(100, 4, 9)}, 1.0, 0.1, 1), ContractViolation);
}

TEST(SketchSizes, FollowFormulas) {
  LeverageConfig cfg;
  EXPECT_EQ(sketch_cols_s2(1024, 0.1, cfg), std::size_t(std::ceil(32.0 * std::log(10240.0))));
  EXPECT_EQ(sketch_rows_s1(16, 1024, 0.5, 0.1, cfg), std::size_t(std::ceil(8.0 * 4.0 * 16.0 * std::log(10240.0))));
  cfg.c_s1 = 1e-6;
  EXPECT_GE(sketch_rows_s1(16, 1024, 0.5, 0.1, cfg), 16u);
}

TEST(Probabilities, UniformScores) {
  LeverageScores s;
  s.scores = {0.25, 0.25, 0.25, 0.25};
  s.dim = 1;
  const auto p = build_probabilities(s).p;
  for (double v : p) EXPECT_EQ(v, 0.25);
}

TEST(Probabilities, SingleNonzero) {
  LeverageScores s;
  s.scores = {1, 0, 0};
  s.dim = 1;
  EXPECT_EQ(build_probabilities(s).p, (std::vector<double>{1, 0, 0}));
}

TEST(Probabilities, AllZeroThrows) {
  LeverageScores s;
  s.scores = {0, 0};
  s.dim = 1;
  EXPECT_THROW(build_probabilities(s), ContractViolation);
}

TEST(Probabilities, ExactScoresGiveBetaNOverRank) {
  DenseMatrix a = oracle::random_dense(50, 6, 10);
  for (std::size_t i = 0; i < 50; ++i) a(i, 5) = a(i, 4) - a(i, 2);
  const LeverageScores s = exact_leverage(AnyMatrix{a});
  const SamplingProbabilities pr = build_probabilities(s);
  EXPECT_NEAR(pr.beta, 6.0 / 5.0, 1e-9);
  EXPECT_GE(pr.beta, 1.0);
  EXPECT_NEAR(sum(pr.p), 1.0, 1e-12);
  for (std::size_t j = 0; j < 50; ++j) EXPECT_GE(pr.p[j], s.scores[j] / sum(s.scores) - 1e-15);
}

TEST(Plan, ValidDistributionAndReweights) {
  const DenseMatrix a = oracle::random_dense(30, 3, 11);
  const SamplingProbabilities pr = build_probabilities(exact_leverage(AnyMatrix{a}));
  const SamplingPlan plan = draw_plan(pr, 200, 5);
  ASSERT_EQ(plan.indices.size(), 200u);
  EXPECT_NEAR(sum(plan.p), 1.0, 1e-12);
  for (std::size_t t = 0; t < 200; ++t) {
    EXPECT_GT(plan.p[plan.indices[t]], 0.0);
    EXPECT_EQ(plan.reweights[t], 1.0 / std::sqrt(200.0 * plan.p[plan.indices[t]]));
  }
  EXPECT_EQ(plan.indices, draw_plan(pr, 200, 5).indices);
}

TEST(Plan, NeverDrawsZeroProbability) {
  SamplingProbabilities pr;
  pr.p = {0.0, 0.5, 0.0, 0.5, 0.0};
  for (std::uint64_t seed = 0; seed < 50; ++seed)
    for (std::size_t j : draw_plan(pr, 100, seed).indices) EXPECT_TRUE(j == 1 || j == 3);
}

TEST(Plan, DrawFrequenciesFollowP) {
  SamplingProbabilities pr;
  pr.p = {0.1, 0.2, 0.3, 0.4};
  const SamplingPlan plan = draw_plan(pr, 100000, 6);
  std::vector<double> freq(4, 0.0);
  for (std::size_t j : plan.indices) freq[j] += 1e-5;
  for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(freq[j], pr.p[j], 0.01);
}

TEST(SampleGram, IdentityTwoDraws) {
  SamplingProbabilities pr;
  pr.p = {0.5, 0.5};
  const SampledGram g = sample_gram(AnyMatrix{DenseMatrix::identity(2)}, plan_from_draws(pr, {0, 1}));
  EXPECT_LE(oracle::max_abs_diff(g.h_tilde, DenseMatrix::identity(2)), 1e-15);
}

TEST(SampleGram, ZeroMatrix) {
  SamplingProbabilities pr;
  pr.p = {0.25, 0.25, 0.25, 0.25};
  EXPECT_EQ(sample_gram(AnyMatrix{DenseMatrix(4, 3)}, draw_plan(pr, 5, 1)).h_tilde, DenseMatrix(3, 3));
}

TEST(SampleGram, MatchesDefinitionFormula) {
  const DenseMatrix a = oracle::random_dense(20, 4, 12);
  const SamplingProbabilities pr = build_probabilities(exact_leverage(AnyMatrix{a}));
  const SamplingPlan plan = draw_plan(pr, 15, 3);
  DenseMatrix expect(4, 4);
  for (std::size_t j : plan.indices)
    for (std::size_t r = 0; r < 4; ++r)
      for (std::size_t c = 0; c < 4; ++c) expect(r, c) += a(j, r) * a(j, c) / (15.0 * plan.p[j]);
  const SampledGram g = sample_gram(AnyMatrix{a}, plan);
  EXPECT_LE(oracle::max_abs_diff(g.h_tilde, expect), 1e-12);
  EXPECT_EQ(g.indices, plan.indices);
  EXPECT_EQ(g.weights, plan.reweights);
}

TEST(SampleGram, EnumerationIdentityUniform) {
  SamplingProbabilities pr;
  pr.p = {0.5, 0.5};
  DenseMatrix mean(2, 2);
  enumerate(2, 2, pr.p, [&](const std::vector<std::size_t>& seq, double prob) {
    mean = linear_combination(1.0, mean, prob, sample_gram(AnyMatrix{DenseMatrix::identity(2)},
                                                           plan_from_draws(pr, seq)).h_tilde);
  });
  EXPECT_LE(oracle::max_abs_diff(mean, DenseMatrix::identity(2)), 1e-12);
}

TEST(SampleGram, EnumerationIsUnbiased) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const std::size_t d = 1 + seed % 4, n = 1 + seed % 2;
    const DenseMatrix a = oracle::random_dense(d, n, 300 + seed);
    std::vector<SamplingProbabilities> choices(2);
    choices[0] = build_probabilities(exact_leverage(AnyMatrix{a}));
    choices[1].p.assign(d, 0.0);
    double tot = 0.0;
    for (std::size_t j = 0; j < d; ++j) tot += (choices[1].p[j] = 1.0 + double(j));
    for (double& v : choices[1].p) v /= tot;
    for (const auto& pr : choices)
      for (std::size_t t = 1; t <= 2; ++t) {
        DenseMatrix mean(n, n);
        enumerate(d, t, pr.p, [&](const std::vector<std::size_t>& seq, double prob) {
          if (prob == 0.0) return;
          mean = linear_combination(1.0, mean, prob, sample_gram(AnyMatrix{a}, plan_from_draws(pr, seq)).h_tilde);
        });
        EXPECT_LE(oracle::max_abs_diff(mean, ata(a)), 1e-12) << seed << ' ' << t;
      }
  }
}

TEST(Chernoff, Arithmetic) {
  const double expect = std::ceil(4.0 * 4.0 * 32.0 * std::log(32.0 / 0.05));
  EXPECT_EQ(chernoff_trials(0.5, 0.05, 32, 4.0), static_cast<std::size_t>(expect));
  EXPECT_EQ(chernoff_trials(0.5, 0.05, 32, 4.0), 3309u);
}

TEST(Chernoff, RejectsOutOfRange) {
  EXPECT_THROW(chernoff_trials(1.0, 0.05, 32, 4.0), ContractViolation);
  EXPECT_THROW(chernoff_trials(0.0, 0.05, 32, 4.0), ContractViolation);
  EXPECT_THROW(chernoff_trials(0.5, 0.1, 32, 4.0), ContractViolation);
  EXPECT_THROW(chernoff_trials(0.5, 0.0, 32, 4.0), ContractViolation);
}

TEST(Chernoff, MonotoneInN) {
  for (std::size_t n = 1; n < 1000; n *= 2) EXPECT_LT(chernoff_trials(0.5, 0.05, n, 4.0), chernoff_trials(0.5, 0.05, 2 * n, 4.0));
}

TEST(Chernoff, SandwichAtDeskScale) {
  const std::size_t n = 16, d = 512;
  const std::size_t t = chernoff_trials(0.5, 0.05, n, 4.0);
  int holds = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const DenseMatrix x = oracle::random_dense(n, d, 500 + seed);
    const AnyMatrix a{x.transpose()};
    const SampledGram g = sample_gram(a, draw_plan(build_probabilities(exact_leverage(a)), t, seed));
    holds += psd_sandwich_check(gram(x), g.h_tilde, 0.5).holds ? 1 : 0;
  }
  EXPECT_GE(holds, 95);
}
