#pragma once

// Leverage scores of the rows of a tall matrix A (d rows in R^n), the
// sketched estimator, and with-replacement sampling by leverage.
//
// The attention pipelines call these with A = X^T, so a "row" of A is a
// feature column of X and sampling selects feature columns.

#include <cstdint>
#include <vector>

#include "atsp/matrix.hpp"
#include "atsp/sketch.hpp"

namespace atsp {

struct LeverageScores {
  std::vector<double> scores;
  std::size_t dim = 0;  // n, the column count of A
  double eps_sigma = 0.0;
  double delta_sigma = 0.0;
  bool exact = false;
};

/// Exact scores a_j^T (A^T A)^+ a_j via an eigendecomposition of A^T A.
LeverageScores exact_leverage(const AnyMatrix& a_rows);

struct LeverageConfig {
  double c_s1 = 8.0;   // s1 = ceil(c_s1 * eps^-2 * n * ln(d / delta))
  double c_s2 = 32.0;  // s2 = ceil(c_s2 * ln(d / delta))
  std::size_t s1_nnz_per_column = 4;
  SketchKind jl_kind = SketchKind::gaussian;
  int max_retries = 3;
};

std::size_t sketch_rows_s1(std::size_t n, std::size_t d, double eps_sigma, double delta_sigma,
                           const LeverageConfig& config);
std::size_t sketch_cols_s2(std::size_t d, double delta_sigma, const LeverageConfig& config);

/// Sketched estimator: M = S1 A, R from QR(M), N = R^-1 S2,
/// score_j = ||a_j^T N||^2. Retries with a fresh substream when M is
/// rank deficient.
LeverageScores approx_leverage(const AnyMatrix& a_rows, double eps_sigma, double delta_sigma, std::uint64_t seed,
                               const LeverageConfig& config = {});

struct SamplingProbabilities {
  std::vector<double> p;
  // Largest beta with p_j >= beta * sigma_j / n certified from the score
  // accuracy: n * (1 - eps_sigma) / sum(scores).
  double beta = 0.0;
};

SamplingProbabilities build_probabilities(const LeverageScores& scores);

struct SamplingPlan {
  std::vector<double> p;
  double beta = 0.0;
  std::size_t trials = 0;
  std::vector<std::size_t> indices;  // j_1 .. j_T
  std::vector<double> reweights;     // 1 / sqrt(T p_{j_t})
  std::uint64_t seed = 0;
};

/// Draws T indices with replacement from p using one sequential stream.
SamplingPlan draw_plan(const SamplingProbabilities& probs, std::size_t trials, std::uint64_t seed);

/// Builds a plan from explicit draws (used for enumeration).
SamplingPlan plan_from_draws(const SamplingProbabilities& probs, std::vector<std::size_t> draws);

struct SampledGram {
  DenseMatrix h_tilde;  // (1/T) sum_t a_{j_t} a_{j_t}^T / p_{j_t}
  std::vector<std::size_t> indices;
  std::vector<double> weights;
};

/// H~ is formed as the Gram of the stacked reweighted rows, so it equals
/// Y Y^T of the corresponding reduced matrix bit for bit.
SampledGram sample_gram(const AnyMatrix& a_rows, const SamplingPlan& plan);

/// ceil(c * eps0^-2 * n * ln(n / delta0)).
std::size_t chernoff_trials(double eps0, double delta0, std::size_t n, double c_chernoff);

}  // namespace atsp
