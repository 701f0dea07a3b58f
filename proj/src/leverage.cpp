#include "atsp/leverage.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "atsp/error.hpp"
#include "atsp/matcore.hpp"
#include "atsp/parallel.hpp"
#include "atsp/rng.hpp"

namespace atsp {

namespace {

std::vector<double> row_squared_norms(const DenseMatrix& m) {
  std::vector<double> out(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double s = 0.0;
    for (double x : m.row(i)) s += x * x;
    out[i] = s;
  }
  return out;
}

}  // namespace

LeverageScores exact_leverage(const AnyMatrix& a_rows) {
  const std::size_t d = rows_of(a_rows);
  const std::size_t n = cols_of(a_rows);
  require(d >= 1 && n >= 1, "exact_leverage: empty matrix");

  const SymEig eig = sym_eig(gram(transpose(a_rows)));
  const double top = eig.eigenvalues.back();
  std::vector<std::size_t> kept;
  for (std::size_t k = 0; k < n; ++k)
    if (top > 0.0 && eig.eigenvalues[k] > kRankTolerance * top) kept.push_back(k);

  LeverageScores out;
  out.dim = n;
  out.exact = true;
  out.scores.assign(d, 0.0);
  if (kept.empty()) return out;

  // W = V_r Lambda_r^{-1/2}; score_j = ||a_j^T W||^2.
  DenseMatrix w(n, kept.size());
  for (std::size_t c = 0; c < kept.size(); ++c) {
    const double inv = 1.0 / std::sqrt(eig.eigenvalues[kept[c]]);
    for (std::size_t i = 0; i < n; ++i) w(i, c) = eig.eigenvectors(i, kept[c]) * inv;
  }
  out.scores = row_squared_norms(matmul(a_rows, w));
  return out;
}

std::size_t sketch_rows_s1(std::size_t n, std::size_t d, double eps_sigma, double delta_sigma,
                           const LeverageConfig& config) {
  const double s1 = std::ceil(config.c_s1 / (eps_sigma * eps_sigma) * static_cast<double>(n) *
                              std::log(static_cast<double>(d) / delta_sigma));
  return std::max<std::size_t>(n, static_cast<std::size_t>(s1));
}

std::size_t sketch_cols_s2(std::size_t d, double delta_sigma, const LeverageConfig& config) {
  const double s2 = std::ceil(config.c_s2 * std::log(static_cast<double>(d) / delta_sigma));
  return std::max<std::size_t>(1, static_cast<std::size_t>(s2));
}

LeverageScores approx_leverage(const AnyMatrix& a_rows, double eps_sigma, double delta_sigma, std::uint64_t seed,
                               const LeverageConfig& config) {
  const std::size_t d = rows_of(a_rows);
  const std::size_t n = cols_of(a_rows);
  require(d >= 1 && n >= 1, "approx_leverage: empty matrix");
  require(eps_sigma > 0.0 && eps_sigma < 1.0, "approx_leverage: eps_sigma must lie in (0, 1)");
  require(delta_sigma > 0.0 && delta_sigma < 1.0, "approx_leverage: delta_sigma must lie in (0, 1)");

  const std::size_t s1 = sketch_rows_s1(n, d, eps_sigma, delta_sigma, config);
  const std::size_t s2 = sketch_cols_s2(d, delta_sigma, config);

  for (int attempt = 0; attempt <= config.max_retries; ++attempt) {
    const std::uint64_t sub = derive_seed(seed, static_cast<std::uint64_t>(attempt));

    SketchSpec s1_spec;
    s1_spec.kind = SketchKind::sparse_embedding;
    s1_spec.out_dim = s1;
    s1_spec.in_dim = d;
    s1_spec.nnz_per_column = std::min(config.s1_nnz_per_column, s1);
    s1_spec.seed = derive_seed(sub, "S1");
    const DenseMatrix m = apply_left(make_sketch(s1_spec), a_rows);

    const QrResult qr = qr_decompose(m);
    if (qr.rank_deficient) continue;
    const DenseMatrix r_inv = upper_triangular_inverse(qr.r);

    // The JL map acts as an s2 x n matrix G; N = R^-1 G^T, formed here as
    // N^T = G R^-T so the sketch is applied from the left.
    SketchSpec s2_spec;
    s2_spec.kind = config.jl_kind;
    s2_spec.out_dim = s2;
    s2_spec.in_dim = n;
    s2_spec.scale = 1.0 / std::sqrt(static_cast<double>(s2));
    s2_spec.seed = derive_seed(sub, "S2");
    const DenseMatrix n_t = apply_left(make_sketch(s2_spec), r_inv.transpose());

    LeverageScores out;
    out.dim = n;
    out.eps_sigma = eps_sigma;
    out.delta_sigma = delta_sigma;
    out.exact = false;
    out.scores = row_squared_norms(matmul(a_rows, n_t.transpose()));
    for (double& s : out.scores) s = std::min(s, 1.0 + eps_sigma);
    return out;
  }
  throw ContractViolation("approx_leverage: sketched matrix stayed rank deficient after " +
                          std::to_string(config.max_retries) + " retries (input must have full column rank)");
}

SamplingProbabilities build_probabilities(const LeverageScores& scores) {
  require(!scores.scores.empty(), "build_probabilities: no scores");
  double total = 0.0;
  for (double s : scores.scores) {
    require(s >= 0.0 && std::isfinite(s), "build_probabilities: scores must be finite and nonnegative");
    total += s;
  }
  require(total > 0.0, "build_probabilities: all scores are zero");
  SamplingProbabilities out;
  out.p.resize(scores.scores.size());
  for (std::size_t j = 0; j < out.p.size(); ++j) out.p[j] = scores.scores[j] / total;
  out.beta = static_cast<double>(scores.dim) * (1.0 - scores.eps_sigma) / total;
  return out;
}

namespace {

void fill_reweights(SamplingPlan& plan) {
  const double t = static_cast<double>(plan.trials);
  plan.reweights.resize(plan.indices.size());
  for (std::size_t k = 0; k < plan.indices.size(); ++k) {
    const double pj = plan.p[plan.indices[k]];
    require(pj > 0.0, "sampling plan: drawn index " + std::to_string(plan.indices[k]) + " has zero probability");
    plan.reweights[k] = 1.0 / std::sqrt(t * pj);
  }
}

}  // namespace

SamplingPlan draw_plan(const SamplingProbabilities& probs, std::size_t trials, std::uint64_t seed) {
  require(trials >= 1, "draw_plan: need at least one trial");
  std::vector<double> cdf(probs.p.size());
  double acc = 0.0;
  std::size_t last_positive = probs.p.size();
  for (std::size_t j = 0; j < probs.p.size(); ++j) {
    acc += probs.p[j];
    cdf[j] = acc;
    if (probs.p[j] > 0.0) last_positive = j;
  }
  require(last_positive < probs.p.size(), "draw_plan: distribution has no mass");

  SamplingPlan plan;
  plan.p = probs.p;
  plan.beta = probs.beta;
  plan.trials = trials;
  plan.seed = seed;
  plan.indices.resize(trials);
  SplitMix64 rng(seed);
  for (std::size_t t = 0; t < trials; ++t) {
    const double target = rng.uniform() * acc;
    // First index whose cumulative mass exceeds target; zero-mass indices
    // share their predecessor's cdf value and are never returned.
    auto it = std::upper_bound(cdf.begin(), cdf.end(), target);
    std::size_t j = static_cast<std::size_t>(it - cdf.begin());
    if (j > last_positive) j = last_positive;
    plan.indices[t] = j;
  }
  fill_reweights(plan);
  return plan;
}

SamplingPlan plan_from_draws(const SamplingProbabilities& probs, std::vector<std::size_t> draws) {
  require(!draws.empty(), "plan_from_draws: need at least one draw");
  SamplingPlan plan;
  plan.p = probs.p;
  plan.beta = probs.beta;
  plan.trials = draws.size();
  plan.indices = std::move(draws);
  for (std::size_t j : plan.indices) require(j < plan.p.size(), "plan_from_draws: index out of range");
  fill_reweights(plan);
  return plan;
}

SampledGram sample_gram(const AnyMatrix& a_rows, const SamplingPlan& plan) {
  const std::size_t d = rows_of(a_rows);
  const std::size_t n = cols_of(a_rows);
  require(plan.p.size() == d, "sample_gram: plan covers " + std::to_string(plan.p.size()) + " rows, matrix has " +
                                  std::to_string(d));
  const std::size_t t_count = plan.indices.size();
  DenseMatrix stacked(n, t_count);
  if (const auto* s = std::get_if<SparseMatrix>(&a_rows)) {
    for (std::size_t t = 0; t < t_count; ++t) {
      const auto idx = s->row_indices(plan.indices[t]);
      const auto val = s->row_values(plan.indices[t]);
      for (std::size_t q = 0; q < idx.size(); ++q) stacked(idx[q], t) = plan.reweights[t] * val[q];
    }
  } else {
    const auto& dm = std::get<DenseMatrix>(a_rows);
    for (std::size_t t = 0; t < t_count; ++t) {
      const auto row = dm.row(plan.indices[t]);
      for (std::size_t i = 0; i < n; ++i) stacked(i, t) = plan.reweights[t] * row[i];
    }
  }
  SampledGram out;
  out.h_tilde = gram(stacked);
  out.indices = plan.indices;
  out.weights = plan.reweights;
  return out;
}

std::size_t chernoff_trials(double eps0, double delta0, std::size_t n, double c_chernoff) {
  require(eps0 > 0.0 && eps0 < 1.0, "chernoff_trials: eps0 must lie in (0, 1)");
  require(delta0 > 0.0 && delta0 < 0.1, "chernoff_trials: delta0 must lie in (0, 0.1)");
  require(n >= 1, "chernoff_trials: n must be positive");
  require(c_chernoff > 0.0 && std::isfinite(c_chernoff), "chernoff_trials: constant must be positive");
  const double t = std::ceil(c_chernoff / (eps0 * eps0) * static_cast<double>(n) *
                             std::log(static_cast<double>(n) / delta0));
  return static_cast<std::size_t>(t);
}

}  // namespace atsp
