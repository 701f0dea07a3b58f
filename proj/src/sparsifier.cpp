#include "atsp/sparsifier.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "atsp/parallel.hpp"
#include "atsp/rng.hpp"

namespace atsp {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::string describe_violation(std::size_t i, std::size_t j, double value, double bound) {
  std::ostringstream os;
  os.precision(17);
  os << "radius violation: |(X X^T)(" << i << ", " << j << ")| = " << std::abs(value) << " exceeds " << bound;
  return os.str();
}

ReducedMatrix zero_input_output(const InputMatrix& x, Method method, std::optional<std::uint64_t> seed) {
  ReducedMatrix out;
  out.data = DenseMatrix(x.n(), 1);
  out.selected_indices = {0};
  out.weights = {1.0};
  out.method = method;
  out.seed = seed;
  return out;
}

}  // namespace

RadiusViolation::RadiusViolation(std::size_t i_, std::size_t j_, double value_, double bound_)
    : ContractViolation(describe_violation(i_, j_, value_, bound_)), i(i_), j(j_), value(value_), bound(bound_) {}

const char* to_string(Method m) { return m == Method::randomized ? "rand" : "det"; }

InputMatrix make_input(AnyMatrix data, std::optional<double> radius, bool validate) {
  InputMatrix x{std::move(data), radius};
  require(x.n() >= 1, "input matrix has no rows");
  require(x.d() >= x.n(), "input matrix must have d >= n (got n = " + std::to_string(x.n()) +
                              ", d = " + std::to_string(x.d()) + ")");
  if (radius) require(*radius > 0.0 && *radius < 0.1, "radius r must lie in (0, 0.1)");
  if (const auto* dm = std::get_if<DenseMatrix>(&x.data)) require(dm->all_finite(), "input matrix has non-finite entries");
  if (const auto* sm = std::get_if<SparseMatrix>(&x.data)) {
    for (double v : sm->values()) require(std::isfinite(v), "input matrix has non-finite entries");
  }
  if (validate) validate_radius(x);
  return x;
}

void validate_radius(const InputMatrix& x) {
  const DenseMatrix g = gram(x.data);
  std::size_t bi = 0, bj = 0;
  double worst = 0.0;
  for (std::size_t i = 0; i < g.rows(); ++i) {
    for (std::size_t j = 0; j < g.cols(); ++j) {
      if (std::abs(g(i, j)) > worst) {
        worst = std::abs(g(i, j));
        bi = i;
        bj = j;
      }
    }
  }
  if (x.radius) {
    if (worst > *x.radius) throw RadiusViolation(bi, bj, g(bi, bj), *x.radius);
  } else if (worst >= 0.1) {
    throw RadiusViolation(bi, bj, g(bi, bj), 0.1);
  }
}

DenseMatrix gather_columns(const AnyMatrix& x, const std::vector<std::size_t>& indices,
                           const std::vector<double>& weights) {
  require(indices.size() == weights.size(), "gather_columns: index/weight count mismatch");
  const std::size_t n = rows_of(x);
  const std::size_t d = cols_of(x);
  for (std::size_t j : indices) require(j < d, "gather_columns: column index out of range");
  DenseMatrix y(n, indices.size());
  if (const auto* dm = std::get_if<DenseMatrix>(&x)) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t t = 0; t < indices.size(); ++t) y(i, t) = weights[t] * (*dm)(i, indices[t]);
    return y;
  }
  const auto& sm = std::get<SparseMatrix>(x);
  // Bucket output positions by source column.
  std::vector<std::size_t> head(d, indices.size());
  std::vector<std::size_t> next(indices.size(), indices.size());
  for (std::size_t t = indices.size(); t-- > 0;) {
    next[t] = head[indices[t]];
    head[indices[t]] = t;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto idx = sm.row_indices(i);
    const auto val = sm.row_values(i);
    for (std::size_t q = 0; q < idx.size(); ++q)
      for (std::size_t t = head[idx[q]]; t < indices.size(); t = next[t]) y(i, t) = weights[t] * val[q];
  }
  return y;
}

ReducedMatrix sparsify_randomized(const InputMatrix& x, double eps, double delta, std::uint64_t seed,
                                  const RandomizedConfig& config, StageTimings* timings) {
  require(eps > 0.0 && eps < 1.0, "sparsify_randomized: eps must lie in (0, 1)");
  require(delta > 0.0 && delta < 0.1, "sparsify_randomized: delta must lie in (0, 0.1)");
  if (nnz_of(x.data) == 0) return zero_input_output(x, Method::randomized, seed);

  const double delta_sigma = config.delta_sigma.value_or(delta / 2.0);
  const AnyMatrix a_rows = transpose(x.data);

  auto start = Clock::now();
  const LeverageScores scores =
      approx_leverage(a_rows, config.eps_sigma, delta_sigma, derive_seed(seed, "leverage"), config.leverage);
  if (timings) timings->leverage_ms = elapsed_ms(start);

  start = Clock::now();
  const SamplingProbabilities probs = build_probabilities(scores);
  const std::size_t m = chernoff_trials(eps, delta, x.n(), config.c_chernoff);
  const SamplingPlan plan = draw_plan(probs, m, derive_seed(seed, "sampling"));

  ReducedMatrix out;
  out.data = gather_columns(x.data, plan.indices, plan.reweights);
  out.selected_indices = plan.indices;
  out.weights = plan.reweights;
  out.method = Method::randomized;
  out.seed = seed;
  if (timings) timings->selection_ms = elapsed_ms(start);
  return out;
}

Whitened whiten(const InputMatrix& x) {
  Whitened out;
  out.basis = sym_eig(gram(x.data));
  const auto& lam = out.basis.eigenvalues;
  const double top = lam.empty() ? 0.0 : lam.back();
  for (std::size_t k = 0; k < lam.size(); ++k)
    if (top > 0.0 && lam[k] > kRankTolerance * top) out.range.push_back(k);

  const std::size_t n = x.n();
  // W^T = V_r Lambda_r^{-1/2}, n x k.
  DenseMatrix w_t(n, out.range.size());
  for (std::size_t c = 0; c < out.range.size(); ++c) {
    const double inv = 1.0 / std::sqrt(lam[out.range[c]]);
    for (std::size_t i = 0; i < n; ++i) w_t(i, c) = out.basis.eigenvectors(i, out.range[c]) * inv;
  }
  out.vectors = matmul(transpose(x.data), w_t);
  return out;
}

std::size_t bss_nonzero_bound(double eps, std::size_t n, const BssConfig& config) {
  return static_cast<std::size_t>(config.c_bss * std::ceil(1.0 / (eps * eps)) * static_cast<double>(n));
}

BssResult bss_select(const DenseMatrix& vectors, double eps, const BssConfig& config) {
  require(eps > 0.0 && eps < 1.0, "bss_select: eps must lie in (0, 1)");
  const std::size_t d = vectors.rows();
  const std::size_t k = vectors.cols();
  require(k >= 1 && d >= 1, "bss_select: empty vector family");
  {
    const DenseMatrix sum = gram(vectors.transpose());
    const double residual = inf_norm(linear_combination(1.0, sum, -1.0, DenseMatrix::identity(k)));
    require(residual <= 1e-6, "bss_select: vectors are not isotropic (||sum v v^T - I||_inf = " +
                                  std::to_string(residual) + ")");
  }

  const double dprime = std::ceil(config.steps_factor / (eps * eps));
  const double sq = std::sqrt(dprime);
  const double kd = static_cast<double>(k);
  const double delta_l = 1.0;
  const double delta_u = (sq + 1.0) / (sq - 1.0);
  const double eps_l = 1.0 / sq;
  const double eps_u = (sq - 1.0) / (dprime + sq);
  double lower = -kd / eps_l;
  double upper = kd / eps_u;
  const double phi_l0 = eps_l;
  const double phi_u0 = eps_u;
  const std::size_t max_steps = static_cast<std::size_t>(dprime) * k;

  BssResult out;
  out.weights.assign(d, 0.0);
  DenseMatrix acc(k, k);
  std::vector<double> lam(k, 0.0);
  DenseMatrix basis = DenseMatrix::identity(k);
  std::vector<double> upper_score(d), lower_score(d);

  for (std::size_t step = 0; step < max_steps; ++step) {
    const double up = upper + delta_u;
    const double lp = lower + delta_l;
    double phi_u = 0.0, phi_up = 0.0, phi_l = 0.0, phi_lp = 0.0;
    for (double x : lam) {
      phi_u += 1.0 / (upper - x);
      phi_up += 1.0 / (up - x);
      phi_l += 1.0 / (x - lower);
      phi_lp += 1.0 / (x - lp);
    }
    const double du = phi_u - phi_up;
    const double dl = phi_lp - phi_l;

    const DenseMatrix z = matmul(vectors, basis);
    parallel_for(d, [&](std::size_t i) {
      double u1 = 0.0, u2 = 0.0, l1 = 0.0, l2 = 0.0;
      const auto zi = z.row(i);
      for (std::size_t c = 0; c < k; ++c) {
        const double z2 = zi[c] * zi[c];
        const double iu = 1.0 / (up - lam[c]);
        const double il = 1.0 / (lam[c] - lp);
        u1 += z2 * iu;
        u2 += z2 * iu * iu;
        l1 += z2 * il;
        l2 += z2 * il * il;
      }
      upper_score[i] = u2 / du + u1;
      lower_score[i] = l2 / dl - l1;
    });

    double best_margin = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < d; ++i) {
      if (upper_score[i] > 0.0 && lower_score[i] >= upper_score[i])
        best_margin = std::max(best_margin, lower_score[i] - upper_score[i]);
    }
    if (!std::isfinite(best_margin)) {
      std::ostringstream os;
      os << "bss_select: no admissible vector at step " << step << " (l = " << lower << ", u = " << upper << ")";
      throw InvariantFailure(os.str());
    }
    std::size_t pick = d;
    for (std::size_t i = 0; i < d; ++i) {
      if (upper_score[i] > 0.0 && lower_score[i] >= upper_score[i] &&
          lower_score[i] - upper_score[i] >= best_margin - 1e-12) {
        pick = i;
        break;
      }
    }

    const double t = 2.0 / (upper_score[pick] + lower_score[pick]);
    out.weights[pick] += t;
    const auto v = vectors.row(pick);
    for (std::size_t p = 0; p < k; ++p)
      for (std::size_t q = 0; q < k; ++q) acc(p, q) += t * v[p] * v[q];
    upper = up;
    lower = lp;

    SymEig eig = sym_eig(acc);
    lam = std::move(eig.eigenvalues);
    basis = std::move(eig.eigenvectors);
    ++out.steps;

    // Barrier invariants: eigenvalues strictly inside (l, u), potentials
    // no larger than at the start.
    double pu = 0.0, pl = 0.0;
    for (double x : lam) {
      pu += 1.0 / (upper - x);
      pl += 1.0 / (x - lower);
    }
    if (!(lam.front() > lower && lam.back() < upper && pu <= phi_u0 * (1.0 + 1e-9) &&
          pl <= phi_l0 * (1.0 + 1e-9))) {
      std::ostringstream os;
      os << "bss_select: barrier invariant broken at step " << step << " (lambda in [" << lam.front() << ", "
         << lam.back() << "], barriers (" << lower << ", " << upper << "), potentials " << pl << " / " << phi_l0
         << ", " << pu << " / " << phi_u0 << ")";
      throw InvariantFailure(os.str());
    }

    if (config.stop_early && lam.front() > 0.0) {
      const double spread = (lam.back() - lam.front()) / (lam.back() + lam.front());
      if (spread <= 0.98 * eps) break;
    }
  }

  const double scale = 2.0 / (lam.front() + lam.back());
  for (double& w : out.weights) w *= scale;
  out.lambda_min = lam.front() * scale;
  out.lambda_max = lam.back() * scale;
  if (!(out.lambda_min >= 1.0 - eps && out.lambda_max <= 1.0 + eps)) {
    std::ostringstream os;
    os << "bss_select: final spectrum [" << out.lambda_min << ", " << out.lambda_max << "] misses the target";
    throw InvariantFailure(os.str());
  }
  return out;
}

ReducedMatrix sparsify_deterministic(const InputMatrix& x, double eps, const BssConfig& config,
                                     StageTimings* timings) {
  require(eps > 0.0 && eps < 1.0, "sparsify_deterministic: eps must lie in (0, 1)");
  if (nnz_of(x.data) == 0) return zero_input_output(x, Method::deterministic, std::nullopt);

  auto start = Clock::now();
  const Whitened wh = whiten(x);
  if (timings) timings->leverage_ms = elapsed_ms(start);

  start = Clock::now();
  const BssResult bss = bss_select(wh.vectors, eps, config);
  ReducedMatrix out;
  out.method = Method::deterministic;
  for (std::size_t i = 0; i < bss.weights.size(); ++i) {
    if (bss.weights[i] > 0.0) {
      out.selected_indices.push_back(i);
      out.weights.push_back(std::sqrt(bss.weights[i]));
    }
  }
  out.data = gather_columns(x.data, out.selected_indices, out.weights);
  if (timings) timings->selection_ms = elapsed_ms(start);
  return out;
}

}  // namespace atsp
