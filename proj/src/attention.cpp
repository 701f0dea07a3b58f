#include "atsp/attention.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "atsp/error.hpp"
#include "atsp/matcore.hpp"

namespace atsp {

AttentionPair attention_from_exp(DenseMatrix exp_gram) {
  require(exp_gram.rows() == exp_gram.cols() && exp_gram.rows() >= 1, "attention: need a nonempty square matrix");
  const std::size_t n = exp_gram.rows();
  AttentionPair out;
  out.d_diag.resize(n);
  out.attention = DenseMatrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (double v : exp_gram.row(i)) s += v;
    out.d_diag[i] = s;
    for (std::size_t j = 0; j < n; ++j) out.attention(i, j) = exp_gram(i, j) / s;
  }
  out.exp_gram = std::move(exp_gram);
  return out;
}

AttentionPair attention_from_gram(DenseMatrix gram) {
  AttentionPair out = attention_from_exp(entrywise_exp(gram));
  out.gram = std::move(gram);
  return out;
}

AttentionPair attention_matrix(const AnyMatrix& x) {
  require(rows_of(x) >= 1, "attention_matrix: need n >= 1");
  return attention_from_gram(gram(x));
}

double attention_inf_error(const AttentionPair& x, const AttentionPair& y) {
  require(x.attention.rows() == y.attention.rows(), "attention_inf_error: size mismatch");
  return inf_norm(linear_combination(1.0, x.attention, -1.0, y.attention));
}

AttentionErrorReport verify(const AnyMatrix& x, const DenseMatrix& y, double eps) {
  require(rows_of(x) == y.rows(), "verify: X has " + std::to_string(rows_of(x)) + " rows but Y has " +
                                      std::to_string(y.rows()));
  return verify_pairs(attention_matrix(x), attention_matrix(AnyMatrix{y}), eps);
}

AttentionErrorReport verify_pairs(const AttentionPair& px, const AttentionPair& py, double eps) {
  require(px.gram.rows() == py.gram.rows() && px.gram.rows() >= 1, "verify: Gram sizes differ");
  require(eps >= 0.0, "verify: eps must be nonnegative");
  const std::size_t n = py.gram.rows();

  AttentionErrorReport rep;
  rep.eps = eps;
  rep.r_measured = inf_norm(px.gram);
  const SandwichResult sandwich = psd_sandwich_check(px.gram, py.gram, eps);
  rep.sandwich_holds = sandwich.holds;
  rep.eps_star = sandwich.eps_star;

  const double entry_limit = (1.0 + rep.eps_star) * rep.r_measured + 1e-12;
  rep.entry_bound_ok = inf_norm(py.gram) <= entry_limit;

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double ex = px.exp_gram(i, j);
      const double ey = py.exp_gram(i, j);
      rep.exp_rel_err = std::max(rep.exp_rel_err, std::abs(ex - ey) / std::min(ex, ey));
    }
    const double dx = px.d_diag[i];
    const double dy = py.d_diag[i];
    rep.rowsum_rel_err = std::max(rep.rowsum_rel_err, std::abs(dx - dy) / std::min(dx, dy));
  }
  rep.attention_inf_err = attention_inf_error(px, py);

  rep.exp_bound = kC2 * rep.r_measured;
  rep.rowsum_bound = kC1 * rep.r_measured;
  rep.attention_bound = (kC1 + kC2) * rep.r_measured;
  rep.bounds_applicable = rep.sandwich_holds && rep.eps_star < 1.0 && rep.r_measured < 0.1;
  if (rep.bounds_applicable) {
    rep.entry_bound_flagged = !rep.entry_bound_ok;
    rep.bounds_ok = rep.entry_bound_ok && rep.exp_rel_err <= rep.exp_bound && rep.rowsum_rel_err <= rep.rowsum_bound &&
                    rep.attention_inf_err <= rep.attention_bound;
  }
  return rep;
}

AttentionErrorReport verify(const InputMatrix& x, const ReducedMatrix& y, double eps) {
  return verify(x.data, y.data, eps);
}

}  // namespace atsp
