#pragma once

#include <vector>

#include "atsp/matrix.hpp"
#include "atsp/sparsifier.hpp"

namespace atsp {

/// Symmetric softmax attention D^{-1} exp(G) for a Gram matrix G.
struct AttentionPair {
  DenseMatrix gram;
  DenseMatrix exp_gram;
  std::vector<double> d_diag;  // row sums of exp_gram
  DenseMatrix attention;
};

AttentionPair attention_matrix(const AnyMatrix& x);
AttentionPair attention_from_gram(DenseMatrix gram);
/// Row-normalizes an already exponentiated (strictly positive) matrix; the
/// gram field is left empty.
AttentionPair attention_from_exp(DenseMatrix exp_gram);

/// Constants of the perturbation chain: exp and row-sum relative errors are
/// at most 6 r, the attention error at most (c1 + c2) r.
inline constexpr double kC1 = 6.0;
inline constexpr double kC2 = 6.0;

struct AttentionErrorReport {
  double eps = 0.0;  // requested sandwich factor
  double r_measured = 0.0;
  bool sandwich_holds = false;
  double eps_star = 0.0;
  bool entry_bound_ok = false;
  double exp_rel_err = 0.0;
  double exp_bound = 0.0;
  double rowsum_rel_err = 0.0;
  double rowsum_bound = 0.0;
  double attention_inf_err = 0.0;
  double attention_bound = 0.0;
  double c1 = kC1;
  double c2 = kC2;
  // Bounds apply only when the sandwich holds with eps_star < 1 and
  // r_measured < 0.1; otherwise they are reported but not enforced.
  bool bounds_applicable = false;
  bool bounds_ok = true;
  // Entry bound failed although its hypotheses hold.
  bool entry_bound_flagged = false;
};

/// Full report from precomputed pairs of X and Y.
AttentionErrorReport verify_pairs(const AttentionPair& px, const AttentionPair& py, double eps);
AttentionErrorReport verify(const AnyMatrix& x, const DenseMatrix& y, double eps);
AttentionErrorReport verify(const InputMatrix& x, const ReducedMatrix& y, double eps);

/// ||D^{-1}(X) exp(XX^T) - D^{-1}(Y) exp(YY^T)||_inf from two pairs.
double attention_inf_error(const AttentionPair& x, const AttentionPair& y);

}  // namespace atsp
