#pragma once

// Dense and sparse kernels shared by every pipeline stage. All arithmetic is
// IEEE double with a fixed per-entry summation order, so results are
// bit-identical across runs and worker counts.

#include <cstddef>
#include <vector>

#include "atsp/matrix.hpp"

namespace atsp {

/// Relative threshold below which an R diagonal entry or an eigenvalue is
/// treated as zero (relative to the largest counterpart).
inline constexpr double kRankTolerance = 1e-10;

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix matmul(const SparseMatrix& a, const DenseMatrix& b);
DenseMatrix matmul(const AnyMatrix& a, const DenseMatrix& b);

/// X X^T for an n x d matrix. The upper triangle is computed and mirrored so
/// the result is exactly symmetric.
DenseMatrix gram(const AnyMatrix& x);
DenseMatrix gram(const DenseMatrix& x);

struct QrResult {
  DenseMatrix q;  // rows x cols, orthonormal columns
  DenseMatrix r;  // cols x cols, upper triangular, nonnegative diagonal
  bool rank_deficient = false;
};

/// Householder QR (thin). Requires rows >= cols.
QrResult qr_decompose(const DenseMatrix& m);

struct SymEig {
  std::vector<double> eigenvalues;  // ascending
  DenseMatrix eigenvectors;         // column k pairs with eigenvalues[k]
};

/// Symmetric eigensolver: Householder tridiagonalization followed by
/// implicit QL iteration. Throws ContractViolation on asymmetric input.
SymEig sym_eig(const DenseMatrix& m);

struct SandwichResult {
  bool holds = false;
  // Smallest eps with (1-eps) a <= b <= (1+eps) a; +inf when b has mass
  // outside range(a).
  double eps_star = 0.0;
};

SandwichResult psd_sandwich_check(const DenseMatrix& a, const DenseMatrix& b, double eps);

double inf_norm(const DenseMatrix& m);
DenseMatrix entrywise_exp(const DenseMatrix& m);

// Small helpers.
DenseMatrix linear_combination(double alpha, const DenseMatrix& a, double beta, const DenseMatrix& b);
double frobenius_norm(const DenseMatrix& m);
double max_asymmetry(const DenseMatrix& m);
/// Inverse of an upper-triangular matrix with nonzero diagonal.
DenseMatrix upper_triangular_inverse(const DenseMatrix& r);

}  // namespace atsp
