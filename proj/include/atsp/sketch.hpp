#pragma once

#include <cstdint>
#include <vector>

#include "atsp/matrix.hpp"

namespace atsp {

enum class SketchKind { sparse_embedding, gaussian, ams };

const char* to_string(SketchKind kind);

/// Shape and randomness of an out_dim x in_dim sketching matrix.
struct SketchSpec {
  SketchKind kind = SketchKind::gaussian;
  std::size_t out_dim = 1;
  std::size_t in_dim = 1;
  std::size_t nnz_per_column = 1;  // sparse embedding only
  double scale = 1.0;              // gaussian only
  std::uint64_t seed = 0;
};

/// Realized sketch. Sparse embeddings keep per-column (row, value) lists;
/// gaussian and AMS sketches are stored densely.
class SketchMatrix {
 public:
  const SketchSpec& spec() const { return spec_; }
  std::size_t rows() const { return spec_.out_dim; }
  std::size_t cols() const { return spec_.in_dim; }

  bool is_sparse() const { return spec_.kind == SketchKind::sparse_embedding; }

  /// Sparse embedding column j: row positions (ascending) and values.
  std::span<const std::size_t> column_rows(std::size_t j) const;
  std::span<const double> column_values(std::size_t j) const;

  const DenseMatrix& dense() const { return dense_; }
  DenseMatrix densify() const;

  friend SketchMatrix make_sketch(const SketchSpec& spec);

 private:
  SketchSpec spec_;
  std::vector<std::size_t> rows_;
  std::vector<double> values_;
  DenseMatrix dense_;
};

/// Mersenne-prime field used by the AMS hash family.
inline constexpr std::uint64_t kAmsPrime = (std::uint64_t{1} << 61) - 1;

/// Degree-3 polynomial hash over GF(2^61 - 1); 4-wise independent when the
/// coefficients are uniform.
std::uint64_t ams_poly_hash(const std::uint64_t (&coeffs)[4], std::uint64_t x);

SketchMatrix make_sketch(const SketchSpec& spec);

/// sk * a, with a having sk.cols() rows.
DenseMatrix apply_left(const SketchMatrix& sk, const AnyMatrix& a);
DenseMatrix apply_left(const SketchMatrix& sk, const DenseMatrix& a);

/// a * sk, with a having sk.rows() columns.
DenseMatrix apply_right(const DenseMatrix& a, const SketchMatrix& sk);

}  // namespace atsp
