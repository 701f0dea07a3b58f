#include "atsp/sketch.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>

#include "atsp/error.hpp"
#include "atsp/matcore.hpp"
#include "atsp/parallel.hpp"
#include "atsp/rng.hpp"

namespace atsp {

const char* to_string(SketchKind kind) {
  switch (kind) {
    case SketchKind::sparse_embedding:
      return "sparse-embedding";
    case SketchKind::gaussian:
      return "gaussian";
    case SketchKind::ams:
      return "ams";
  }
  return "unknown";
}

namespace {

std::uint64_t mulmod_p(std::uint64_t a, std::uint64_t b) {
  const unsigned __int128 prod = static_cast<unsigned __int128>(a) * b;
  std::uint64_t lo = static_cast<std::uint64_t>(prod) & kAmsPrime;
  std::uint64_t hi = static_cast<std::uint64_t>(prod >> 61);
  std::uint64_t s = lo + hi;
  if (s >= kAmsPrime) s -= kAmsPrime;
  return s;
}

std::uint64_t addmod_p(std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = a + b;
  if (s >= kAmsPrime) s -= kAmsPrime;
  return s;
}

void validate(const SketchSpec& spec) {
  require(spec.out_dim >= 1 && spec.in_dim >= 1, "make_sketch: dimensions must be positive");
  if (spec.kind == SketchKind::sparse_embedding) {
    require(spec.nnz_per_column >= 1 && spec.nnz_per_column <= spec.out_dim,
            "make_sketch: sparse embedding needs 1 <= s <= out_dim (s = " + std::to_string(spec.nnz_per_column) +
                ", out_dim = " + std::to_string(spec.out_dim) + ")");
  }
  if (spec.kind == SketchKind::gaussian) {
    require(std::isfinite(spec.scale), "make_sketch: gaussian scale must be finite");
  }
}

}  // namespace

std::uint64_t ams_poly_hash(const std::uint64_t (&coeffs)[4], std::uint64_t x) {
  x %= kAmsPrime;
  std::uint64_t acc = coeffs[3];
  for (int k = 2; k >= 0; --k) acc = addmod_p(mulmod_p(acc, x), coeffs[k]);
  return acc;
}

std::span<const std::size_t> SketchMatrix::column_rows(std::size_t j) const {
  const std::size_t s = spec_.nnz_per_column;
  return {rows_.data() + j * s, s};
}

std::span<const double> SketchMatrix::column_values(std::size_t j) const {
  const std::size_t s = spec_.nnz_per_column;
  return {values_.data() + j * s, s};
}

DenseMatrix SketchMatrix::densify() const {
  if (!is_sparse()) return dense_;
  DenseMatrix out(rows(), cols());
  for (std::size_t j = 0; j < cols(); ++j) {
    const auto r = column_rows(j);
    const auto v = column_values(j);
    for (std::size_t k = 0; k < r.size(); ++k) out(r[k], j) = v[k];
  }
  return out;
}

SketchMatrix make_sketch(const SketchSpec& spec) {
  validate(spec);
  SketchMatrix sk;
  sk.spec_ = spec;

  switch (spec.kind) {
    case SketchKind::sparse_embedding: {
      const std::size_t s = spec.nnz_per_column;
      const double magnitude = 1.0 / std::sqrt(static_cast<double>(s));
      sk.rows_.resize(spec.in_dim * s);
      sk.values_.resize(spec.in_dim * s);
      parallel_for(spec.in_dim, [&](std::size_t j) {
        SplitMix64 rng(derive_seed(spec.seed, static_cast<std::uint64_t>(j)));
        // Partial Fisher-Yates over [0, out_dim): only the s displaced
        // positions are materialized.
        std::vector<std::pair<std::size_t, std::size_t>> displaced;
        auto slot = [&](std::size_t pos) {
          for (const auto& [p, v] : displaced)
            if (p == pos) return v;
          return pos;
        };
        auto assign = [&](std::size_t pos, std::size_t value) {
          for (auto& [p, v] : displaced) {
            if (p == pos) {
              v = value;
              return;
            }
          }
          displaced.emplace_back(pos, value);
        };
        std::vector<std::pair<std::size_t, double>> picked(s);
        for (std::size_t t = 0; t < s; ++t) {
          const std::size_t k = t + static_cast<std::size_t>(rng.below(spec.out_dim - t));
          const std::size_t chosen = slot(k);
          assign(k, slot(t));
          assign(t, chosen);
          picked[t] = {chosen, rng.coin() ? magnitude : -magnitude};
        }
        std::sort(picked.begin(), picked.end());
        for (std::size_t t = 0; t < s; ++t) {
          sk.rows_[j * s + t] = picked[t].first;
          sk.values_[j * s + t] = picked[t].second;
        }
      });
      break;
    }
    case SketchKind::gaussian: {
      sk.dense_ = DenseMatrix(spec.out_dim, spec.in_dim);
      // One stream per column, consumed top to bottom.
      parallel_for(spec.in_dim, [&](std::size_t j) {
        GaussianSampler g(derive_seed(spec.seed, static_cast<std::uint64_t>(j)));
        for (std::size_t i = 0; i < spec.out_dim; ++i) sk.dense_(i, j) = spec.scale * g.next();
      });
      break;
    }
    case SketchKind::ams: {
      sk.dense_ = DenseMatrix(spec.out_dim, spec.in_dim);
      const double magnitude = 1.0 / std::sqrt(static_cast<double>(spec.out_dim));
      parallel_for(spec.out_dim, [&](std::size_t i) {
        SplitMix64 rng(derive_seed(spec.seed, static_cast<std::uint64_t>(i)));
        std::uint64_t coeffs[4];
        for (auto& c : coeffs) c = rng.below(kAmsPrime);
        for (std::size_t j = 0; j < spec.in_dim; ++j) {
          const bool positive = (ams_poly_hash(coeffs, j) & 1U) != 0;
          sk.dense_(i, j) = positive ? magnitude : -magnitude;
        }
      });
      break;
    }
  }
  return sk;
}

DenseMatrix apply_left(const SketchMatrix& sk, const DenseMatrix& a) {
  require(a.rows() == sk.cols(), "apply_left: sketch has " + std::to_string(sk.cols()) +
                                     " columns but operand has " + std::to_string(a.rows()) + " rows");
  if (!sk.is_sparse()) return matmul(sk.dense(), a);
  DenseMatrix out(sk.rows(), a.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const auto src = a.row(k);
    const auto r = sk.column_rows(k);
    const auto v = sk.column_values(k);
    for (std::size_t t = 0; t < r.size(); ++t) {
      auto dst = out.row(r[t]);
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += v[t] * src[j];
    }
  }
  return out;
}

DenseMatrix apply_left(const SketchMatrix& sk, const AnyMatrix& a) {
  if (const auto* d = std::get_if<DenseMatrix>(&a)) return apply_left(sk, *d);
  const auto& sp = std::get<SparseMatrix>(a);
  require(sp.rows() == sk.cols(), "apply_left: sketch has " + std::to_string(sk.cols()) +
                                      " columns but operand has " + std::to_string(sp.rows()) + " rows");
  DenseMatrix out(sk.rows(), sp.cols());
  if (sk.is_sparse()) {
    // Cost s * nnz(a).
    for (std::size_t k = 0; k < sp.rows(); ++k) {
      const auto idx = sp.row_indices(k);
      const auto val = sp.row_values(k);
      const auto r = sk.column_rows(k);
      const auto v = sk.column_values(k);
      for (std::size_t t = 0; t < r.size(); ++t) {
        auto dst = out.row(r[t]);
        for (std::size_t q = 0; q < idx.size(); ++q) dst[idx[q]] += v[t] * val[q];
      }
    }
    return out;
  }
  const DenseMatrix& s = sk.dense();
  parallel_for(s.rows(), [&](std::size_t i) {
    auto dst = out.row(i);
    for (std::size_t k = 0; k < sp.rows(); ++k) {
      const double sik = s(i, k);
      const auto idx = sp.row_indices(k);
      const auto val = sp.row_values(k);
      for (std::size_t q = 0; q < idx.size(); ++q) dst[idx[q]] += sik * val[q];
    }
  });
  return out;
}

DenseMatrix apply_right(const DenseMatrix& a, const SketchMatrix& sk) {
  require(a.cols() == sk.rows(), "apply_right: operand has " + std::to_string(a.cols()) +
                                     " columns but sketch has " + std::to_string(sk.rows()) + " rows");
  if (!sk.is_sparse()) return matmul(a, sk.dense());
  DenseMatrix out(a.rows(), sk.cols());
  parallel_for(a.rows(), [&](std::size_t i) {
    const auto src = a.row(i);
    for (std::size_t j = 0; j < sk.cols(); ++j) {
      const auto r = sk.column_rows(j);
      const auto v = sk.column_values(j);
      double s = 0.0;
      for (std::size_t t = 0; t < r.size(); ++t) s += src[r[t]] * v[t];
      out(i, j) = s;
    }
  });
  return out;
}

}  // namespace atsp
