#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "atsp/error.hpp"
#include "atsp/matcore.hpp"
#include "atsp/sketch.hpp"
#include "oracles.hpp"

using namespace atsp;

namespace {

SketchSpec spec(SketchKind kind, std::size_t out, std::size_t in, std::size_t s, std::uint64_t seed) {
  SketchSpec sp;
  sp.kind = kind;
  sp.out_dim = out;
  sp.in_dim = in;
  sp.nnz_per_column = s;
  sp.seed = seed;
  return sp;
}

std::vector<double> singular_values(const DenseMatrix& a) {
  auto ev = oracle::jacobi_eigenvalues(oracle::naive_matmul(oracle::naive_transpose(a), a));
  for (double& v : ev) v = std::sqrt(std::max(0.0, v));
  return ev;
}

}  // namespace

TEST(SparseEmbedding, ExactlySNonzerosPerColumn) {
  const SketchMatrix sk = make_sketch(spec(SketchKind::sparse_embedding, 4, 10, 2, 1));
  const DenseMatrix d = sk.densify();
  for (std::size_t j = 0; j < 10; ++j) {
    int nz = 0;
    double norm = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
      if (d(i, j) != 0.0) {
        ++nz;
        EXPECT_EQ(std::abs(d(i, j)), 1.0 / std::sqrt(2.0));
      }
      norm += d(i, j) * d(i, j);
    }
    EXPECT_EQ(nz, 2);
    EXPECT_NEAR(norm, 1.0, 1e-15);
    const auto rows = sk.column_rows(j);
    EXPECT_TRUE(std::is_sorted(rows.begin(), rows.end()));
    EXPECT_EQ(std::set<std::size_t>(rows.begin(), rows.end()).size(), 2u);
  }
}

TEST(SparseEmbedding, ColumnPropertyAcrossShapes) {
  for (std::size_t s = 1; s <= 6; ++s) {
    const SketchMatrix sk = make_sketch(spec(SketchKind::sparse_embedding, 6, 50, s, 10 + s));
    for (std::size_t j = 0; j < 50; ++j) {
      ASSERT_EQ(sk.column_rows(j).size(), s);
      for (double v : sk.column_values(j)) EXPECT_EQ(std::abs(v), 1.0 / std::sqrt(double(s)));
    }
  }
}

TEST(SparseEmbedding, PositionsRoughlyUniform) {
  std::vector<int> hits(8, 0);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const SketchMatrix sk = make_sketch(spec(SketchKind::sparse_embedding, 8, 50, 3, seed));
    for (std::size_t j = 0; j < 50; ++j)
      for (std::size_t r : sk.column_rows(j)) ++hits[r];
  }
  // 30000 placements over 8 rows: expected 3750 each, sd about 57
  for (int h : hits) EXPECT_NEAR(h, 3750, 350);
}

TEST(Sketch, DeterministicInSeed) {
  for (SketchKind k : {SketchKind::sparse_embedding, SketchKind::gaussian, SketchKind::ams}) {
    const auto sp = spec(k, 5, 12, 2, 99);
    EXPECT_EQ(make_sketch(sp).densify(), make_sketch(sp).densify()) << to_string(k);
    auto other = sp;
    other.seed = 100;
    EXPECT_NE(make_sketch(sp).densify(), make_sketch(other).densify()) << to_string(k);
  }
}

TEST(Sketch, InvalidSpecThrows) {
  EXPECT_THROW(make_sketch(spec(SketchKind::sparse_embedding, 2, 5, 3, 0)), ContractViolation);
  EXPECT_THROW(make_sketch(spec(SketchKind::sparse_embedding, 2, 5, 0, 0)), ContractViolation);
  EXPECT_THROW(make_sketch(spec(SketchKind::gaussian, 0, 5, 1, 0)), ContractViolation);
  EXPECT_THROW(make_sketch(spec(SketchKind::ams, 3, 0, 1, 0)), ContractViolation);
}

TEST(Gaussian, MomentsOfTenThousandEntries) {
  const SketchMatrix sk = make_sketch(spec(SketchKind::gaussian, 10000, 1, 1, 5));
  const DenseMatrix d = sk.densify();
  double mean = 0.0, var = 0.0;
  for (double v : d.values()) mean += v;
  mean /= 10000.0;
  for (double v : d.values()) var += (v - mean) * (v - mean);
  var /= 9999.0;
  EXPECT_NEAR(mean, 0.0, 0.05);
  EXPECT_NEAR(var, 1.0, 0.05);
}

TEST(Gaussian, ScaleMultipliesEntries) {
  auto sp = spec(SketchKind::gaussian, 6, 4, 1, 5);
  const DenseMatrix base = make_sketch(sp).densify();
  sp.scale = 0.25;
  const DenseMatrix scaled = make_sketch(sp).densify();
  for (std::size_t k = 0; k < base.size(); ++k) EXPECT_EQ(scaled.values()[k], 0.25 * base.values()[k]);
}

TEST(Ams, EntriesAreScaledSigns) {
  const DenseMatrix d = make_sketch(spec(SketchKind::ams, 4, 9, 1, 6)).densify();
  for (double v : d.values()) EXPECT_EQ(std::abs(v), 0.5);
}

TEST(Ams, PolynomialHashIsReducedModPrime) {
  const std::uint64_t c[4] = {kAmsPrime - 1, kAmsPrime - 1, kAmsPrime - 1, kAmsPrime - 1};
  // (p-1)(1 + x + x^2 + x^3) at x = 1 is 4(p-1) = p - 4 (mod p)
  EXPECT_EQ(ams_poly_hash(c, 1), kAmsPrime - 4);
  const std::uint64_t lin[4] = {7, 3, 0, 0};
  EXPECT_EQ(ams_poly_hash(lin, 5), 22u);
  const std::uint64_t cube[4] = {0, 0, 0, 1};
  EXPECT_EQ(ams_poly_hash(cube, 1u << 20), (std::uint64_t{1} << 60) % kAmsPrime);
  // 2^60 cubed = 2^180 = 2^(3*61 - 3) = 2^-3 ... reduces to 2^57 since 2^61 = 1
  EXPECT_EQ(ams_poly_hash(cube, std::uint64_t{1} << 60), std::uint64_t{1} << 58);
}

TEST(Ams, FourWiseIndependence) {
  constexpr std::size_t n = 8, b = 4, seeds = 10000;
  std::vector<DenseMatrix> mats;
  mats.reserve(seeds);
  for (std::uint64_t s = 0; s < seeds; ++s) mats.push_back(make_sketch(spec(SketchKind::ams, b, n, 1, s)).densify());
  const double se = 1.0 / std::sqrt(double(seeds));
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t j1 = 0; j1 < n; ++j1)
      for (std::size_t j2 = j1 + 1; j2 < n; ++j2)
        for (std::size_t j3 = j2 + 1; j3 < n; ++j3)
          for (std::size_t j4 = j3 + 1; j4 < n; ++j4) {
            double mean = 0.0;
            for (const auto& m : mats) mean += m(i, j1) * m(i, j2) * m(i, j3) * m(i, j4) * double(b * b);
            mean /= double(seeds);
            EXPECT_LE(std::abs(mean), 4.0 * se) << i << ' ' << j1 << j2 << j3 << j4;
          }
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double mean = 0.0;
      for (const auto& m : mats) mean += m(i, j) * 2.0;
      EXPECT_LE(std::abs(mean / double(seeds)), 4.0 * se);
    }
}

TEST(ApplyLeft, ZeroInput) {
  for (SketchKind k : {SketchKind::sparse_embedding, SketchKind::gaussian, SketchKind::ams}) {
    const SketchMatrix sk = make_sketch(spec(k, 3, 7, 2, 1));
    EXPECT_EQ(apply_left(sk, DenseMatrix(7, 4)), DenseMatrix(3, 4));
    EXPECT_EQ(apply_left(sk, AnyMatrix{SparseMatrix(7, 4)}), DenseMatrix(3, 4));
  }
}

TEST(ApplyLeft, OneByOneIsSignFlip) {
  const SketchMatrix sk = make_sketch(spec(SketchKind::sparse_embedding, 1, 1, 1, 42));
  const DenseMatrix a = oracle::random_dense(1, 5, 2);
  const DenseMatrix y = apply_left(sk, a);
  const double sign = y(0, 0) / a(0, 0);
  EXPECT_EQ(std::abs(sign), 1.0);
  for (std::size_t j = 0; j < 5; ++j) EXPECT_EQ(y(0, j), sign * a(0, j));
}

TEST(ApplyLeft, MatchesDenseOracle) {
  DenseMatrix a = oracle::random_dense(40, 6, 3);
  for (std::size_t k = 0; k < a.size(); k += 4) a.values()[k] = 0.0;
  for (SketchKind k : {SketchKind::sparse_embedding, SketchKind::gaussian, SketchKind::ams}) {
    const SketchMatrix sk = make_sketch(spec(k, 9, 40, 3, 4));
    const DenseMatrix expect = oracle::naive_matmul(sk.densify(), a);
    EXPECT_LE(oracle::max_abs_diff(apply_left(sk, a), expect), 1e-12) << to_string(k);
    EXPECT_LE(oracle::max_abs_diff(apply_left(sk, AnyMatrix{SparseMatrix::from_dense(a)}), expect), 1e-12);
  }
}

TEST(ApplyLeft, DimensionMismatchThrows) {
  const SketchMatrix sk = make_sketch(spec(SketchKind::gaussian, 3, 7, 1, 1));
  EXPECT_THROW(apply_left(sk, DenseMatrix(6, 2)), ContractViolation);
}

TEST(ApplyRight, IdentityAndZero) {
  for (SketchKind k : {SketchKind::sparse_embedding, SketchKind::gaussian, SketchKind::ams}) {
    const SketchMatrix sk = make_sketch(spec(k, 5, 8, 2, 7));
    EXPECT_EQ(apply_right(DenseMatrix::identity(5), sk), sk.densify());
    EXPECT_EQ(apply_right(DenseMatrix(3, 5), sk), DenseMatrix(3, 8));
  }
}

TEST(ApplyRight, MatchesDenseOracleAndChecksShape) {
  const DenseMatrix a = oracle::random_dense(6, 5, 8);
  for (SketchKind k : {SketchKind::sparse_embedding, SketchKind::gaussian, SketchKind::ams}) {
    const SketchMatrix sk = make_sketch(spec(k, 5, 11, 2, 9));
    EXPECT_LE(oracle::max_abs_diff(apply_right(a, sk), oracle::naive_matmul(a, sk.densify())), 1e-12);
  }
  EXPECT_THROW(apply_right(DenseMatrix(2, 4), make_sketch(spec(SketchKind::gaussian, 5, 3, 1, 1))),
               ContractViolation);
}

TEST(SparseEmbedding, SubspaceEmbeddingSmoke) {
  const DenseMatrix a = oracle::random_dense(64, 8, 10);
  const auto sa = singular_values(a);
  int good = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const SketchMatrix sk = make_sketch(spec(SketchKind::sparse_embedding, 200, 64, 4, seed));
    const auto ss = singular_values(apply_left(sk, a));
    bool ok = true;
    for (std::size_t k = 0; k < sa.size(); ++k) ok = ok && ss[k] >= 0.5 * sa[k] && ss[k] <= 1.5 * sa[k];
    good += ok ? 1 : 0;
  }
  EXPECT_GE(good, 95);
}
