#include "atsp/matcore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "atsp/error.hpp"
#include "atsp/parallel.hpp"

namespace atsp {

namespace {

std::string shape(const DenseMatrix& m) { return std::to_string(m.rows()) + "x" + std::to_string(m.cols()); }

}  // namespace

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  require(a.cols() == b.rows(), "matmul: inner dimensions differ (" + shape(a) + " * " + shape(b) + ")");
  DenseMatrix out(a.rows(), b.cols());
  parallel_for(a.rows(), [&](std::size_t i) {
    auto dst = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      const auto src = b.row(k);
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += aik * src[j];
    }
  });
  return out;
}

DenseMatrix matmul(const SparseMatrix& a, const DenseMatrix& b) {
  require(a.cols() == b.rows(), "matmul: inner dimensions differ (" + std::to_string(a.rows()) + "x" +
                                    std::to_string(a.cols()) + " * " + shape(b) + ")");
  DenseMatrix out(a.rows(), b.cols());
  parallel_for(a.rows(), [&](std::size_t i) {
    auto dst = out.row(i);
    const auto idx = a.row_indices(i);
    const auto val = a.row_values(i);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const auto src = b.row(idx[k]);
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += val[k] * src[j];
    }
  });
  return out;
}

DenseMatrix matmul(const AnyMatrix& a, const DenseMatrix& b) {
  return std::visit([&](const auto& x) { return matmul(x, b); }, a);
}

DenseMatrix gram(const DenseMatrix& x) {
  const std::size_t n = x.rows();
  DenseMatrix g(n, n);
  parallel_for(n, [&](std::size_t i) {
    const auto xi = x.row(i);
    for (std::size_t j = i; j < n; ++j) {
      const auto xj = x.row(j);
      double s = 0.0;
      for (std::size_t k = 0; k < xi.size(); ++k) s += xi[k] * xj[k];
      g(i, j) = s;
    }
  });
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) g(i, j) = g(j, i);
  return g;
}

namespace {

DenseMatrix gram_sparse(const SparseMatrix& x) {
  const std::size_t n = x.rows();
  DenseMatrix g(n, n);
  parallel_for(n, [&](std::size_t i) {
    const auto ii = x.row_indices(i);
    const auto iv = x.row_values(i);
    for (std::size_t j = i; j < n; ++j) {
      const auto ji = x.row_indices(j);
      const auto jv = x.row_values(j);
      double s = 0.0;
      std::size_t p = 0, q = 0;
      while (p < ii.size() && q < ji.size()) {
        if (ii[p] < ji[q]) {
          ++p;
        } else if (ji[q] < ii[p]) {
          ++q;
        } else {
          s += iv[p++] * jv[q++];
        }
      }
      g(i, j) = s;
    }
  });
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) g(i, j) = g(j, i);
  return g;
}

}  // namespace

DenseMatrix gram(const AnyMatrix& x) {
  if (const auto* s = std::get_if<SparseMatrix>(&x)) return gram_sparse(*s);
  return gram(std::get<DenseMatrix>(x));
}

QrResult qr_decompose(const DenseMatrix& m) {
  const std::size_t rows = m.rows();
  const std::size_t cols = m.cols();
  require(rows >= cols, "qr_decompose: needs rows >= cols, got " + shape(m));

  // Columns are stored as rows of wt so reflector sweeps run over contiguous memory.
  DenseMatrix wt = m.transpose();
  std::vector<std::vector<double>> reflectors(cols);

  for (std::size_t k = 0; k < cols; ++k) {
    const auto ck = wt.row(k);
    double norm2 = 0.0;
    for (std::size_t i = k; i < rows; ++i) norm2 += ck[i] * ck[i];
    const double norm = std::sqrt(norm2);
    if (norm == 0.0) continue;
    const double alpha = ck[k] > 0.0 ? -norm : norm;
    std::vector<double> v(ck.begin() + static_cast<std::ptrdiff_t>(k), ck.end());
    v[0] -= alpha;
    double vnorm2 = 0.0;
    for (double x : v) vnorm2 += x * x;
    if (vnorm2 == 0.0) continue;
    // Apply H = I - 2 v v^T / (v^T v) to the trailing block.
    for (std::size_t j = k; j < cols; ++j) {
      const auto cj = wt.row(j);
      double dot = 0.0;
      for (std::size_t i = k; i < rows; ++i) dot += v[i - k] * cj[i];
      const double f = 2.0 * dot / vnorm2;
      for (std::size_t i = k; i < rows; ++i) cj[i] -= f * v[i - k];
    }
    for (std::size_t i = k + 1; i < rows; ++i) ck[i] = 0.0;
    const double inv = 1.0 / std::sqrt(vnorm2);
    for (double& x : v) x *= inv;
    reflectors[k] = std::move(v);
  }

  QrResult out;
  out.r = DenseMatrix(cols, cols);
  for (std::size_t i = 0; i < cols; ++i)
    for (std::size_t j = i; j < cols; ++j) out.r(i, j) = wt(j, i);

  // Q = H_0 H_1 ... H_{cols-1} [I; 0], built back to front (column-wise in qt).
  DenseMatrix qt(cols, rows);
  for (std::size_t i = 0; i < cols; ++i) qt(i, i) = 1.0;
  for (std::size_t kk = cols; kk-- > 0;) {
    const auto& v = reflectors[kk];
    if (v.empty()) continue;
    for (std::size_t j = 0; j < cols; ++j) {
      const auto qj = qt.row(j);
      double dot = 0.0;
      for (std::size_t i = kk; i < rows; ++i) dot += v[i - kk] * qj[i];
      for (std::size_t i = kk; i < rows; ++i) qj[i] -= 2.0 * dot * v[i - kk];
    }
  }
  out.q = qt.transpose();

  double max_diag = 0.0;
  for (std::size_t k = 0; k < cols; ++k) {
    if (out.r(k, k) < 0.0) {
      for (std::size_t j = k; j < cols; ++j) out.r(k, j) = -out.r(k, j);
      for (std::size_t i = 0; i < rows; ++i) out.q(i, k) = -out.q(i, k);
    }
    max_diag = std::max(max_diag, out.r(k, k));
  }
  for (std::size_t k = 0; k < cols; ++k) {
    if (!(out.r(k, k) > kRankTolerance * max_diag)) out.rank_deficient = true;
  }
  return out;
}

double max_asymmetry(const DenseMatrix& m) {
  double worst = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = i + 1; j < m.cols(); ++j) worst = std::max(worst, std::abs(m(i, j) - m(j, i)));
  return worst;
}

SymEig sym_eig(const DenseMatrix& m) {
  require(m.rows() == m.cols(), "sym_eig: matrix is not square (" + shape(m) + ")");
  require(m.all_finite(), "sym_eig: non-finite entry");
  const double asym = max_asymmetry(m);
  require(asym <= 1e-12 * std::max(1.0, inf_norm(m)),
          "sym_eig: matrix is not symmetric (max |a_ij - a_ji| = " + std::to_string(asym) + ")");

  const int n = static_cast<int>(m.rows());
  SymEig out;
  if (n == 0) return out;

  DenseMatrix v = m;
  // Use the upper triangle as the source of truth.
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < i; ++j) v(i, j) = v(j, i);
  std::vector<double> d(n), e(n);

  // Householder reduction to tridiagonal form.
  for (int j = 0; j < n; ++j) d[j] = v(n - 1, j);
  for (int i = n - 1; i > 0; --i) {
    double scale = 0.0;
    double h = 0.0;
    for (int k = 0; k < i; ++k) scale += std::abs(d[k]);
    if (scale == 0.0) {
      e[i] = d[i - 1];
      for (int j = 0; j < i; ++j) {
        d[j] = v(i - 1, j);
        v(i, j) = 0.0;
        v(j, i) = 0.0;
      }
    } else {
      for (int k = 0; k < i; ++k) {
        d[k] /= scale;
        h += d[k] * d[k];
      }
      double f = d[i - 1];
      double g = std::sqrt(h);
      if (f > 0) g = -g;
      e[i] = scale * g;
      h -= f * g;
      d[i - 1] = f - g;
      for (int j = 0; j < i; ++j) e[j] = 0.0;
      for (int j = 0; j < i; ++j) {
        f = d[j];
        v(j, i) = f;
        g = e[j] + v(j, j) * f;
        for (int k = j + 1; k <= i - 1; ++k) {
          g += v(k, j) * d[k];
          e[k] += v(k, j) * f;
        }
        e[j] = g;
      }
      f = 0.0;
      for (int j = 0; j < i; ++j) {
        e[j] /= h;
        f += e[j] * d[j];
      }
      const double hh = f / (h + h);
      for (int j = 0; j < i; ++j) e[j] -= hh * d[j];
      for (int j = 0; j < i; ++j) {
        f = d[j];
        g = e[j];
        for (int k = j; k <= i - 1; ++k) v(k, j) -= (f * e[k] + g * d[k]);
        d[j] = v(i - 1, j);
        v(i, j) = 0.0;
      }
    }
    d[i] = h;
  }
  for (int i = 0; i < n - 1; ++i) {
    v(n - 1, i) = v(i, i);
    v(i, i) = 1.0;
    const double h = d[i + 1];
    if (h != 0.0) {
      for (int k = 0; k <= i; ++k) d[k] = v(k, i + 1) / h;
      for (int j = 0; j <= i; ++j) {
        double g = 0.0;
        for (int k = 0; k <= i; ++k) g += v(k, i + 1) * v(k, j);
        for (int k = 0; k <= i; ++k) v(k, j) -= g * d[k];
      }
    }
    for (int k = 0; k <= i; ++k) v(k, i + 1) = 0.0;
  }
  for (int j = 0; j < n; ++j) {
    d[j] = v(n - 1, j);
    v(n - 1, j) = 0.0;
  }
  v(n - 1, n - 1) = 1.0;
  e[0] = 0.0;

  // Implicit QL iteration on the tridiagonal matrix.
  for (int i = 1; i < n; ++i) e[i - 1] = e[i];
  e[n - 1] = 0.0;
  double f = 0.0;
  double tst1 = 0.0;
  const double eps = std::numeric_limits<double>::epsilon();
  for (int l = 0; l < n; ++l) {
    tst1 = std::max(tst1, std::abs(d[l]) + std::abs(e[l]));
    int mm = l;
    while (mm < n) {
      if (std::abs(e[mm]) <= eps * tst1) break;
      ++mm;
    }
    if (mm > l) {
      int iter = 0;
      do {
        if (++iter > 60) throw InvariantFailure("sym_eig: QL iteration did not converge");
        double g = d[l];
        double p = (d[l + 1] - g) / (2.0 * e[l]);
        double r = std::hypot(p, 1.0);
        if (p < 0) r = -r;
        d[l] = e[l] / (p + r);
        d[l + 1] = e[l] * (p + r);
        const double dl1 = d[l + 1];
        double h = g - d[l];
        for (int i = l + 2; i < n; ++i) d[i] -= h;
        f += h;
        p = d[mm];
        double c = 1.0, c2 = 1.0, c3 = 1.0;
        const double el1 = e[l + 1];
        double s = 0.0, s2 = 0.0;
        for (int i = mm - 1; i >= l; --i) {
          c3 = c2;
          c2 = c;
          s2 = s;
          g = c * e[i];
          h = c * p;
          r = std::hypot(p, e[i]);
          e[i + 1] = s * r;
          s = e[i] / r;
          c = p / r;
          p = c * d[i] - s * g;
          d[i + 1] = h + s * (c * g + s * d[i]);
          for (int k = 0; k < n; ++k) {
            h = v(k, i + 1);
            v(k, i + 1) = s * v(k, i) + c * h;
            v(k, i) = c * v(k, i) - s * h;
          }
        }
        p = -s * s2 * c3 * el1 * e[l] / dl1;
        e[l] = s * p;
        d[l] = c * p;
      } while (std::abs(e[l]) > eps * tst1);
    }
    d[l] += f;
    e[l] = 0.0;
  }

  // Selection sort keeps the pairing with eigenvector columns.
  for (int i = 0; i < n - 1; ++i) {
    int k = i;
    double p = d[i];
    for (int j = i + 1; j < n; ++j) {
      if (d[j] < p) {
        k = j;
        p = d[j];
      }
    }
    if (k != i) {
      d[k] = d[i];
      d[i] = p;
      for (int j = 0; j < n; ++j) std::swap(v(j, i), v(j, k));
    }
  }

  out.eigenvalues = std::move(d);
  out.eigenvectors = std::move(v);
  return out;
}

DenseMatrix linear_combination(double alpha, const DenseMatrix& a, double beta, const DenseMatrix& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(),
          "linear_combination: shape mismatch (" + shape(a) + " vs " + shape(b) + ")");
  DenseMatrix out(a.rows(), a.cols());
  auto dst = out.values();
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t k = 0; k < dst.size(); ++k) dst[k] = alpha * av[k] + beta * bv[k];
  return out;
}

SandwichResult psd_sandwich_check(const DenseMatrix& a, const DenseMatrix& b, double eps) {
  require(a.rows() == a.cols() && a.rows() == b.rows() && b.rows() == b.cols(),
          "psd_sandwich_check: shape mismatch (" + shape(a) + " vs " + shape(b) + ")");
  require(eps >= 0.0, "psd_sandwich_check: eps must be nonnegative");
  const double scale = inf_norm(a);
  require(max_asymmetry(a) <= 1e-12 * std::max(1.0, scale), "psd_sandwich_check: a is not symmetric");
  require(max_asymmetry(b) <= 1e-12 * std::max(1.0, inf_norm(b)), "psd_sandwich_check: b is not symmetric");

  SandwichResult out;
  const double tol = 1e-9 * scale;
  const std::size_t n = a.rows();
  if (n == 0) {
    out.holds = true;
    return out;
  }

  const double upper_min = sym_eig(linear_combination(1.0 + eps, a, -1.0, b)).eigenvalues.front();
  const double lower_min = sym_eig(linear_combination(1.0, b, -(1.0 - eps), a)).eigenvalues.front();
  out.holds = upper_min >= -tol && lower_min >= -tol;

  if (a == b) {
    out.eps_star = 0.0;
    return out;
  }

  // Whiten b by a on range(a); any mass of b off that range makes the
  // sandwich infeasible for every eps.
  const SymEig ea = sym_eig(a);
  const double top = ea.eigenvalues.back();
  std::vector<std::size_t> range, null;
  for (std::size_t k = 0; k < n; ++k) {
    if (top > 0.0 && ea.eigenvalues[k] > kRankTolerance * top) {
      range.push_back(k);
    } else {
      null.push_back(k);
    }
  }

  const DenseMatrix bv = matmul(b, ea.eigenvectors);
  auto projected = [&](std::size_t p, std::size_t q) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += ea.eigenvectors(i, p) * bv(i, q);
    return s;
  };
  for (std::size_t p : null) {
    for (std::size_t q = 0; q < n; ++q) {
      if (std::abs(projected(p, q)) > tol) {
        out.eps_star = std::numeric_limits<double>::infinity();
        return out;
      }
    }
  }
  if (range.empty()) {
    out.eps_star = 0.0;
    return out;
  }

  const std::size_t k = range.size();
  DenseMatrix pencil(k, k);
  for (std::size_t p = 0; p < k; ++p) {
    for (std::size_t q = p; q < k; ++q) {
      const double s = projected(range[p], range[q]) /
                       std::sqrt(ea.eigenvalues[range[p]] * ea.eigenvalues[range[q]]);
      pencil(p, q) = s;
    }
  }
  for (std::size_t p = 0; p < k; ++p)
    for (std::size_t q = 0; q < p; ++q) pencil(p, q) = pencil(q, p);
  const auto mu = sym_eig(pencil).eigenvalues;
  out.eps_star = std::max({0.0, mu.back() - 1.0, 1.0 - mu.front()});
  return out;
}

double inf_norm(const DenseMatrix& m) {
  double best = 0.0;
  for (double x : m.values()) best = std::max(best, std::abs(x));
  return best;
}

double frobenius_norm(const DenseMatrix& m) {
  double s = 0.0;
  for (double x : m.values()) s += x * x;
  return std::sqrt(s);
}

DenseMatrix entrywise_exp(const DenseMatrix& m) {
  DenseMatrix out(m.rows(), m.cols());
  auto dst = out.values();
  const auto src = m.values();
  for (std::size_t k = 0; k < src.size(); ++k) {
    require(src[k] <= 700.0, "entrywise_exp: entry " + std::to_string(src[k]) + " overflows");
    dst[k] = std::exp(src[k]);
  }
  return out;
}

DenseMatrix upper_triangular_inverse(const DenseMatrix& r) {
  require(r.rows() == r.cols(), "upper_triangular_inverse: matrix is not square");
  const std::size_t n = r.rows();
  DenseMatrix inv(n, n);
  // Back substitution, one column of the inverse at a time.
  for (std::size_t j = 0; j < n; ++j) {
    require(r(j, j) != 0.0, "upper_triangular_inverse: zero pivot");
    inv(j, j) = 1.0 / r(j, j);
    for (std::size_t ii = j; ii-- > 0;) {
      double s = 0.0;
      for (std::size_t k = ii + 1; k <= j; ++k) s += r(ii, k) * inv(k, j);
      inv(ii, j) = -s / r(ii, ii);
    }
  }
  return inv;
}

}  // namespace atsp
