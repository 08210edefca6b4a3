#include "tnn/densela.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace tnn {

Matrix cholesky(const Matrix& s) {
  const std::size_t n = s.rows();
  if (s.cols() != n) throw std::invalid_argument("cholesky: matrix not square");
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = s(j, j);
    for (std::size_t t = 0; t < j; ++t) d -= l(j, t) * l(j, t);
    if (!(d > 0.0)) throw NotPositiveDefinite(j);
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double v = s(i, j);
      for (std::size_t t = 0; t < j; ++t) v -= l(i, t) * l(j, t);
      l(i, j) = v / ljj;
    }
  }
  return l;
}

void lower_solve(const Matrix& l, Matrix& rhs) {
  const std::size_t n = l.rows();
  for (std::size_t c = 0; c < rhs.cols(); ++c)
    for (std::size_t i = 0; i < n; ++i) {
      double v = rhs(i, c);
      for (std::size_t t = 0; t < i; ++t) v -= l(i, t) * rhs(t, c);
      rhs(i, c) = v / l(i, i);
    }
}

void lower_transpose_solve(const Matrix& l, Matrix& rhs) {
  const std::size_t n = l.rows();
  for (std::size_t c = 0; c < rhs.cols(); ++c)
    for (std::size_t ii = n; ii-- > 0;) {
      double v = rhs(ii, c);
      for (std::size_t t = ii + 1; t < n; ++t) v -= l(t, ii) * rhs(t, c);
      rhs(ii, c) = v / l(ii, ii);
    }
}

void cholesky_solve(const Matrix& l, Matrix& rhs) {
  if (rhs.rows() != l.rows()) throw std::invalid_argument("cholesky_solve: shape mismatch");
  lower_solve(l, rhs);
  lower_transpose_solve(l, rhs);
}

namespace {

// Householder reduction to tridiagonal form (EISPACK tred2). On return `v`
// holds the accumulated orthogonal transformation, d the diagonal and e the
// sub-diagonal in e[1..n-1].
void tridiagonalize(Matrix& v, std::vector<double>& d, std::vector<double>& e) {
  const int n = static_cast<int>(v.rows());
  d.assign(n, 0.0);
  e.assign(n, 0.0);
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
}

// Implicit-shift QL on the tridiagonal (d, e) with e[1..n-1] the sub-diagonal;
// rotations are accumulated into the columns of v.
void tridiagonal_ql(Matrix& v, std::vector<double>& d, std::vector<double>& e) {
  const int n = static_cast<int>(d.size());
  for (int i = 1; i < n; ++i) e[i - 1] = e[i];
  if (n > 0) e[n - 1] = 0.0;

  double f = 0.0;
  double tst1 = 0.0;
  const double eps = std::ldexp(1.0, -52);
  for (int l = 0; l < n; ++l) {
    tst1 = std::max(tst1, std::abs(d[l]) + std::abs(e[l]));
    int m = l;
    while (m < n) {
      if (std::abs(e[m]) <= eps * tst1) break;
      ++m;
    }
    if (m > l) {
      int iter = 0;
      do {
        if (++iter > 200) throw std::runtime_error("tridiagonal QL did not converge");
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

        p = d[m];
        double c = 1.0, c2 = 1.0, c3 = 1.0;
        const double el1 = e[l + 1];
        double s = 0.0, s2 = 0.0;
        for (int i = m - 1; i >= l; --i) {
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
          for (int k = 0; k < static_cast<int>(v.rows()); ++k) {
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
}

SymEig sorted(std::vector<double> d, const Matrix& v) {
  const std::size_t n = d.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return d[a] < d[b]; });
  SymEig out;
  out.values.resize(n);
  out.vectors = Matrix(v.rows(), n);
  for (std::size_t c = 0; c < n; ++c) {
    out.values[c] = d[order[c]];
    for (std::size_t r = 0; r < v.rows(); ++r) out.vectors(r, c) = v(r, order[c]);
  }
  return out;
}

}  // namespace

SymEig sym_tridiagonal_eig(std::vector<double> diag, std::vector<double> off) {
  const std::size_t n = diag.size();
  if (n == 0) return {};
  if (off.size() + 1 != n) throw std::invalid_argument("sym_tridiagonal_eig: off-diagonal length");
  Matrix v = Matrix::identity(n);
  // tridiagonal_ql expects the sub-diagonal in e[1..n-1]
  std::vector<double> e(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) e[i] = off[i - 1];
  tridiagonal_ql(v, diag, e);
  return sorted(std::move(diag), v);
}

SymEig sym_eig(const Matrix& s) {
  const std::size_t n = s.rows();
  if (s.cols() != n) throw std::invalid_argument("sym_eig: matrix not square");
  if (n == 0) return {};
  Matrix v(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) v(i, j) = 0.5 * (s(i, j) + s(j, i));
  std::vector<double> d, e;
  tridiagonalize(v, d, e);
  tridiagonal_ql(v, d, e);
  return sorted(std::move(d), v);
}

SymEig sym_generalized_eig(const Matrix& a, const Matrix& b) {
  const std::size_t n = a.rows();
  if (a.cols() != n || b.rows() != n || b.cols() != n)
    throw std::invalid_argument("sym_generalized_eig: shape mismatch");
  const Matrix l = cholesky(b);

  // C = L^{-1} A L^{-T}
  Matrix c = a;
  lower_solve(l, c);
  c = c.transpose();
  lower_solve(l, c);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) c(i, j) = c(j, i) = 0.5 * (c(i, j) + c(j, i));

  SymEig eig = sym_eig(c);
  lower_transpose_solve(l, eig.vectors);

  // B-orthonormalize inside clusters of repeated eigenvalues (two passes of
  // modified Gram-Schmidt), then normalize every column.
  const double scale = std::max(a.max_abs(), 1e-300);
  auto b_dot = [&](std::size_t x, std::size_t y) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double bi = 0.0;
      for (std::size_t j = 0; j < n; ++j) bi += b(i, j) * eig.vectors(j, y);
      sum += eig.vectors(i, x) * bi;
    }
    return sum;
  };
  std::size_t start = 0;
  while (start < n) {
    std::size_t end = start + 1;
    while (end < n && eig.values[end] - eig.values[end - 1] < 1e-9 * scale) ++end;
    for (int pass = 0; pass < 2; ++pass)
      for (std::size_t col = start; col < end; ++col) {
        for (std::size_t prev = start; prev < col; ++prev) {
          const double proj = b_dot(prev, col);
          for (std::size_t i = 0; i < n; ++i) eig.vectors(i, col) -= proj * eig.vectors(i, prev);
        }
        const double nrm = std::sqrt(b_dot(col, col));
        for (std::size_t i = 0; i < n; ++i) eig.vectors(i, col) /= nrm;
      }
    start = end;
  }
  return eig;
}

}  // namespace tnn
