#include "doctest.h"
#include "test_support.hpp"
#include "tnn/densela.hpp"

#include <cmath>

using namespace tnn;
using tnn::testing::jacobi_eigenvalues;
using tnn::testing::jacobi_generalized_eigenvalues;

namespace {

double residual(const Matrix& a, const Matrix& b, const SymEig& eig) {
  const Matrix ay = a * eig.vectors;
  const Matrix by = b * eig.vectors;
  double r = 0.0;
  for (std::size_t i = 0; i < ay.rows(); ++i)
    for (std::size_t j = 0; j < ay.cols(); ++j)
      r = std::max(r, std::abs(ay(i, j) - by(i, j) * eig.values[j]));
  return r;
}

}  // namespace

TEST_CASE("cholesky of identity and a hand-factored 2x2") {
  const Matrix l = cholesky(Matrix::identity(3));
  CHECK(l == Matrix::identity(3));

  Matrix s(2, 2);
  s(0, 0) = 4;
  s(0, 1) = s(1, 0) = 2;
  s(1, 1) = 3;
  const Matrix l2 = cholesky(s);
  CHECK(l2(0, 0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(l2(1, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(l2(0, 1) == 0.0);
  CHECK(l2(1, 1) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
}

TEST_CASE("cholesky reconstructs random SPD matrices") {
  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 20; ++rep) {
    const Matrix s = testing::random_spd(rng, 8);
    const Matrix l = cholesky(s);
    const Matrix back = l * l.transpose();
    CHECK((back - s).max_abs() <= 1e-13 * s.max_abs());
  }
}

TEST_CASE("cholesky reports the failing pivot") {
  Matrix s = Matrix::identity(3);
  s(2, 2) = -1.0;
  try {
    (void)cholesky(s);
    FAIL("expected NotPositiveDefinite");
  } catch (const NotPositiveDefinite& e) {
    CHECK(e.pivot() == 2);
  }
}

TEST_CASE("cholesky_solve solves against several right-hand sides") {
  std::mt19937_64 rng(11);
  const Matrix s = testing::random_spd(rng, 6);
  const Matrix x = testing::random_matrix(rng, 6, 3);
  Matrix rhs = s * x;
  cholesky_solve(cholesky(s), rhs);
  CHECK((rhs - x).max_abs() < 1e-12);
}

TEST_CASE("sym_eig of diagonal and the coupled oscillator matrices") {
  Matrix d(2, 2);
  d(0, 0) = 5;
  d(1, 1) = 7;
  const SymEig e = sym_eig(d);
  CHECK(e.values[0] == 5.0);
  CHECK(e.values[1] == 7.0);
  CHECK(std::abs(std::abs(e.vectors(0, 0)) - 1.0) < 1e-15);

  Matrix c(2, 2);
  c(0, 0) = 0.8851;
  c(0, 1) = c(1, 0) = -0.1382;
  c(1, 1) = 1.1933;
  const SymEig ce = sym_eig(c);
  CHECK(std::abs(ce.values[0] - 0.8322071257) < 1e-9);
  CHECK(std::abs(ce.values[1] - 1.2461928742) < 1e-9);

  const double a5[5][5] = {{1.05886042, 0.01365034, 0.09163945, 0.11975290, 0.05625013},
                           {0.01365034, 1.09613742, 0.10887930, 0.07448974, 0.07407652},
                           {0.09163945, 0.10887930, 1.00935913, 0.05588543, 0.08968956},
                           {0.11975290, 0.07448974, 0.05588543, 1.17627129, 0.06049045},
                           {0.05625013, 0.07407652, 0.08968956, 0.06049045, 0.94969417}};
  Matrix m5(5, 5);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) m5(i, j) = a5[i][j];
  const SymEig e5 = sym_eig(m5);
  const double mu[5] = {0.88021303, 0.90973982, 1.02312382, 1.10243017, 1.37481559};
  for (int i = 0; i < 5; ++i) CHECK(std::abs(e5.values[i] - mu[i]) < 1e-7);
}

TEST_CASE("sym_eig returns an orthogonal diagonalizer") {
  std::mt19937_64 rng(3);
  for (std::size_t n : {1u, 2u, 5u, 16u, 40u}) {
    const Matrix s = testing::random_symmetric(rng, n);
    const SymEig e = sym_eig(s);
    const Matrix qtq = e.vectors.transpose() * e.vectors;
    CHECK((qtq - Matrix::identity(n)).max_abs() <= 1e-12);
    const Matrix d = e.vectors.transpose() * s * e.vectors;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        CHECK(std::abs(d(i, j) - (i == j ? e.values[i] : 0.0)) <= 1e-12 * (1 + s.max_abs()));
    for (std::size_t i = 1; i < n; ++i) CHECK(e.values[i - 1] <= e.values[i]);
  }
}

TEST_CASE("sym_generalized_eig small cases") {
  Matrix a(3, 3);
  a(0, 0) = 3;
  a(1, 1) = 1;
  a(2, 2) = 2;
  const SymEig e = sym_generalized_eig(a, Matrix::identity(3));
  CHECK(e.values == std::vector<double>{1, 2, 3});
  CHECK(std::abs(std::abs(e.vectors(1, 0)) - 1.0) < 1e-15);
  CHECK(std::abs(std::abs(e.vectors(2, 1)) - 1.0) < 1e-15);
  CHECK(std::abs(std::abs(e.vectors(0, 2)) - 1.0) < 1e-15);

  Matrix b2(2, 2);
  b2(0, 0) = b2(1, 1) = 2;
  b2(0, 1) = b2(1, 0) = 1;
  const SymEig e2 = sym_generalized_eig(b2, Matrix::identity(2));
  CHECK(e2.values[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(e2.values[1] == doctest::Approx(3.0).epsilon(1e-14));
  const double r = 1.0 / std::sqrt(2.0);
  CHECK(std::abs(std::abs(e2.vectors(0, 0)) - r) < 1e-14);
  CHECK(std::abs(e2.vectors(0, 0) + e2.vectors(1, 0)) < 1e-14);
  CHECK(std::abs(e2.vectors(0, 1) - e2.vectors(1, 1)) < 1e-14);
}

TEST_CASE("sym_generalized_eig matches the Jacobi oracle on random pencils") {
  std::mt19937_64 rng(2024);
  for (std::size_t k = 1; k <= 8; ++k) {
    const Matrix a = testing::random_symmetric(rng, k);
    const Matrix b = testing::random_spd(rng, k);
    const SymEig e = sym_generalized_eig(a, b);
    CHECK(residual(a, b, e) <= 1e-10 * a.max_abs());
    const Matrix ytby = e.vectors.transpose() * b * e.vectors;
    CHECK((ytby - Matrix::identity(k)).max_abs() < 1e-12);
    const auto oracle = jacobi_generalized_eigenvalues(a, b);
    for (std::size_t i = 0; i < k; ++i)
      CHECK(std::abs(e.values[i] - oracle[i]) <= 1e-10 * std::max(1.0, std::abs(oracle[i])));
  }
}

TEST_CASE("generalized eigenvalues invariant under joint scaling") {
  std::mt19937_64 rng(5);
  const Matrix a = testing::random_symmetric(rng, 6);
  const Matrix b = testing::random_spd(rng, 6);
  const SymEig e1 = sym_generalized_eig(a, b);
  const SymEig e2 = sym_generalized_eig(3.5 * a, 3.5 * b);
  for (std::size_t i = 0; i < 6; ++i) CHECK(std::abs(e1.values[i] - e2.values[i]) <= 1e-12 * (1 + std::abs(e1.values[i])));
}

TEST_CASE("degenerate clusters come back B-orthonormal") {
  // spectrum (1,3,3,3,5) in a random B-geometry
  std::mt19937_64 rng(9);
  const Matrix b = testing::random_spd(rng, 5);
  Matrix d(5, 5);
  const double vals[5] = {1, 3, 3, 3, 5};
  for (int i = 0; i < 5; ++i) d(i, i) = vals[i];
  const Matrix l = cholesky(b);
  const Matrix a = l * d * l.transpose();  // L^{-1} A L^{-T} = diag(1,3,3,3,5)
  const SymEig e = sym_generalized_eig(a, b);
  const Matrix ytby = e.vectors.transpose() * b * e.vectors;
  CHECK((ytby - Matrix::identity(5)).max_abs() < 1e-11);
  CHECK(residual(a, b, e) <= 1e-10 * a.max_abs());
}

TEST_CASE("jacobi oracle agrees with sym_eig") {
  std::mt19937_64 rng(1);
  const Matrix s = testing::random_symmetric(rng, 7);
  const auto ev = jacobi_eigenvalues(s);
  const SymEig e = sym_eig(s);
  for (int i = 0; i < 7; ++i) CHECK(std::abs(ev[i] - e.values[i]) < 1e-12);
}
