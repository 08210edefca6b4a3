#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "tnn/matrix.hpp"

namespace tnn {

/// Raised when a Cholesky factorization meets a non-positive pivot.
class NotPositiveDefinite : public std::runtime_error {
 public:
  explicit NotPositiveDefinite(std::size_t pivot)
      : std::runtime_error("matrix not positive definite at pivot " + std::to_string(pivot)),
        pivot_(pivot) {}
  std::size_t pivot() const { return pivot_; }

 private:
  std::size_t pivot_;
};

/// Lower-triangular L with S = L L^T. Only the lower triangle of S is read.
Matrix cholesky(const Matrix& s);

/// Solves (L L^T) X = rhs in place, column by column.
void cholesky_solve(const Matrix& l, Matrix& rhs);

/// Solves L X = rhs in place (forward substitution).
void lower_solve(const Matrix& l, Matrix& rhs);

/// Solves L^T X = rhs in place (back substitution).
void lower_transpose_solve(const Matrix& l, Matrix& rhs);

struct SymEig {
  std::vector<double> values;  // ascending
  Matrix vectors;              // columns are eigenvectors
};

/// Eigen-decomposition of a symmetric tridiagonal matrix by implicit-shift QL.
/// `off` has length n-1 (sub-diagonal). Eigenvectors are the columns of the result.
SymEig sym_tridiagonal_eig(std::vector<double> diag, std::vector<double> off);

/// Q^T S Q = diag(mu) with Q orthogonal; Householder reduction then implicit QL.
SymEig sym_eig(const Matrix& s);

/// A Y = B Y diag(lambda), Y^T B Y = I, lambda ascending.
/// Eigenvectors of numerically repeated eigenvalues are re-orthonormalized in
/// the B inner product.
SymEig sym_generalized_eig(const Matrix& a, const Matrix& b);

}  // namespace tnn
