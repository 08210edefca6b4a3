#include "tnn/loss.hpp"

#include <cmath>
#include <cstdio>

#include "tnn/densela.hpp"

namespace tnn {

JitteredFactor factor_mass(const Matrix& b) {
  const std::size_t k = b.rows();
  if (b.cols() != k) throw std::invalid_argument("factor_mass: B is not square");
  try {
    return {cholesky(b), 0.0};
  } catch (const NotPositiveDefinite&) {
  }
  double tr = 0.0;
  for (std::size_t i = 0; i < k; ++i) tr += b(i, i);
  const double scale = tr / static_cast<double>(k);
  for (int e = -12; e <= -6; ++e) {
    const double delta = std::pow(10.0, e);
    Matrix bj = b;
    for (std::size_t i = 0; i < k; ++i) bj(i, i) += delta * scale;
    try {
      return {cholesky(bj), delta};
    } catch (const NotPositiveDefinite&) {
    }
  }
  char msg[160];
  std::snprintf(msg, sizeof msg,
                "mass matrix not positive definite after jitter up to 1e-6 (trace %.6g, k = %zu)", tr, k);
  throw LossError(msg, tr, 1e-6);
}

LossEvaluation evaluate_loss(const AssembledPair& pair) {
  const std::size_t k = pair.a.rows();
  if (pair.a.cols() != k || pair.b.rows() != k || pair.b.cols() != k)
    throw std::invalid_argument("loss: A and B must be k x k");
  const JitteredFactor f = factor_mass(pair.b);

  Matrix c = pair.a;  // B^{-1} A
  cholesky_solve(f.l, c);
  Matrix binv = Matrix::identity(k);
  cholesky_solve(f.l, binv);

  LossEvaluation out;
  out.jitter = f.delta;
  for (std::size_t i = 0; i < k; ++i) out.value += c(i, i);

  // B^{-1} A B^{-1} = C B^{-1}, symmetrized
  const Matrix gb = c * binv;
  out.adjoints.grad_b = Matrix(k, k);
  out.adjoints.grad_a = Matrix(k, k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      out.adjoints.grad_b(i, j) = -0.5 * (gb(i, j) + gb(j, i));
      out.adjoints.grad_a(i, j) = 0.5 * (binv(i, j) + binv(j, i));
    }
  return out;
}

double trace_loss(const AssembledPair& pair) {
  const std::size_t k = pair.a.rows();
  if (pair.a.cols() != k || pair.b.rows() != k || pair.b.cols() != k)
    throw std::invalid_argument("loss: A and B must be k x k");
  Matrix c = pair.a;
  cholesky_solve(factor_mass(pair.b).l, c);
  double t = 0.0;
  for (std::size_t i = 0; i < k; ++i) t += c(i, i);
  return t;
}

LossAdjoints loss_adjoints(const AssembledPair& pair) { return evaluate_loss(pair).adjoints; }

}  // namespace tnn
