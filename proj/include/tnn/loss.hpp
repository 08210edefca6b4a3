#pragma once

#include <stdexcept>
#include <string>

#include "tnn/assembly.hpp"
#include "tnn/matrix.hpp"

namespace tnn {

/// Cholesky of B failed even after the largest jitter.
class LossError : public std::runtime_error {
 public:
  LossError(const std::string& what, double trace_b, double max_jitter)
      : std::runtime_error(what), trace_b(trace_b), max_jitter(max_jitter) {}
  double trace_b;
  double max_jitter;
};

/// Cholesky factor of B, possibly of B + delta * tr(B)/k * I.
struct JitteredFactor {
  Matrix l;
  double delta = 0.0;  // 0 when no jitter was needed
};

/// Tries B as is, then delta = 1e-12, 1e-11, ..., 1e-6.
JitteredFactor factor_mass(const Matrix& b);

/// trace(B^{-1} A) via Cholesky solves.
double trace_loss(const AssembledPair& pair);

struct LossAdjoints {
  Matrix grad_a;  // B^{-1}
  Matrix grad_b;  // -B^{-1} A B^{-1}
};

LossAdjoints loss_adjoints(const AssembledPair& pair);

/// Value and adjoints from one factorization.
struct LossEvaluation {
  double value = 0.0;
  LossAdjoints adjoints;
  double jitter = 0.0;
};

LossEvaluation evaluate_loss(const AssembledPair& pair);

}  // namespace tnn
