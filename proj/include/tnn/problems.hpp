#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tnn/forms.hpp"
#include "tnn/matrix.hpp"
#include "tnn/metrics.hpp"
#include "tnn/model.hpp"

namespace tnn {

/// The 2D coupled oscillator coefficients, used as exact.
Matrix coupled_oscillator_2d();
/// The 5D coupled oscillator matrix.
Matrix coupled_oscillator_5d();

struct ExactState {
  std::string label;
  double energy = 0.0;
  std::size_t group = 0;
};

/// An eigenvalue problem with its quadrature setup and known spectrum.
struct Problem {
  std::string name;
  std::vector<DimensionSpec> dims;
  FormPair forms;
  SeparableBilinearForm gradient;  // H1 seminorm inner product
  std::vector<ExactState> exact;   // lowest k states, empty if unknown
  /// Exact eigenfunction of state s on the given grids, if available.
  std::function<std::optional<GridFunction>(std::size_t, const std::vector<DimGrid>&)> exact_function;
};

/// Harmonic oscillator -1/2 Laplacian + 1/2 x^T A x with Hermite rules of n points.
Problem oscillator_problem(const std::string& name, const Matrix& a, std::size_t k, int n);

/// -Laplacian on (0,1)^d with Dirichlet boundary, composite Legendre (m, n).
Problem box_laplace_problem(std::size_t d, std::size_t k, int m, int n);

/// Hydrogen in (r, theta, phi): Laguerre(n_r), Legendre (m_theta, n_ang) and (m_phi, n_ang).
Problem hydrogen_problem(std::size_t k, int n_r = 99, int m_theta = 64, int m_phi = 128, int n_ang = 16);

/// Lowest k states of -Laplacian on (0,1)^d: pi^2 sum n_i^2, n_i >= 1.
std::vector<OscillatorState> box_states(std::size_t d, std::size_t k);

}  // namespace tnn
