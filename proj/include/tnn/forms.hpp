#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "tnn/matrix.hpp"

namespace tnn {

/// One-dimensional weight function with its derivative. Two weights with the
/// same name are treated as the same function (kernels are deduplicated by name).
struct Weight {
  std::string name;
  std::function<double(double)> value;
  std::function<double(double)> derivative;

  static Weight one();
  static Weight monomial(int power);  // x^power
  static Weight sin();                // sin(x)
  static Weight inv_sin();            // 1/sin(x)
  static Weight constant(double c);
};

/// w(x) D^left u D^right v, derivative orders 0 or 1.
struct Kernel1D {
  Weight weight;
  int deriv_left = 0;
  int deriv_right = 0;

  std::string key() const;
};

struct SeparableTerm {
  double coefficient = 1.0;
  std::vector<Kernel1D> kernels;  // one per dimension
};

/// sum_t coefficient_t prod_i int w_{t,i} D^{l} u D^{r} v dx_i, in physical coordinates.
struct SeparableBilinearForm {
  std::vector<SeparableTerm> terms;

  std::size_t dims() const { return terms.empty() ? 0 : terms.front().kernels.size(); }
  /// Throws unless every term is self-symmetric or has its transpose with an
  /// equal coefficient, and all terms have the same dimension count.
  void validate_symmetric() const;
  /// For a mass form: a single term with zero derivative orders everywhere.
  bool is_mass_form() const;
};

/// One separable potential term coefficient * prod_i factor_i(x_i).
struct PotentialTerm {
  double coefficient = 1.0;
  std::vector<Weight> factors;
};

struct FormPair {
  SeparableBilinearForm a;  // stiffness
  SeparableBilinearForm b;  // mass
};

/// a(u,v) = kinetic * sum_s int du/dx_s dv/dx_s + int V u v, b(u,v) = int u v.
FormPair laplace_plus_potential(std::size_t dims, double kinetic_coeff,
                                const std::vector<PotentialTerm>& potential);

/// Separable expansion of V(x) = 1/2 x^T A x: x_i^2 terms with a_ii/2 and
/// x_i x_j terms (i < j) with a_ij, d(d+1)/2 terms in total.
std::vector<PotentialTerm> quadratic_potential(const Matrix& a);

/// The gradient inner product int grad u . grad v dx in Cartesian coordinates.
SeparableBilinearForm gradient_form(std::size_t dims);

/// Hydrogen Hamiltonian in (r, theta, phi) with the r^2 sin(theta) Jacobian folded in.
FormPair hydrogen_spherical();

/// int grad u . grad v r^2 sin(theta) in spherical coordinates.
SeparableBilinearForm spherical_gradient_form();

}  // namespace tnn
