#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "tnn/matrix.hpp"

namespace tnn {

/// H_n(x) by the three-term recurrence.
double hermite_physicists(int n, double x);

/// f(y) = poly * exp(exponent), f'(y) = dpoly * exp(exponent). Keeping the
/// exponent apart lets callers divide by an envelope without overflow.
struct ScaledValue {
  double poly = 0.0;
  double dpoly = 0.0;
  double exponent = 0.0;

  double value() const;
  double deriv() const;
};

/// L2-normalized 1D oscillator factor H_n(mu^{1/4} y) e^{-sqrt(mu) y^2/2}.
ScaledValue oscillator_factor(int n, double mu, double y);

struct OscillatorState {
  std::vector<int> n;
  double energy = 0.0;
  std::size_t group = 0;  // index of the degenerate energy level

  std::string label() const;
};

/// H = -1/2 Laplacian + 1/2 x^T A x. States are exact in y = Q^T x.
struct OscillatorReference {
  Matrix a;
  Matrix q;
  std::vector<double> mu;
  std::vector<OscillatorState> states;

  bool rotated() const;
  /// Exact state `s` and its x-gradient at x.
  double value(std::size_t s, const std::vector<double>& x, std::vector<double>* grad = nullptr) const;
  /// Same, split as poly * exp(exponent) and grad_poly * exp(exponent).
  ScaledValue scaled(std::size_t s, const std::vector<double>& x, std::vector<double>* grad_poly) const;
};

/// Lowest k states, ascending, lexicographic among equal energies. A is
/// diagonal -> Q = I exactly.
OscillatorReference oscillator_states(const Matrix& a, std::size_t k);

struct HydrogenState {
  int n = 1, l = 0, m = 0;
  double energy = -0.5;
  std::size_t group = 0;

  std::string label() const;
};

/// -1/(2n^2) with multiplicity n^2, n = 1..n_max, flattened ascending.
std::vector<double> hydrogen_energies(int n_max);

/// The first `count` hydrogen states (n, l, m) in energy order.
std::vector<HydrogenState> hydrogen_states(std::size_t count);

}  // namespace tnn
