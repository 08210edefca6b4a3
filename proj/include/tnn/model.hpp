#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tnn/forms.hpp"
#include "tnn/matrix.hpp"
#include "tnn/quadrature.hpp"
#include "tnn/subnet.hpp"

namespace tnn {

enum class DimensionKind { BoundedDirichlet, BoundedNatural, WholeLine, HalfLine, PeriodicAngle };

std::string to_string(DimensionKind k);
DimensionKind dimension_kind_from_string(const std::string& name);

/// Domain of one coordinate together with its quadrature parameters.
///  - BoundedDirichlet(a,b): phi(x) (x-a)(b-x)/((b-a)/2)^2, composite Legendre
///  - BoundedNatural(a,b):   phi(x), composite Legendre
///  - WholeLine:             e^{-beta^2 x^2/2} phi(beta x), Gauss-Hermite in z = beta x
///  - HalfLine (0, inf):     e^{-beta x/2} phi(beta x), Gauss-Laguerre in z = beta x
///  - PeriodicAngle(0,P):    phi(x) sin(pi x/P) + gamma_j, composite Legendre
struct DimensionSpec {
  DimensionKind kind = DimensionKind::BoundedNatural;
  double a = 0.0;
  double b = 1.0;
  int subintervals = 1;  // M (Legendre kinds only)
  int points = 16;       // N

  static DimensionSpec dirichlet(double a, double b, int m, int n);
  static DimensionSpec natural(double a, double b, int m, int n);
  static DimensionSpec whole_line(int n);
  static DimensionSpec half_line(int n);
  static DimensionSpec periodic(double period, int m, int n);

  bool has_scale() const {
    return kind == DimensionKind::WholeLine || kind == DimensionKind::HalfLine;
  }
  bool has_shift() const { return kind == DimensionKind::PeriodicAngle; }
  void validate() const;
  std::shared_ptr<const QuadratureRule> rule() const;

  friend bool operator==(const DimensionSpec&, const DimensionSpec&) = default;
};

struct NetworkArch {
  std::size_t rank = 1;  // p
  std::size_t depth = 3;
  std::size_t width = 20;
  Activation activation = Activation::Sin;

  friend bool operator==(const NetworkArch&, const NetworkArch&) = default;
};

/// One TNN: coefficients c_j, one subnetwork per dimension, and the shifts
/// gamma_j for periodic dimensions (empty elsewhere).
struct Network {
  NetworkArch arch;
  std::vector<double> coeffs;
  std::vector<SubnetParams> subnets;
  std::vector<std::vector<double>> shifts;
};

/// k TNNs over shared dimension specs. The envelope scale beta of an
/// unbounded dimension is shared by all k networks and stored as log(beta).
struct TnnModel {
  std::vector<DimensionSpec> dims;
  std::vector<double> log_beta;  // one per dimension, unused for bounded kinds
  std::vector<Network> nets;
  std::uint64_t seed = 0;

  std::size_t k() const { return nets.size(); }
  std::size_t d() const { return dims.size(); }
  double beta(std::size_t i) const;
};

TnnModel make_model(const std::vector<DimensionSpec>& dims, const std::vector<NetworkArch>& archs,
                    std::uint64_t seed, double beta_init = 1.0);

/// Offsets of every parameter block in the flat vector. Layout: log beta of
/// each scaled dimension, then per network: coefficients, then per
/// dimension the subnetwork (weights then bias per layer) and its shifts.
struct ParamLayout {
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> log_beta;                 // per dim, npos if none
  std::vector<std::size_t> coeffs;                   // per network
  std::vector<std::vector<std::size_t>> subnet;      // [network][dim]
  std::vector<std::vector<std::size_t>> shifts;      // [network][dim], npos if none
  std::size_t total = 0;
};

ParamLayout param_layout(const TnnModel& model);
std::vector<double> flatten_params(const TnnModel& model);
void unflatten_params(TnnModel& model, std::span<const double> flat);

/// Per-dimension quadrature data at the current beta. Integrals of products
/// of two components are sum_q omega_q w(x_q) u(q) v(q), where u, v are the
/// "reduced" values returned by component_values (physical value divided by
/// envelope_q).
struct DimGrid {
  std::vector<double> eval_points;  // where the subnetwork is evaluated (x or z)
  std::vector<double> x;            // physical coordinates
  std::vector<double> omega;        // physical quadrature weights over envelope^2
  std::vector<double> envelope;     // e^{-z^2/2}, e^{-z/2} or 1
  double beta = 1.0;

  std::size_t size() const { return x.size(); }
};

DimGrid make_grid(const DimensionSpec& spec, const QuadratureRule& rule, double beta);

/// Normalized components phi_hat_{i,j,l} of one (network, dimension) pair in
/// reduced form, p x Q, plus what the adjoint pass needs.
struct ComponentValues {
  Matrix values;  // phi_hat / envelope
  Matrix derivs;  // d phi_hat/dx / envelope
  std::vector<double> norms;
  Matrix raw;
  Matrix raw_derivs;
  BatchEval net;
  SubnetTape tape;
};

class DegenerateComponent : public std::runtime_error {
 public:
  DegenerateComponent(std::size_t network, std::size_t dim, std::size_t component);
  std::size_t network, dim, component;
};

/// `mass_kq` holds omega_q * w_mass(x_q) for this dimension; the L2 norm of
/// each component is taken in that measure.
ComponentValues component_values(const TnnModel& model, std::size_t network, std::size_t dim,
                                 const DimGrid& grid, std::span<const double> mass_kq);

/// Adjoint of component_values. Given adjoints of `values`/`derivs`, adds
/// into the subnet and shift gradients, returns the beta adjoint, and adds
/// the adjoint of mass_kq into `mass_kq_bar`.
double component_backward(const TnnModel& model, std::size_t network, std::size_t dim,
                          const DimGrid& grid, std::span<const double> mass_kq,
                          const ComponentValues& cv, const Matrix& values_bar,
                          const Matrix& derivs_bar, std::span<double> subnet_grad,
                          std::span<double> shift_grad, std::span<double> mass_kq_bar);

/// Rules and per-dimension mass weights needed to normalize components.
struct Discretization {
  std::vector<std::shared_ptr<const QuadratureRule>> rules;
  std::vector<Weight> mass_weights;

  static Discretization create(const std::vector<DimensionSpec>& dims,
                               const SeparableBilinearForm& mass_form);
};

/// Psi_l(x) at one point (inspection only; training uses the quadrature path).
double evaluate_point(const TnnModel& model, const Discretization& disc, std::size_t network,
                      std::span<const double> x);

}  // namespace tnn
