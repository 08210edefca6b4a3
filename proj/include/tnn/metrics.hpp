#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "tnn/assembly.hpp"
#include "tnn/forms.hpp"
#include "tnn/matrix.hpp"
#include "tnn/model.hpp"
#include "tnn/reference.hpp"

namespace tnn {

/// |approx_l - exact_l| / |exact_l|, paired in ascending order.
std::vector<double> eigenvalue_errors(const std::vector<double>& approx,
                                      const std::vector<double>& exact);

/// A function sampled on the tensor grid of DimGrids, in reduced form (value
/// and derivatives divided by the product of the envelopes). Either a sum of
/// rank-one terms or a dense array over all grid points, last dimension fastest.
struct GridFunction {
  std::vector<double> coeffs;                                // per term
  std::vector<std::vector<std::vector<double>>> values;      // [term][dim][q]
  std::vector<std::vector<std::vector<double>>> derivs;      // [term][dim][q]
  std::vector<double> dense;
  std::vector<std::vector<double>> dense_partials;           // [dim][point]

  bool is_dense() const { return !dense.empty(); }
  GridFunction scaled(double s) const;
};

/// Separable function prod_i f_i(x_i); each factor is returned as
/// poly * exp(exponent) so the envelope can be divided out safely.
GridFunction separable_function(const std::vector<DimGrid>& grids,
                                const std::vector<std::function<ScaledValue(double)>>& factors);

/// Exact oscillator state on the grid. Rotated references are only
/// supported up to d = 2 (dense on the full grid).
GridFunction oscillator_function(const OscillatorReference& ref, std::size_t state,
                                 const std::vector<DimGrid>& grids);

/// e^{-r} in (r, theta, phi).
GridFunction hydrogen_ground_function(const std::vector<DimGrid>& grids);

/// u_l = sum_m y(m, l) Psi_m from an assembled state.
std::vector<GridFunction> ritz_functions(const TnnModel& model, const Assembler::State& state,
                                         const Matrix& y);

enum class Norm { L2, H1 };

/// Inner products on a fixed tensor grid. The L2 product is the mass form, the
/// H1 seminorm product is the gradient form, both in physical coordinates.
class MetricSpace {
 public:
  MetricSpace(std::vector<DimGrid> grids, SeparableBilinearForm mass,
              SeparableBilinearForm gradient);

  double inner(const GridFunction& f, const GridFunction& g, Norm norm) const;
  GridFunction densify(const GridFunction& f) const;
  std::size_t grid_points() const;
  const std::vector<DimGrid>& grids() const { return grids_; }

 private:
  const SeparableBilinearForm& form(Norm n) const { return n == Norm::L2 ? mass_ : gradient_; }
  const std::vector<std::vector<std::vector<double>>>& kq(Norm n) const {
    return n == Norm::L2 ? mass_kq_ : gradient_kq_;
  }
  double separable_inner(const GridFunction& f, const GridFunction& g, Norm norm) const;
  double dense_inner(const GridFunction& f, const GridFunction& g, Norm norm) const;

  std::vector<DimGrid> grids_;
  SeparableBilinearForm mass_, gradient_;
  std::vector<std::vector<std::vector<double>>> mass_kq_, gradient_kq_;  // [term][dim][q]
};

class SingularGram : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ProjectionErrors {
  double l2 = 0.0;
  double h1 = 0.0;
};

/// Precomputed Gram matrices of the eigenspace, one per norm.
struct ProjectionGrams {
  Matrix l2;
  Matrix h1;
};

/// Coefficients of the orthogonal projection of u onto span(eigenspace).
std::vector<double> projection_coefficients(const MetricSpace& space, const GridFunction& u,
                                            const std::vector<GridFunction>& eigenspace, Norm norm,
                                            const Matrix* gram = nullptr);

/// ||u - P u|| / ||u|| in each norm, P the projection in that same norm. The
/// residual is summed pointwise when the grid has at most `dense_limit` points.
ProjectionErrors projection_errors(const MetricSpace& space, const GridFunction& u,
                                   const std::vector<GridFunction>& eigenspace,
                                   const ProjectionGrams* grams = nullptr,
                                   std::size_t dense_limit = 2'000'000);

/// Errors for every exact state against the approximate functions paired to
/// its degenerate level. `exact[s]` may be null (no error computed).
/// `grams` covers all approximate functions and is sliced per level.
std::vector<std::optional<ProjectionErrors>> grouped_projection_errors(
    const MetricSpace& space, const std::vector<const GridFunction*>& exact,
    const std::vector<std::size_t>& groups, const std::vector<GridFunction>& approx,
    const ProjectionGrams* grams = nullptr);

}  // namespace tnn
