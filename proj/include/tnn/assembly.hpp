#pragma once

#include <cstddef>
#include <vector>

#include "tnn/forms.hpp"
#include "tnn/matrix.hpp"
#include "tnn/model.hpp"

namespace tnn {

/// Stiffness and mass matrices of the k networks.
struct AssembledPair {
  Matrix a;
  Matrix b;
};

/// 1D quadrature sums sum_q omega_q w(x_q) D^l phi_hat_{i,j,m} D^r phi_hat_{i,l,n}
/// for every network pair m <= n, dimension i and distinct kernel of that dimension.
class FactorTable {
 public:
  FactorTable() = default;
  FactorTable(std::size_t k, std::size_t d, std::size_t max_kernels)
      : k_(k), d_(d), u_(max_kernels), blocks_(k * k * d * max_kernels) {}

  Matrix& at(std::size_t m, std::size_t n, std::size_t i, std::size_t u) {
    return blocks_[((m * k_ + n) * d_ + i) * u_ + u];
  }
  const Matrix& at(std::size_t m, std::size_t n, std::size_t i, std::size_t u) const {
    return blocks_[((m * k_ + n) * d_ + i) * u_ + u];
  }

 private:
  std::size_t k_ = 0, d_ = 0, u_ = 0;
  std::vector<Matrix> blocks_;
};

/// Work counters: factor entries are p_m p_n Q multiply-adds, product entries
/// are p_m p_n per dimension per term.
struct AssemblyStats {
  std::size_t factor_ops = 0;
  std::size_t product_ops = 0;
};

/// Assembles k x k Gram matrices of several separable forms from the low-rank
/// splitting of each TNN. One of the forms is the mass form; its weights
/// define the component normalization.
class Assembler {
 public:
  Assembler(std::vector<DimensionSpec> dims, std::vector<SeparableBilinearForm> forms,
            std::size_t mass_form_index);

  struct State {
    std::vector<DimGrid> grids;
    std::vector<std::vector<std::vector<double>>> kq;   // [dim][kernel][q]
    std::vector<std::vector<ComponentValues>> comps;    // [network][dim]
    FactorTable table;
    std::vector<Matrix> matrices;                       // one per form
    AssemblyStats stats;
  };

  State forward(const TnnModel& model) const;

  /// Gradient of sum_f sum_{mn} adjoints[f](m,n) * matrices[f](m,n) w.r.t. the
  /// flat parameter vector. Adjoints are symmetrized implicitly.
  std::vector<double> backward(const TnnModel& model, const State& state,
                               const std::vector<Matrix>& adjoints) const;

  const std::vector<DimensionSpec>& dims() const { return dims_; }
  const std::vector<SeparableBilinearForm>& forms() const { return forms_; }
  std::size_t mass_form_index() const { return mass_form_; }
  const std::vector<Kernel1D>& kernels(std::size_t dim) const { return kernels_[dim]; }
  std::size_t mass_kernel(std::size_t dim) const { return mass_kernel_[dim]; }
  /// Kernel index of term t of form f in dimension i.
  std::size_t term_kernel(std::size_t f, std::size_t t, std::size_t i) const {
    return term_kernels_[f][t][i];
  }
  const Discretization& discretization() const { return disc_; }

 private:
  std::vector<DimensionSpec> dims_;
  std::vector<SeparableBilinearForm> forms_;
  std::size_t mass_form_;
  Discretization disc_;
  std::vector<std::vector<Kernel1D>> kernels_;
  std::vector<std::size_t> mass_kernel_;
  std::vector<std::vector<std::vector<std::size_t>>> term_kernels_;
  std::size_t max_kernels_ = 0;
};

class AssemblyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A and B of (a_form, b_form) for the model.
AssembledPair assemble(const TnnModel& model, const FormPair& forms);

/// d/dTheta of sum(G_A o A + G_B o B).
std::vector<double> assemble_gradient(const TnnModel& model, const FormPair& forms,
                                      const Matrix& grad_a, const Matrix& grad_b);

}  // namespace tnn
