#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tnn/matrix.hpp"

namespace tnn {

enum class Activation { Sin, Tanh, Identity };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weight;  // out x in, row-major
  std::vector<double> bias;    // out
};

/// Fully connected network R -> R^p. Every layer but the last applies the
/// activation; the output layer is affine.
struct SubnetParams {
  std::vector<DenseLayer> layers;
  Activation activation = Activation::Sin;

  std::size_t output_dim() const { return layers.empty() ? 0 : layers.back().out; }
  std::size_t parameter_count() const;

  /// Appends weights then bias of every layer, in layer order.
  void flatten_into(std::vector<double>& out) const;
  /// Reads the same layout back; returns the number of values consumed.
  std::size_t unflatten_from(std::span<const double> in);
};

/// `depth` hidden layers of `width` neurons. Weights are Glorot-uniform;
/// hidden biases are uniform in [-pi, pi] for sine (phase diversity) and in
/// [-1, 1] otherwise; the output bias starts at zero.
SubnetParams make_subnet(std::size_t depth, std::size_t width, std::size_t p, Activation act,
                         std::mt19937_64& rng);

/// Component values and input derivatives, p x Q.
struct BatchEval {
  Matrix values;
  Matrix input_derivs;
};

/// Intermediates kept by forward_batch for a subsequent backprop.
struct SubnetTape {
  std::vector<Matrix> inputs;         // layer inputs h (in x Q)
  std::vector<Matrix> input_derivs;   // dh/dx
  std::vector<Matrix> pre;            // pre-activations a
  std::vector<Matrix> pre_derivs;     // da/dx
};

class SubnetOverflow : public std::runtime_error {
 public:
  SubnetOverflow(std::size_t node_index, const std::string& what)
      : std::runtime_error(what), node_index_(node_index) {}
  std::size_t node_index() const { return node_index_; }

 private:
  std::size_t node_index_;
};

/// Evaluates phi_j(x_q) and phi_j'(x_q) by forward-mode differentiation in x.
BatchEval forward_batch(const SubnetParams& params, std::span<const double> nodes,
                        SubnetTape* tape = nullptr);

/// Gradient w.r.t. all parameters (flatten_into layout) of
///   sum_{j,q} adj_values(j,q) phi_j(x_q) + adj_derivs(j,q) phi_j'(x_q).
/// Reuses `tape` when given, otherwise re-runs the forward pass.
std::vector<double> backprop(const SubnetParams& params, std::span<const double> nodes,
                             const Matrix& adj_values, const Matrix& adj_derivs,
                             const SubnetTape* tape = nullptr);

/// Accumulating variant: adds the gradient into `grad` (length parameter_count()).
void backprop_accumulate(const SubnetParams& params, std::span<const double> nodes,
                         const Matrix& adj_values, const Matrix& adj_derivs,
                         const SubnetTape* tape, std::span<double> grad);

}  // namespace tnn
