#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tnn {

class NonFiniteGradient : public std::runtime_error {
 public:
  explicit NonFiniteGradient(std::size_t index)
      : std::runtime_error("non-finite gradient entry at index " + std::to_string(index)),
        index(index) {}
  std::size_t index;
};

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamOptions options;
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t t = 0;

  AdamState() = default;
  AdamState(std::size_t n, AdamOptions opt) : options(opt), m(n, 0.0), v(n, 0.0) {}
};

/// One bias-corrected Adam update of `params` in place.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grad);

/// Returns f(x) and writes the gradient into `grad` (already sized).
/// May throw; the line search treats a throwing trial like a non-finite one.
using Objective = std::function<double(std::span<const double> x, std::span<double> grad)>;

struct LbfgsOptions {
  std::size_t history = 20;
  std::size_t max_iters = 100;
  double c1 = 1e-4;
  double c2 = 0.9;
  int max_trials = 25;
  double grad_tol = 1e-10;
};

enum class LbfgsStatus { Converged, MaxIterations, LineSearchFailed };

std::string to_string(LbfgsStatus s);

/// One accepted step, enough to assert the strong Wolfe conditions.
struct LbfgsIteration {
  std::size_t iteration = 0;
  double alpha = 0.0;
  double f_old = 0.0;
  double f_new = 0.0;
  double slope_old = 0.0;  // g_old . d
  double slope_new = 0.0;  // g_new . d
  double grad_norm = 0.0;
  int trials = 0;
};

struct LbfgsResult {
  std::vector<double> x;
  double f = 0.0;
  std::vector<double> grad;
  LbfgsStatus status = LbfgsStatus::MaxIterations;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
};

LbfgsResult lbfgs_minimize(const Objective& objective, std::vector<double> x0,
                           const LbfgsOptions& options = {},
                           const std::function<void(const LbfgsIteration&)>& on_step = {});

}  // namespace tnn
