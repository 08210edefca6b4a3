#pragma once

// Dense full-tensor-grid reference for the assembled matrices. Components are
// evaluated in physical coordinates on a composite Gauss-Legendre rule (over a
// truncated interval for unbounded dimensions), normalized with that same
// rule, and every form term is integrated pointwise over the whole grid.

#include <cmath>
#include <numbers>
#include <vector>

#include "tnn/forms.hpp"
#include "tnn/model.hpp"
#include "tnn/quadrature.hpp"
#include "tnn/subnet.hpp"

namespace tnn::testing {

struct OracleDim {
  double lo, hi;
  int m, n;
};

/// Physical value and x-derivative of every raw component of network l in
/// dimension i at the points xs (p x Q each), by the product rule.
inline std::pair<Matrix, Matrix> physical_components(const TnnModel& model, std::size_t l,
                                                     std::size_t i, const std::vector<double>& xs) {
  const auto& spec = model.dims[i];
  const auto& net = model.nets[l];
  const double beta = model.beta(i);
  std::vector<double> t(xs);
  if (spec.has_scale())
    for (double& v : t) v *= beta;
  const BatchEval ev = forward_batch(net.subnets[i], t);
  const std::size_t p = ev.values.rows();
  Matrix val(p, xs.size()), der(p, xs.size());
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t q = 0; q < xs.size(); ++q) {
      const double x = xs[q];
      const double f = ev.values(j, q);
      const double df = ev.input_derivs(j, q);  // d/dt
      double env = 1.0, denv = 0.0, inner_scale = 1.0, add = 0.0;
      switch (spec.kind) {
        case DimensionKind::BoundedNatural:
          break;
        case DimensionKind::BoundedDirichlet: {
          const double h2 = 0.25 * (spec.b - spec.a) * (spec.b - spec.a);
          env = (x - spec.a) * (spec.b - x) / h2;
          denv = ((spec.b - x) - (x - spec.a)) / h2;
          break;
        }
        case DimensionKind::PeriodicAngle: {
          const double w = std::numbers::pi / spec.b;
          env = std::sin(w * x);
          denv = w * std::cos(w * x);
          add = net.shifts[i][j];
          break;
        }
        case DimensionKind::WholeLine:
          env = std::exp(-0.5 * beta * beta * x * x);
          denv = -beta * beta * x * env;
          inner_scale = beta;
          break;
        case DimensionKind::HalfLine:
          env = std::exp(-0.5 * beta * x);
          denv = -0.5 * beta * env;
          inner_scale = beta;
          break;
      }
      val(j, q) = env * f + add;
      der(j, q) = denv * f + env * inner_scale * df;
    }
  return {val, der};
}

/// Oracle A-like matrices for every form in `forms`. `mass` is the form whose
/// per-dimension weights define the normalization. Only d = 2.
inline std::vector<Matrix> full_grid_oracle(const TnnModel& model,
                                            const std::vector<SeparableBilinearForm>& forms,
                                            const SeparableBilinearForm& mass,
                                            const std::vector<OracleDim>& grid) {
  const std::size_t d = model.d();
  const std::size_t k = model.k();
  std::vector<QuadratureRule> rules;
  for (const auto& g : grid) rules.push_back(composite_legendre(g.lo, g.hi, g.m, g.n));

  // per network, per dimension: normalized value/derivative tables
  std::vector<std::vector<std::pair<Matrix, Matrix>>> comp(k);
  for (std::size_t l = 0; l < k; ++l)
    for (std::size_t i = 0; i < d; ++i) {
      auto [v, dv] = physical_components(model, l, i, rules[i].nodes);
      const auto& w = mass.terms.front().kernels[i].weight;
      for (std::size_t j = 0; j < v.rows(); ++j) {
        double s = 0.0;
        for (std::size_t q = 0; q < rules[i].size(); ++q)
          s += rules[i].weights[q] * w.value(rules[i].nodes[q]) * v(j, q) * v(j, q);
        const double n = std::sqrt(s);
        for (std::size_t q = 0; q < rules[i].size(); ++q) {
          v(j, q) /= n;
          dv(j, q) /= n;
        }
      }
      comp[l].emplace_back(std::move(v), std::move(dv));
    }

  // Psi and its partial derivatives at a grid point, by explicit sum over j
  auto psi = [&](std::size_t l, const std::vector<std::size_t>& idx, const std::vector<int>& alpha) {
    const auto& c = model.nets[l].coeffs;
    double s = 0.0;
    for (std::size_t j = 0; j < c.size(); ++j) {
      double prod = c[j];
      for (std::size_t i = 0; i < d; ++i)
        prod *= alpha[i] ? comp[l][i].second(j, idx[i]) : comp[l][i].first(j, idx[i]);
      s += prod;
    }
    return s;
  };

  std::vector<Matrix> out(forms.size(), Matrix(k, k));
  std::vector<std::size_t> idx(d, 0);
  const std::size_t total = [&] {
    std::size_t t = 1;
    for (const auto& r : rules) t *= r.size();
    return t;
  }();
  std::vector<int> al(d), ar(d);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    double weight = 1.0;
    for (std::size_t i = d; i-- > 0;) {
      idx[i] = rem % rules[i].size();
      rem /= rules[i].size();
      weight *= rules[i].weights[idx[i]];
    }
    for (std::size_t f = 0; f < forms.size(); ++f)
      for (const auto& term : forms[f].terms) {
        double w = weight * term.coefficient;
        for (std::size_t i = 0; i < d; ++i) {
          w *= term.kernels[i].weight.value(rules[i].nodes[idx[i]]);
          al[i] = term.kernels[i].deriv_left;
          ar[i] = term.kernels[i].deriv_right;
        }
        std::vector<double> left(k), right(k);
        for (std::size_t l = 0; l < k; ++l) {
          left[l] = psi(l, idx, al);
          right[l] = psi(l, idx, ar);
        }
        for (std::size_t m = 0; m < k; ++m)
          for (std::size_t n = 0; n < k; ++n) out[f](m, n) += w * left[m] * right[n];
      }
  }
  return out;
}

}  // namespace tnn::testing
