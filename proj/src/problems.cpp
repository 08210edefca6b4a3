#include "tnn/problems.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <set>
#include <stdexcept>

#include "tnn/reference.hpp"

namespace tnn {

Matrix coupled_oscillator_2d() {
  Matrix a(2, 2);
  a(0, 0) = 0.8851;
  a(0, 1) = a(1, 0) = -0.1382;
  a(1, 1) = 1.1933;
  return a;
}

Matrix coupled_oscillator_5d() {
  static const double v[5][5] = {{1.05886042, 0.01365034, 0.09163945, 0.11975290, 0.05625013},
                                 {0.01365034, 1.09613742, 0.10887930, 0.07448974, 0.07407652},
                                 {0.09163945, 0.10887930, 1.00935913, 0.05588543, 0.08968956},
                                 {0.11975290, 0.07448974, 0.05588543, 1.17627129, 0.06049045},
                                 {0.05625013, 0.07407652, 0.08968956, 0.06049045, 0.94969417}};
  Matrix a(5, 5);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j) a(i, j) = v[i][j];
  return a;
}

Problem oscillator_problem(const std::string& name, const Matrix& a, std::size_t k, int n) {
  const std::size_t d = a.rows();
  Problem p;
  p.name = name;
  p.dims.assign(d, DimensionSpec::whole_line(n));
  p.forms = laplace_plus_potential(d, 0.5, quadratic_potential(a));
  p.gradient = gradient_form(d);
  auto ref = std::make_shared<OscillatorReference>(oscillator_states(a, k));
  for (const auto& s : ref->states) p.exact.push_back({s.label(), s.energy, s.group});
  p.exact_function = [ref](std::size_t s, const std::vector<DimGrid>& grids) -> std::optional<GridFunction> {
    if (ref->rotated() && ref->mu.size() > 2) return std::nullopt;
    return oscillator_function(*ref, s, grids);
  };
  return p;
}

std::vector<OscillatorState> box_states(std::size_t d, std::size_t k) {
  if (d == 0 || k == 0) throw std::invalid_argument("box_states: d and k must be positive");
  auto energy = [](const std::vector<int>& n) {
    double e = 0.0;
    for (int v : n) e += double(v) * v;
    return std::numbers::pi * std::numbers::pi * e;
  };
  using Item = std::pair<double, std::vector<int>>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  std::set<std::vector<int>> seen;
  const std::vector<int> one(d, 1);
  heap.push({energy(one), one});
  seen.insert(one);
  std::vector<OscillatorState> found;
  // squared-integer sums tie exactly, so no tolerance is needed
  while (!heap.empty()) {
    auto [e, n] = heap.top();
    if (found.size() >= k && e != found[k - 1].energy) break;
    heap.pop();
    found.push_back({n, e, 0});
    for (std::size_t i = 0; i < d; ++i) {
      auto m = n;
      ++m[i];
      if (seen.insert(m).second) heap.push({energy(m), m});
    }
  }
  std::stable_sort(found.begin(), found.end(), [](const auto& x, const auto& y) {
    return x.energy < y.energy || (x.energy == y.energy && x.n < y.n);
  });
  std::size_t group = 0;
  for (std::size_t t = 0; t < found.size(); ++t) {
    if (t > 0 && found[t].energy != found[t - 1].energy) ++group;
    found[t].group = group;
  }
  found.resize(k);
  return found;
}

Problem box_laplace_problem(std::size_t d, std::size_t k, int m, int n) {
  Problem p;
  p.name = "box-laplace";
  p.dims.assign(d, DimensionSpec::dirichlet(0.0, 1.0, m, n));
  p.forms = laplace_plus_potential(d, 1.0, {});
  p.gradient = gradient_form(d);
  const auto states = box_states(d, k);
  for (const auto& s : states) p.exact.push_back({s.label(), s.energy, s.group});
  p.exact_function = [states](std::size_t s, const std::vector<DimGrid>& grids) -> std::optional<GridFunction> {
    std::vector<std::function<ScaledValue(double)>> factors;
    for (int ni : states.at(s).n) {
      const double w = ni * std::numbers::pi;
      factors.push_back([w](double x) {
        return ScaledValue{std::sqrt(2.0) * std::sin(w * x), std::sqrt(2.0) * w * std::cos(w * x), 0.0};
      });
    }
    return separable_function(grids, factors);
  };
  return p;
}

Problem hydrogen_problem(std::size_t k, int n_r, int m_theta, int m_phi, int n_ang) {
  Problem p;
  p.name = "hydrogen";
  p.dims = {DimensionSpec::half_line(n_r), DimensionSpec::natural(0.0, std::numbers::pi, m_theta, n_ang),
            DimensionSpec::periodic(2.0 * std::numbers::pi, m_phi, n_ang)};
  p.forms = hydrogen_spherical();
  p.gradient = spherical_gradient_form();
  for (const auto& s : hydrogen_states(k)) p.exact.push_back({s.label(), s.energy, s.group});
  p.exact_function = [](std::size_t s, const std::vector<DimGrid>& grids) -> std::optional<GridFunction> {
    if (s != 0) return std::nullopt;
    return hydrogen_ground_function(grids);
  };
  return p;
}

}  // namespace tnn
