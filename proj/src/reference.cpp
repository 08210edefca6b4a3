#include "tnn/reference.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <set>
#include <stdexcept>

#include "tnn/densela.hpp"

namespace tnn {

double hermite_physicists(int n, double x) {
  if (n < 0) throw std::invalid_argument("hermite_physicists: negative degree");
  if (n == 0) return 1.0;
  double h0 = 1.0, h1 = 2.0 * x;
  for (int k = 1; k < n; ++k) {
    const double h2 = 2.0 * x * h1 - 2.0 * k * h0;
    h0 = h1;
    h1 = h2;
  }
  return h1;
}

double ScaledValue::value() const { return poly * std::exp(exponent); }
double ScaledValue::deriv() const { return dpoly * std::exp(exponent); }

ScaledValue oscillator_factor(int n, double mu, double y) {
  if (n < 0) throw std::invalid_argument("oscillator_factor: negative index");
  if (!(mu > 0.0)) throw std::invalid_argument("oscillator_factor: frequency must be positive");
  const double s = std::pow(mu, 0.25);
  const double t = s * y;
  // orthonormal Hermite functions h_k(t) e^{-t^2/2}
  std::vector<double> h(static_cast<std::size_t>(n) + 2);
  h[0] = std::pow(std::numbers::pi, -0.25);
  h[1] = std::sqrt(2.0) * t * h[0];
  for (int k = 1; k <= n; ++k)
    h[k + 1] = std::sqrt(2.0 / (k + 1)) * t * h[k] - std::sqrt(double(k) / (k + 1)) * h[k - 1];
  const double lower = n > 0 ? std::sqrt(n / 2.0) * h[n - 1] : 0.0;
  const double dh = lower - std::sqrt((n + 1) / 2.0) * h[n + 1];
  const double norm = std::sqrt(s);
  return {norm * h[n], norm * s * dh, -0.5 * t * t};
}

std::string OscillatorState::label() const {
  std::string s = "(";
  for (std::size_t i = 0; i < n.size(); ++i) s += (i ? "," : "") + std::to_string(n[i]);
  return s + ")";
}

bool OscillatorReference::rotated() const { return q != Matrix::identity(q.rows()); }

ScaledValue OscillatorReference::scaled(std::size_t s, const std::vector<double>& x,
                                        std::vector<double>* grad_poly) const {
  const std::size_t d = mu.size();
  if (x.size() != d) throw std::invalid_argument("oscillator reference: wrong dimension");
  std::vector<double> y(d, 0.0);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t k = 0; k < d; ++k) y[i] += q(k, i) * x[k];
  std::vector<ScaledValue> f(d);
  ScaledValue out{1.0, 0.0, 0.0};
  for (std::size_t i = 0; i < d; ++i) {
    f[i] = oscillator_factor(states.at(s).n[i], mu[i], y[i]);
    out.poly *= f[i].poly;
    out.exponent += f[i].exponent;
  }
  if (grad_poly) {
    grad_poly->assign(d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
      double gi = f[i].dpoly;
      for (std::size_t j = 0; j < d; ++j)
        if (j != i) gi *= f[j].poly;
      for (std::size_t k = 0; k < d; ++k) (*grad_poly)[k] += q(k, i) * gi;
    }
  }
  return out;
}

double OscillatorReference::value(std::size_t s, const std::vector<double>& x,
                                  std::vector<double>* grad) const {
  const ScaledValue v = scaled(s, x, grad);
  const double e = std::exp(v.exponent);
  if (grad)
    for (double& g : *grad) g *= e;
  return v.poly * e;
}

namespace {

bool is_diagonal(const Matrix& a) {
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (i != j && a(i, j) != 0.0) return false;
  return true;
}

constexpr double kTieTol = 1e-12;

bool same_energy(double a, double b) { return std::abs(a - b) <= kTieTol * std::max(1.0, std::abs(b)); }

}  // namespace

OscillatorReference oscillator_states(const Matrix& a, std::size_t k) {
  const std::size_t d = a.rows();
  if (d == 0 || a.cols() != d) throw std::invalid_argument("oscillator_states: A must be square");
  if (k == 0) throw std::invalid_argument("oscillator_states: k must be positive");
  cholesky(a);  // SPD check

  OscillatorReference ref;
  ref.a = a;
  if (is_diagonal(a)) {
    ref.q = Matrix::identity(d);
    for (std::size_t i = 0; i < d; ++i) ref.mu.push_back(a(i, i));
  } else {
    const SymEig e = sym_eig(a);
    ref.q = e.vectors;
    ref.mu = e.values;
  }
  std::vector<double> omega(d);
  for (std::size_t i = 0; i < d; ++i) omega[i] = std::sqrt(ref.mu[i]);
  auto energy = [&](const std::vector<int>& n) {
    double e = 0.0;
    for (std::size_t i = 0; i < d; ++i) e += (0.5 + n[i]) * omega[i];
    return e;
  };

  using Item = std::pair<double, std::vector<int>>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  std::set<std::vector<int>> seen;
  const std::vector<int> zero(d, 0);
  heap.push({energy(zero), zero});
  seen.insert(zero);
  std::vector<OscillatorState> found;
  while (!heap.empty()) {
    auto [e, n] = heap.top();
    if (found.size() >= k && !same_energy(e, found[k - 1].energy)) break;
    heap.pop();
    found.push_back({n, e, 0});
    for (std::size_t i = 0; i < d; ++i) {
      auto m = n;
      ++m[i];
      if (seen.insert(m).second) heap.push({energy(m), m});
    }
  }
  // group ties, then lexicographic inside each group
  std::stable_sort(found.begin(), found.end(),
                   [](const auto& x, const auto& y) { return x.energy < y.energy; });
  std::size_t begin = 0, group = 0;
  while (begin < found.size()) {
    std::size_t end = begin + 1;
    while (end < found.size() && same_energy(found[end].energy, found[begin].energy)) ++end;
    std::sort(found.begin() + begin, found.begin() + end,
              [](const auto& x, const auto& y) { return x.n < y.n; });
    for (std::size_t t = begin; t < end; ++t) found[t].group = group;
    ++group;
    begin = end;
  }
  found.resize(k);
  ref.states = std::move(found);
  return ref;
}

std::string HydrogenState::label() const {
  static const char* names = "spdfghik";
  std::string s = std::to_string(n) + names[std::min(l, 7)];
  if (l > 0) s += "(m=" + std::to_string(m) + ")";
  return s;
}

std::vector<double> hydrogen_energies(int n_max) {
  if (n_max < 1) throw std::invalid_argument("hydrogen_energies: n_max must be >= 1");
  std::vector<double> out;
  for (int n = 1; n <= n_max; ++n)
    for (int t = 0; t < n * n; ++t) out.push_back(-1.0 / (2.0 * n * n));
  return out;
}

std::vector<HydrogenState> hydrogen_states(std::size_t count) {
  std::vector<HydrogenState> out;
  for (int n = 1; out.size() < count; ++n)
    for (int l = 0; l < n && out.size() < count; ++l)
      for (int m = -l; m <= l && out.size() < count; ++m)
        out.push_back({n, l, m, -1.0 / (2.0 * n * n), static_cast<std::size_t>(n - 1)});
  return out;
}

}  // namespace tnn
