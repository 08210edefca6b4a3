#include "tnn/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <tuple>

#include "tnn/densela.hpp"

namespace tnn {
namespace {

constexpr double kNewtonTol = 1e-15;
constexpr int kNewtonMaxIter = 100;

bool newton_converged(double dz, double z) {
  return std::abs(dz) <= kNewtonTol * std::max(1.0, std::abs(z));
}

void require_points(int n, const char* who) {
  if (n < 1) throw std::invalid_argument(std::string(who) + ": need at least one point");
}

// Newton on the Legendre recurrence; returns false if any root fails to converge.
bool legendre_newton(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    bool ok = false;
    for (int it = 0; it < kNewtonMaxIter; ++it) {
      double p1 = 1.0, p2 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
      }
      pp = n * (z * p1 - p2) / (z * z - 1.0);
      const double dz = p1 / pp;
      z -= dz;
      if (newton_converged(dz, z)) {
        ok = true;
        break;
      }
    }
    if (!ok) return false;
    // derivative at the converged root
    double p1 = 1.0, p2 = 0.0;
    for (int j = 1; j <= n; ++j) {
      const double p3 = p2;
      p2 = p1;
      p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
    }
    pp = n * (z * p1 - p2) / (z * z - 1.0);
    const double wi = 2.0 / ((1.0 - z * z) * pp * pp);
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = w[n - 1 - i] = wi;
  }
  if (n % 2 == 1) x[n / 2] = 0.0;
  return true;
}

// Newton on the orthonormal Hermite recurrence (largest roots first).
bool hermite_newton(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  const double pim4 = std::pow(std::numbers::pi, -0.25);
  const int half = (n + 1) / 2;
  std::vector<double> roots(half);
  double z = 0.0;
  for (int i = 0; i < half; ++i) {
    if (i == 0) {
      z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
    } else if (i == 1) {
      z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
    } else if (i == 2) {
      z = 1.86 * z - 0.86 * roots[0];
    } else if (i == 3) {
      z = 1.91 * z - 0.91 * roots[1];
    } else {
      z = 2.0 * z - roots[i - 2];
    }
    bool ok = false;
    double pp = 0.0;
    for (int it = 0; it < kNewtonMaxIter; ++it) {
      double p1 = pim4, p2 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / j) * p2 - std::sqrt((j - 1.0) / j) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      const double dz = p1 / pp;
      z -= dz;
      if (newton_converged(dz, z)) {
        ok = true;
        break;
      }
    }
    if (!ok) return false;
    roots[i] = z;
    double p1 = pim4, p2 = 0.0;
    for (int j = 1; j <= n; ++j) {
      const double p3 = p2;
      p2 = p1;
      p1 = z * std::sqrt(2.0 / j) * p2 - std::sqrt((j - 1.0) / j) * p3;
    }
    pp = std::sqrt(2.0 * n) * p2;
    x[n - 1 - i] = z;
    x[i] = -z;
    w[i] = w[n - 1 - i] = 2.0 / (pp * pp);
  }
  if (n % 2 == 1) x[n / 2] = 0.0;
  return true;
}

// Laguerre recurrence evaluated with power-of-ten rescaling so that large N
// does not overflow; returns L_n(z), L_{n-1}(z) scaled by 10^{-100 * scale_count}.
struct LaguerreEval {
  double pn;
  double pn1;
  int scale_count;
};

LaguerreEval laguerre_eval(int n, double z) {
  double p1 = 1.0, p2 = 0.0;
  int count = 0;
  for (int j = 1; j <= n; ++j) {
    const double p3 = p2;
    p2 = p1;
    p1 = ((2.0 * j - 1.0 - z) * p2 - (j - 1.0) * p3) / j;
    if (std::abs(p1) > 1e100) {
      p1 *= 1e-100;
      p2 *= 1e-100;
      ++count;
    }
  }
  return {p1, p2, count};
}

bool laguerre_newton(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  double z = 0.0;
  for (int i = 0; i < n; ++i) {
    if (i == 0) {
      z = 3.0 / (1.0 + 2.4 * n);
    } else if (i == 1) {
      z += 15.0 / (1.0 + 2.5 * n);
    } else {
      const double ai = i - 1;
      z += (1.0 + 2.55 * ai) / (1.9 * ai) * (z - x[i - 2]);
    }
    bool ok = false;
    for (int it = 0; it < kNewtonMaxIter; ++it) {
      const auto ev = laguerre_eval(n, z);
      const double pp = (n * ev.pn - n * ev.pn1) / z;
      const double dz = ev.pn / pp;
      z -= dz;
      if (newton_converged(dz, z)) {
        ok = true;
        break;
      }
    }
    if (!ok || !(z > 0.0) || (i > 0 && !(z > x[i - 1]))) return false;
    x[i] = z;
    const auto ev = laguerre_eval(n, z);
    const double pp = (n * ev.pn - n * ev.pn1) / z;
    // w = 1 / (z L_n'(z)^2) = -1 / (n L_n'(z) L_{n-1}(z)), in log form
    const double log_w = -std::log(std::abs(pp * n * ev.pn1)) -
                         200.0 * ev.scale_count * std::numbers::ln10;
    w[i] = std::exp(log_w);
  }
  return true;
}

}  // namespace

QuadratureRule golub_welsch(RuleKind kind, int n) {
  require_points(n, "golub_welsch");
  std::vector<double> diag(n, 0.0), off(n - 1, 0.0);
  double mu0 = 0.0;
  switch (kind) {
    case RuleKind::LegendreComposite:
      for (int j = 1; j < n; ++j) off[j - 1] = j / std::sqrt(4.0 * j * j - 1.0);
      mu0 = 2.0;
      break;
    case RuleKind::Hermite:
      for (int j = 1; j < n; ++j) off[j - 1] = std::sqrt(j / 2.0);
      mu0 = std::sqrt(std::numbers::pi);
      break;
    case RuleKind::Laguerre:
      for (int j = 0; j < n; ++j) diag[j] = 2.0 * j + 1.0;
      for (int j = 1; j < n; ++j) off[j - 1] = j;
      mu0 = 1.0;
      break;
  }
  const SymEig eig = sym_tridiagonal_eig(diag, off);
  QuadratureRule rule;
  rule.kind = kind;
  rule.points = n;
  rule.nodes = eig.values;
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) rule.weights[i] = mu0 * eig.vectors(0, i) * eig.vectors(0, i);
  return rule;
}

QuadratureRule gauss_legendre(int n) {
  require_points(n, "gauss_legendre");
  QuadratureRule rule;
  rule.kind = RuleKind::LegendreComposite;
  rule.points = n;
  if (!legendre_newton(n, rule.nodes, rule.weights)) {
    const auto gw = golub_welsch(RuleKind::LegendreComposite, n);
    rule.nodes = gw.nodes;
    rule.weights = gw.weights;
  }
  return rule;
}

QuadratureRule composite_legendre(double a, double b, int m, int n) {
  if (!(a < b)) throw std::invalid_argument("composite_legendre: need a < b");
  if (m < 1) throw std::invalid_argument("composite_legendre: need at least one subinterval");
  const QuadratureRule base = gauss_legendre(n);
  QuadratureRule rule;
  rule.kind = RuleKind::LegendreComposite;
  rule.a = a;
  rule.b = b;
  rule.subintervals = m;
  rule.points = n;
  rule.nodes.reserve(static_cast<std::size_t>(m) * n);
  rule.weights.reserve(static_cast<std::size_t>(m) * n);
  const double h = (b - a) / m;
  for (int s = 0; s < m; ++s) {
    const double center = a + (s + 0.5) * h;
    for (int q = 0; q < n; ++q) {
      rule.nodes.push_back(center + 0.5 * h * base.nodes[q]);
      rule.weights.push_back(0.5 * h * base.weights[q]);
    }
  }
  return rule;
}

QuadratureRule gauss_hermite(int n) {
  require_points(n, "gauss_hermite");
  QuadratureRule rule;
  rule.kind = RuleKind::Hermite;
  rule.points = n;
  if (!hermite_newton(n, rule.nodes, rule.weights)) {
    auto gw = golub_welsch(RuleKind::Hermite, n);
    // the Jacobi matrix is exactly symmetric about zero; restore that in the nodes
    for (int i = 0; i < n / 2; ++i) {
      const double z = 0.5 * (gw.nodes[n - 1 - i] - gw.nodes[i]);
      const double wt = 0.5 * (gw.weights[n - 1 - i] + gw.weights[i]);
      gw.nodes[i] = -z;
      gw.nodes[n - 1 - i] = z;
      gw.weights[i] = gw.weights[n - 1 - i] = wt;
    }
    if (n % 2 == 1) gw.nodes[n / 2] = 0.0;
    rule.nodes = gw.nodes;
    rule.weights = gw.weights;
  }
  for (double wt : rule.weights)
    if (!(wt > 0.0)) throw QuadratureError("gauss_hermite: non-positive weight (underflow)");
  return rule;
}

QuadratureRule gauss_laguerre(int n) {
  require_points(n, "gauss_laguerre");
  QuadratureRule rule;
  rule.kind = RuleKind::Laguerre;
  rule.points = n;
  if (!laguerre_newton(n, rule.nodes, rule.weights)) {
    const auto gw = golub_welsch(RuleKind::Laguerre, n);
    rule.nodes = gw.nodes;
    rule.weights = gw.weights;
  }
  for (std::size_t i = 0; i < rule.size(); ++i) {
    if (!(rule.nodes[i] > 0.0)) throw QuadratureError("gauss_laguerre: non-positive node");
    if (!(rule.weights[i] > 0.0))
      throw QuadratureError("gauss_laguerre: non-positive weight (underflow)");
  }
  return rule;
}

std::shared_ptr<const QuadratureRule> cached_rule(RuleKind kind, int n, double a, double b,
                                                  int m) {
  using Key = std::tuple<int, int, double, double, int>;
  static std::mutex mutex;
  static std::map<Key, std::shared_ptr<const QuadratureRule>> cache;

  Key key{static_cast<int>(kind), n, a, b, m};
  if (kind != RuleKind::LegendreComposite) key = {static_cast<int>(kind), n, 0.0, 0.0, 0};

  std::lock_guard lock(mutex);
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  std::shared_ptr<const QuadratureRule> rule;
  switch (kind) {
    case RuleKind::LegendreComposite:
      rule = std::make_shared<const QuadratureRule>(composite_legendre(a, b, m, n));
      break;
    case RuleKind::Hermite:
      rule = std::make_shared<const QuadratureRule>(gauss_hermite(n));
      break;
    case RuleKind::Laguerre:
      rule = std::make_shared<const QuadratureRule>(gauss_laguerre(n));
      break;
  }
  cache.emplace(key, rule);
  return rule;
}

}  // namespace tnn
