#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace tnn {

enum class RuleKind { LegendreComposite, Hermite, Laguerre };

/// One-dimensional Gauss rule. Hermite rules carry the weight e^{-z^2} and
/// Laguerre rules the weight e^{-z}; Legendre rules integrate plain dx.
struct QuadratureRule {
  RuleKind kind = RuleKind::LegendreComposite;
  double a = -1.0;  // interval for LegendreComposite
  double b = 1.0;
  int subintervals = 1;
  int points = 0;  // points per subinterval (Legendre) or total (Hermite/Laguerre)
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
};

class QuadratureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// N-point Gauss-Legendre rule on [-1, 1].
QuadratureRule gauss_legendre(int n);

/// M equal subintervals of [a, b], N Gauss-Legendre points in each.
QuadratureRule composite_legendre(double a, double b, int m, int n);

/// N-point Gauss-Hermite rule for the weight e^{-z^2} on the whole line.
QuadratureRule gauss_hermite(int n);

/// N-point Gauss-Laguerre rule for the weight e^{-z} on the half line.
QuadratureRule gauss_laguerre(int n);

/// Golub-Welsch construction, exposed for cross-checks. `kind` must be
/// Hermite or Laguerre, or LegendreComposite for a plain [-1,1] rule.
QuadratureRule golub_welsch(RuleKind kind, int n);

/// Memoized rules keyed by kind and parameters. Returned rules are immutable
/// and live for the duration of the process.
std::shared_ptr<const QuadratureRule> cached_rule(RuleKind kind, int n, double a = -1.0,
                                                  double b = 1.0, int m = 1);

}  // namespace tnn
