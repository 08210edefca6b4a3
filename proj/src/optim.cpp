#include "tnn/optim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace tnn {

void adam_step(AdamState& st, std::span<double> params, std::span<const double> grad) {
  const std::size_t n = params.size();
  if (grad.size() != n || st.m.size() != n || st.v.size() != n)
    throw std::invalid_argument("adam_step: length mismatch");
  for (std::size_t i = 0; i < n; ++i)
    if (!std::isfinite(grad[i])) throw NonFiniteGradient(i);
  const auto& o = st.options;
  ++st.t;
  const double c1 = 1.0 - std::pow(o.beta1, static_cast<double>(st.t));
  const double c2 = 1.0 - std::pow(o.beta2, static_cast<double>(st.t));
  for (std::size_t i = 0; i < n; ++i) {
    st.m[i] = o.beta1 * st.m[i] + (1.0 - o.beta1) * grad[i];
    st.v[i] = o.beta2 * st.v[i] + (1.0 - o.beta2) * grad[i] * grad[i];
    const double mh = st.m[i] / c1;
    const double vh = st.v[i] / c2;
    params[i] -= o.lr * mh / (std::sqrt(vh) + o.eps);
  }
}

std::string to_string(LbfgsStatus s) {
  switch (s) {
    case LbfgsStatus::Converged:
      return "converged";
    case LbfgsStatus::MaxIterations:
      return "max_iterations";
    case LbfgsStatus::LineSearchFailed:
      return "line_search_failed";
  }
  return "unknown";
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

struct Trial {
  double alpha = 0.0;
  double f = 0.0;
  double slope = 0.0;
  std::vector<double> x, g;
  bool ok = false;
};

class LineSearch {
 public:
  LineSearch(const Objective& obj, const std::vector<double>& x, const std::vector<double>& d,
             const LbfgsOptions& opt, std::size_t& evals)
      : obj_(obj), x_(x), d_(d), opt_(opt), evals_(evals) {}

  Trial eval(double alpha) {
    Trial t;
    t.alpha = alpha;
    t.x.resize(x_.size());
    t.g.assign(x_.size(), 0.0);
    for (std::size_t i = 0; i < x_.size(); ++i) t.x[i] = x_[i] + alpha * d_[i];
    ++trials;
    ++evals_;
    try {
      t.f = obj_(t.x, t.g);
    } catch (const std::exception&) {
      return t;
    }
    t.slope = dot(t.g, d_);
    t.ok = std::isfinite(t.f) && std::isfinite(t.slope);
    return t;
  }

  // strong Wolfe search; returns an accepted trial or nothing
  bool run(double f0, double slope0, double alpha, Trial& out) {
    f0_ = f0;
    s0_ = slope0;
    Trial prev;
    prev.alpha = 0.0;
    prev.f = f0;
    prev.slope = slope0;
    prev.x = x_;
    prev.ok = true;
    best_ = prev;
    bool first = true;
    while (trials < opt_.max_trials) {
      Trial cur = eval(alpha);
      if (!cur.ok) {
        alpha = prev.alpha + 0.5 * (alpha - prev.alpha);
        continue;
      }
      if (cur.f > f0 + opt_.c1 * alpha * s0_ || (!first && cur.f >= prev.f))
        return zoom(std::move(prev), std::move(cur), out);
      if (std::abs(cur.slope) <= -opt_.c2 * s0_) {
        out = std::move(cur);
        return true;
      }
      if (cur.slope >= 0) return zoom(std::move(cur), std::move(prev), out);
      note(cur);
      prev = std::move(cur);
      alpha *= 2.0;
      first = false;
    }
    return false;
  }

  const Trial& best() const { return best_; }
  int trials = 0;

 private:
  void note(const Trial& t) {
    if (t.ok && t.f < best_.f) best_ = t;
  }

  bool zoom(Trial lo, Trial hi, Trial& out) {
    note(lo);
    while (trials < opt_.max_trials) {
      const double a = lo.alpha, b = hi.alpha;
      double alpha = 0.5 * (a + b);
      if (hi.ok) {
        // cubic interpolation through (a, f_lo, s_lo), (b, f_hi, s_hi)
        const double d1 = lo.slope + hi.slope - 3.0 * (lo.f - hi.f) / (a - b);
        const double disc = d1 * d1 - lo.slope * hi.slope;
        if (disc >= 0.0) {
          const double d2 = std::copysign(std::sqrt(disc), b - a);
          const double c = b - (b - a) * (hi.slope + d2 - d1) / (hi.slope - lo.slope + 2.0 * d2);
          const double lo_b = std::min(a, b) + 0.1 * std::abs(b - a);
          const double hi_b = std::max(a, b) - 0.1 * std::abs(b - a);
          if (std::isfinite(c) && c >= lo_b && c <= hi_b) alpha = c;
        }
      }
      Trial cur = eval(alpha);
      if (!cur.ok) {
        hi = std::move(cur);
        continue;
      }
      if (cur.f > f0_ + opt_.c1 * alpha * s0_ || cur.f >= lo.f) {
        hi = std::move(cur);
      } else {
        if (std::abs(cur.slope) <= -opt_.c2 * s0_) {
          out = std::move(cur);
          return true;
        }
        if (cur.slope * (hi.alpha - lo.alpha) >= 0) hi = lo;
        note(cur);
        lo = std::move(cur);
      }
      if (std::abs(hi.alpha - lo.alpha) <= 1e-16 * std::max(1.0, std::abs(lo.alpha))) break;
    }
    return false;
  }

  const Objective& obj_;
  const std::vector<double>& x_;
  const std::vector<double>& d_;
  const LbfgsOptions& opt_;
  std::size_t& evals_;
  double f0_ = 0.0, s0_ = 0.0;
  Trial best_;
};

}  // namespace

LbfgsResult lbfgs_minimize(const Objective& objective, std::vector<double> x0,
                           const LbfgsOptions& opt,
                           const std::function<void(const LbfgsIteration&)>& on_step) {
  const std::size_t n = x0.size();
  LbfgsResult res;
  res.x = std::move(x0);
  res.grad.assign(n, 0.0);
  res.f = objective(res.x, res.grad);
  res.evaluations = 1;
  if (!std::isfinite(res.f)) throw std::runtime_error("lbfgs: non-finite objective at the start point");
  for (std::size_t i = 0; i < n; ++i)
    if (!std::isfinite(res.grad[i])) throw NonFiniteGradient(i);

  std::deque<std::vector<double>> s_hist, y_hist;
  std::deque<double> rho_hist;
  std::vector<double> d(n), alpha_buf;

  for (std::size_t it = 0;; ++it) {
    const double gnorm = std::sqrt(dot(res.grad, res.grad));
    if (gnorm <= opt.grad_tol) {
      res.status = LbfgsStatus::Converged;
      return res;
    }
    if (it >= opt.max_iters) {
      res.status = LbfgsStatus::MaxIterations;
      return res;
    }

    // two-loop recursion
    for (std::size_t i = 0; i < n; ++i) d[i] = -res.grad[i];
    const std::size_t h = s_hist.size();
    alpha_buf.assign(h, 0.0);
    for (std::size_t j = h; j-- > 0;) {
      alpha_buf[j] = rho_hist[j] * dot(s_hist[j], d);
      for (std::size_t i = 0; i < n; ++i) d[i] -= alpha_buf[j] * y_hist[j][i];
    }
    if (h > 0) {
      const double gamma = dot(s_hist.back(), y_hist.back()) / dot(y_hist.back(), y_hist.back());
      for (double& v : d) v *= gamma;
    }
    for (std::size_t j = 0; j < h; ++j) {
      const double b = rho_hist[j] * dot(y_hist[j], d);
      for (std::size_t i = 0; i < n; ++i) d[i] += (alpha_buf[j] - b) * s_hist[j][i];
    }
    double slope = dot(res.grad, d);
    if (!(slope < 0.0)) {
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      for (std::size_t i = 0; i < n; ++i) d[i] = -res.grad[i];
      slope = -gnorm * gnorm;
    }
    const double alpha0 = s_hist.empty() ? std::min(1.0, 1.0 / gnorm) : 1.0;

    LineSearch ls(objective, res.x, d, opt, res.evaluations);
    Trial acc;
    if (!ls.run(res.f, slope, alpha0, acc)) {
      const Trial& b = ls.best();
      if (b.alpha > 0.0 && b.f < res.f) {
        res.x = b.x;
        res.f = b.f;
        res.grad = b.g;
      }
      res.status = LbfgsStatus::LineSearchFailed;
      return res;
    }

    std::vector<double> s(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = acc.x[i] - res.x[i];
      y[i] = acc.g[i] - res.grad[i];
    }
    const double sy = dot(s, y);
    if (sy > 1e-16 * std::sqrt(dot(s, s) * dot(y, y))) {
      if (s_hist.size() == opt.history) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
    }

    LbfgsIteration rec;
    rec.iteration = it;
    rec.alpha = acc.alpha;
    rec.f_old = res.f;
    rec.f_new = acc.f;
    rec.slope_old = slope;
    rec.slope_new = acc.slope;
    rec.trials = ls.trials;
    res.x = std::move(acc.x);
    res.f = acc.f;
    res.grad = std::move(acc.g);
    rec.grad_norm = std::sqrt(dot(res.grad, res.grad));
    res.iterations = it + 1;
    if (on_step) on_step(rec);
  }
}

}  // namespace tnn
