#include "tnn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "tnn/densela.hpp"

namespace tnn {

std::vector<double> eigenvalue_errors(const std::vector<double>& approx,
                                      const std::vector<double>& exact) {
  if (approx.size() != exact.size())
    throw std::invalid_argument("eigenvalue_errors: " + std::to_string(approx.size()) +
                                " approximate vs " + std::to_string(exact.size()) + " exact values");
  std::vector<double> out(exact.size());
  for (std::size_t l = 0; l < exact.size(); ++l) {
    if (exact[l] == 0.0)
      throw std::invalid_argument("eigenvalue_errors: exact eigenvalue " + std::to_string(l) + " is zero");
    out[l] = std::abs(approx[l] - exact[l]) / std::abs(exact[l]);
  }
  return out;
}

GridFunction GridFunction::scaled(double s) const {
  GridFunction g = *this;
  for (double& c : g.coeffs) c *= s;
  for (double& v : g.dense) v *= s;
  for (auto& p : g.dense_partials)
    for (double& v : p) v *= s;
  return g;
}

namespace {

double log_envelope(const DimGrid& g, std::size_t q) {
  if (!(g.envelope[q] > 0.0)) throw std::domain_error("metrics: envelope underflows at a grid node");
  return std::log(g.envelope[q]);
}

// odometer over the full tensor grid, last dimension fastest
bool advance(std::vector<std::size_t>& idx, const std::vector<DimGrid>& grids) {
  for (std::size_t i = idx.size(); i-- > 0;) {
    if (++idx[i] < grids[i].size()) return true;
    idx[i] = 0;
  }
  return false;
}

int single_derivative_dim(const SeparableTerm& t, bool left) {
  int dim = -1;
  for (std::size_t i = 0; i < t.kernels.size(); ++i) {
    const int order = left ? t.kernels[i].deriv_left : t.kernels[i].deriv_right;
    if (order == 0) continue;
    if (dim >= 0) throw std::invalid_argument("metrics: dense path supports one derivative per side");
    dim = static_cast<int>(i);
  }
  return dim;
}

}  // namespace

GridFunction separable_function(const std::vector<DimGrid>& grids,
                                const std::vector<std::function<ScaledValue(double)>>& factors) {
  if (factors.size() != grids.size())
    throw std::invalid_argument("separable_function: one factor per dimension required");
  GridFunction f;
  f.coeffs = {1.0};
  f.values.assign(1, {});
  f.derivs.assign(1, {});
  for (std::size_t i = 0; i < grids.size(); ++i) {
    const DimGrid& g = grids[i];
    std::vector<double> v(g.size()), dv(g.size());
    for (std::size_t q = 0; q < g.size(); ++q) {
      const ScaledValue s = factors[i](g.x[q]);
      const double e = std::exp(s.exponent - log_envelope(g, q));
      v[q] = s.poly * e;
      dv[q] = s.dpoly * e;
    }
    f.values[0].push_back(std::move(v));
    f.derivs[0].push_back(std::move(dv));
  }
  return f;
}

GridFunction oscillator_function(const OscillatorReference& ref, std::size_t state,
                                 const std::vector<DimGrid>& grids) {
  const std::size_t d = ref.mu.size();
  if (grids.size() != d) throw std::invalid_argument("oscillator_function: dimension mismatch");
  if (!ref.rotated()) {
    std::vector<std::function<ScaledValue(double)>> factors;
    for (std::size_t i = 0; i < d; ++i) {
      const int n = ref.states.at(state).n[i];
      const double mu = ref.mu[i];
      factors.push_back([n, mu](double x) { return oscillator_factor(n, mu, x); });
    }
    return separable_function(grids, factors);
  }
  if (d > 2) throw std::invalid_argument("oscillator_function: rotated references need d <= 2");
  GridFunction f;
  std::size_t total = 1;
  for (const auto& g : grids) total *= g.size();
  f.dense.resize(total);
  f.dense_partials.assign(d, std::vector<double>(total));
  std::vector<std::size_t> idx(d, 0);
  std::vector<double> x(d), gp;
  std::size_t pt = 0;
  do {
    double log_env = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      x[i] = grids[i].x[idx[i]];
      log_env += log_envelope(grids[i], idx[i]);
    }
    const ScaledValue s = ref.scaled(state, x, &gp);
    const double e = std::exp(s.exponent - log_env);
    f.dense[pt] = s.poly * e;
    for (std::size_t i = 0; i < d; ++i) f.dense_partials[i][pt] = gp[i] * e;
    ++pt;
  } while (advance(idx, grids));
  return f;
}

GridFunction hydrogen_ground_function(const std::vector<DimGrid>& grids) {
  if (grids.size() != 3) throw std::invalid_argument("hydrogen_ground_function: needs (r, theta, phi)");
  const auto constant = [](double) { return ScaledValue{1.0, 0.0, 0.0}; };
  return separable_function(grids, {[](double r) { return ScaledValue{1.0, -1.0, -r}; }, constant, constant});
}

std::vector<GridFunction> ritz_functions(const TnnModel& model, const Assembler::State& state,
                                         const Matrix& y) {
  const std::size_t k = model.k(), d = model.d();
  if (y.rows() != k) throw std::invalid_argument("ritz_functions: Y must have k rows");
  std::vector<GridFunction> out(y.cols());
  for (std::size_t l = 0; l < y.cols(); ++l) {
    GridFunction& f = out[l];
    for (std::size_t m = 0; m < k; ++m) {
      const Network& net = model.nets[m];
      for (std::size_t j = 0; j < net.coeffs.size(); ++j) {
        f.coeffs.push_back(y(m, l) * net.coeffs[j]);
        std::vector<std::vector<double>> v(d), dv(d);
        for (std::size_t i = 0; i < d; ++i) {
          const auto& cv = state.comps[m][i];
          v[i].assign(cv.values.row(j).begin(), cv.values.row(j).end());
          dv[i].assign(cv.derivs.row(j).begin(), cv.derivs.row(j).end());
        }
        f.values.push_back(std::move(v));
        f.derivs.push_back(std::move(dv));
      }
    }
  }
  return out;
}

MetricSpace::MetricSpace(std::vector<DimGrid> grids, SeparableBilinearForm mass,
                         SeparableBilinearForm gradient)
    : grids_(std::move(grids)), mass_(std::move(mass)), gradient_(std::move(gradient)) {
  for (const auto* form : {&mass_, &gradient_}) {
    if (form->dims() != grids_.size())
      throw std::invalid_argument("MetricSpace: form and grid dimensions differ");
    form->validate_symmetric();
  }
  auto build = [&](const SeparableBilinearForm& form) {
    std::vector<std::vector<std::vector<double>>> out;
    for (const auto& term : form.terms) {
      std::vector<std::vector<double>> per_dim;
      for (std::size_t i = 0; i < grids_.size(); ++i) {
        const DimGrid& g = grids_[i];
        std::vector<double> kq(g.size());
        for (std::size_t q = 0; q < g.size(); ++q)
          kq[q] = g.omega[q] * term.kernels[i].weight.value(g.x[q]);
        per_dim.push_back(std::move(kq));
      }
      out.push_back(std::move(per_dim));
    }
    return out;
  };
  mass_kq_ = build(mass_);
  gradient_kq_ = build(gradient_);
}

std::size_t MetricSpace::grid_points() const {
  std::size_t total = 1;
  for (const auto& g : grids_) total *= g.size();
  return total;
}

double MetricSpace::inner(const GridFunction& f, const GridFunction& g, Norm norm) const {
  if (f.is_dense() || g.is_dense()) return dense_inner(f, g, norm);
  return separable_inner(f, g, norm);
}

double MetricSpace::separable_inner(const GridFunction& f, const GridFunction& g, Norm norm) const {
  const auto& terms = form(norm).terms;
  const auto& weights = kq(norm);
  double total = 0.0;
  for (std::size_t t = 0; t < terms.size(); ++t) {
    double acc = 0.0;
    for (std::size_t s = 0; s < f.coeffs.size(); ++s)
      for (std::size_t r = 0; r < g.coeffs.size(); ++r) {
        double prod = f.coeffs[s] * g.coeffs[r];
        for (std::size_t i = 0; i < grids_.size() && prod != 0.0; ++i) {
          const auto& ker = terms[t].kernels[i];
          const auto& u = ker.deriv_left ? f.derivs[s][i] : f.values[s][i];
          const auto& v = ker.deriv_right ? g.derivs[r][i] : g.values[r][i];
          const auto& w = weights[t][i];
          double sum = 0.0;
          for (std::size_t q = 0; q < w.size(); ++q) sum += w[q] * u[q] * v[q];
          prod *= sum;
        }
        acc += prod;
      }
    total += terms[t].coefficient * acc;
  }
  return total;
}

GridFunction MetricSpace::densify(const GridFunction& f) const {
  if (f.is_dense()) return f;
  const std::size_t d = grids_.size(), total = grid_points();
  GridFunction out;
  out.dense.assign(total, 0.0);
  out.dense_partials.assign(d, std::vector<double>(total, 0.0));
  std::vector<std::size_t> idx(d, 0);
  std::size_t pt = 0;
  do {
    double val = 0.0;
    for (std::size_t s = 0; s < f.coeffs.size(); ++s) {
      double prod = f.coeffs[s];
      for (std::size_t i = 0; i < d; ++i) prod *= f.values[s][i][idx[i]];
      val += prod;
      for (std::size_t k = 0; k < d; ++k) {
        double part = f.coeffs[s] * f.derivs[s][k][idx[k]];
        for (std::size_t i = 0; i < d; ++i)
          if (i != k) part *= f.values[s][i][idx[i]];
        out.dense_partials[k][pt] += part;
      }
    }
    out.dense[pt] = val;
    ++pt;
  } while (advance(idx, grids_));
  return out;
}

double MetricSpace::dense_inner(const GridFunction& f_in, const GridFunction& g_in, Norm norm) const {
  const GridFunction f = densify(f_in), g = densify(g_in);
  const auto& terms = form(norm).terms;
  const auto& weights = kq(norm);
  const std::size_t d = grids_.size();
  double total = 0.0;
  for (std::size_t t = 0; t < terms.size(); ++t) {
    const int ld = single_derivative_dim(terms[t], true);
    const int rd = single_derivative_dim(terms[t], false);
    const auto& u = ld < 0 ? f.dense : f.dense_partials[ld];
    const auto& v = rd < 0 ? g.dense : g.dense_partials[rd];
    std::vector<std::size_t> idx(d, 0);
    std::size_t pt = 0;
    double acc = 0.0;
    do {
      double w = 1.0;
      for (std::size_t i = 0; i < d; ++i) w *= weights[t][i][idx[i]];
      acc += w * u[pt] * v[pt];
      ++pt;
    } while (advance(idx, grids_));
    total += terms[t].coefficient * acc;
  }
  return total;
}

namespace {

Matrix gram_of(const MetricSpace& space, const std::vector<GridFunction>& fs, Norm norm) {
  Matrix g(fs.size(), fs.size());
  for (std::size_t a = 0; a < fs.size(); ++a)
    for (std::size_t b = a; b < fs.size(); ++b) g(a, b) = g(b, a) = space.inner(fs[a], fs[b], norm);
  return g;
}

Matrix safe_cholesky(const Matrix& g) {
  Matrix l;
  try {
    l = cholesky(g);
  } catch (const NotPositiveDefinite& e) {
    throw SingularGram(std::string("eigenspace Gram matrix is singular: ") + e.what());
  }
  double max_diag = 0.0;
  for (std::size_t i = 0; i < g.rows(); ++i) max_diag = std::max(max_diag, g(i, i));
  for (std::size_t i = 0; i < l.rows(); ++i)
    if (l(i, i) * l(i, i) <= 1e-14 * max_diag)
      throw SingularGram("eigenspace Gram matrix is numerically singular at pivot " + std::to_string(i));
  return l;
}

struct Projection {
  std::vector<double> alpha;
  std::vector<double> cross;
  Matrix gram;
};

Projection project(const MetricSpace& space, const GridFunction& u,
                   const std::vector<GridFunction>& eigenspace, Norm norm, const Matrix* gram) {
  if (eigenspace.empty()) throw std::invalid_argument("projection: empty eigenspace");
  Projection p;
  p.gram = gram ? *gram : gram_of(space, eigenspace, norm);
  if (p.gram.rows() != eigenspace.size() || p.gram.cols() != eigenspace.size())
    throw std::invalid_argument("projection: Gram matrix does not match the eigenspace");
  const Matrix l = safe_cholesky(p.gram);
  Matrix rhs(eigenspace.size(), 1);
  for (std::size_t a = 0; a < eigenspace.size(); ++a) {
    p.cross.push_back(space.inner(eigenspace[a], u, norm));
    rhs(a, 0) = p.cross.back();
  }
  cholesky_solve(l, rhs);
  p.alpha = rhs.data();
  return p;
}

double relative_residual(const MetricSpace& space, const GridFunction& u,
                         const std::vector<GridFunction>& eigenspace,
                         const std::vector<GridFunction>& dense_space, Norm norm,
                         const Projection& p, bool dense) {
  const double unorm = space.inner(u, u, norm);
  if (!(unorm > 0.0)) throw std::invalid_argument("projection: exact function has zero norm");
  double res;
  if (dense) {
    GridFunction r = space.densify(u);
    for (std::size_t a = 0; a < eigenspace.size(); ++a) {
      const GridFunction& e = dense_space[a];
      for (std::size_t t = 0; t < r.dense.size(); ++t) r.dense[t] -= p.alpha[a] * e.dense[t];
      for (std::size_t i = 0; i < r.dense_partials.size(); ++i)
        for (std::size_t t = 0; t < r.dense.size(); ++t)
          r.dense_partials[i][t] -= p.alpha[a] * e.dense_partials[i][t];
    }
    res = space.inner(r, r, norm);
  } else {
    res = unorm;
    for (std::size_t a = 0; a < p.alpha.size(); ++a) {
      res -= 2.0 * p.alpha[a] * p.cross[a];
      for (std::size_t b = 0; b < p.alpha.size(); ++b) res += p.alpha[a] * p.gram(a, b) * p.alpha[b];
    }
  }
  return std::sqrt(std::max(res, 0.0) / unorm);
}

}  // namespace

std::vector<double> projection_coefficients(const MetricSpace& space, const GridFunction& u,
                                            const std::vector<GridFunction>& eigenspace, Norm norm,
                                            const Matrix* gram) {
  return project(space, u, eigenspace, norm, gram).alpha;
}

ProjectionErrors projection_errors(const MetricSpace& space, const GridFunction& u,
                                   const std::vector<GridFunction>& eigenspace,
                                   const ProjectionGrams* grams, std::size_t dense_limit) {
  const bool dense = space.grid_points() <= dense_limit;
  std::vector<GridFunction> dense_space;
  if (dense)
    for (const auto& e : eigenspace) dense_space.push_back(space.densify(e));
  ProjectionErrors out;
  const Projection pl = project(space, u, eigenspace, Norm::L2, grams ? &grams->l2 : nullptr);
  out.l2 = relative_residual(space, u, eigenspace, dense_space, Norm::L2, pl, dense);
  const Projection ph = project(space, u, eigenspace, Norm::H1, grams ? &grams->h1 : nullptr);
  out.h1 = relative_residual(space, u, eigenspace, dense_space, Norm::H1, ph, dense);
  return out;
}

std::vector<std::optional<ProjectionErrors>> grouped_projection_errors(
    const MetricSpace& space, const std::vector<const GridFunction*>& exact,
    const std::vector<std::size_t>& groups, const std::vector<GridFunction>& approx,
    const ProjectionGrams* grams) {
  if (exact.size() != groups.size() || approx.size() < groups.size())
    throw std::invalid_argument("grouped_projection_errors: size mismatch");
  std::map<std::size_t, std::vector<std::size_t>> members;
  for (std::size_t s = 0; s < groups.size(); ++s) members[groups[s]].push_back(s);

  std::vector<std::optional<ProjectionErrors>> out(exact.size());
  for (const auto& [group, idx] : members) {
    bool any = false;
    for (std::size_t s : idx) any = any || exact[s] != nullptr;
    if (!any) continue;
    std::vector<GridFunction> eigenspace;
    for (std::size_t s : idx) eigenspace.push_back(approx[s]);
    ProjectionGrams sub;
    if (grams) {
      sub.l2 = Matrix(idx.size(), idx.size());
      sub.h1 = Matrix(idx.size(), idx.size());
      for (std::size_t a = 0; a < idx.size(); ++a)
        for (std::size_t b = 0; b < idx.size(); ++b) {
          sub.l2(a, b) = grams->l2(idx[a], idx[b]);
          sub.h1(a, b) = grams->h1(idx[a], idx[b]);
        }
    }
    for (std::size_t s : idx)
      if (exact[s]) out[s] = projection_errors(space, *exact[s], eigenspace, grams ? &sub : nullptr);
  }
  return out;
}

}  // namespace tnn
