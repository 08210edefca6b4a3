#include "tnn/model.hpp"

#include <cmath>
#include <random>

namespace tnn {

std::string to_string(DimensionKind k) {
  switch (k) {
    case DimensionKind::BoundedDirichlet:
      return "bounded_dirichlet";
    case DimensionKind::BoundedNatural:
      return "bounded_natural";
    case DimensionKind::WholeLine:
      return "whole_line";
    case DimensionKind::HalfLine:
      return "half_line";
    case DimensionKind::PeriodicAngle:
      return "periodic_angle";
  }
  return "unknown";
}

DimensionKind dimension_kind_from_string(const std::string& name) {
  for (auto k : {DimensionKind::BoundedDirichlet, DimensionKind::BoundedNatural,
                 DimensionKind::WholeLine, DimensionKind::HalfLine, DimensionKind::PeriodicAngle})
    if (to_string(k) == name) return k;
  throw std::invalid_argument("unknown dimension kind '" + name + "'");
}

DimensionSpec DimensionSpec::dirichlet(double a, double b, int m, int n) {
  return {DimensionKind::BoundedDirichlet, a, b, m, n};
}
DimensionSpec DimensionSpec::natural(double a, double b, int m, int n) {
  return {DimensionKind::BoundedNatural, a, b, m, n};
}
DimensionSpec DimensionSpec::whole_line(int n) { return {DimensionKind::WholeLine, 0, 0, 1, n}; }
DimensionSpec DimensionSpec::half_line(int n) { return {DimensionKind::HalfLine, 0, 0, 1, n}; }
DimensionSpec DimensionSpec::periodic(double period, int m, int n) {
  return {DimensionKind::PeriodicAngle, 0.0, period, m, n};
}

void DimensionSpec::validate() const {
  if (points < 1) throw std::invalid_argument("dimension: need at least one quadrature point");
  if (!has_scale()) {
    if (!(a < b)) throw std::invalid_argument("dimension: bounded kinds need a < b");
    if (subintervals < 1) throw std::invalid_argument("dimension: need at least one subinterval");
  }
}

std::shared_ptr<const QuadratureRule> DimensionSpec::rule() const {
  validate();
  switch (kind) {
    case DimensionKind::WholeLine:
      return cached_rule(RuleKind::Hermite, points);
    case DimensionKind::HalfLine:
      return cached_rule(RuleKind::Laguerre, points);
    default:
      return cached_rule(RuleKind::LegendreComposite, points, a, b, subintervals);
  }
}

double TnnModel::beta(std::size_t i) const { return std::exp(log_beta.at(i)); }

TnnModel make_model(const std::vector<DimensionSpec>& dims, const std::vector<NetworkArch>& archs,
                    std::uint64_t seed, double beta_init) {
  if (dims.empty()) throw std::invalid_argument("make_model: no dimensions");
  if (archs.empty()) throw std::invalid_argument("make_model: need at least one network");
  if (!(beta_init > 0.0)) throw std::invalid_argument("make_model: beta must be positive");
  for (const auto& s : dims) s.validate();

  TnnModel model;
  model.dims = dims;
  model.seed = seed;
  model.log_beta.assign(dims.size(), 0.0);
  for (std::size_t i = 0; i < dims.size(); ++i)
    if (dims[i].has_scale()) model.log_beta[i] = std::log(beta_init);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (const auto& arch : archs) {
    if (arch.rank < 1) throw std::invalid_argument("make_model: rank must be >= 1");
    Network net;
    net.arch = arch;
    net.coeffs.resize(arch.rank);
    for (double& c : net.coeffs) c = unit(rng);
    for (std::size_t i = 0; i < dims.size(); ++i) {
      net.subnets.push_back(make_subnet(arch.depth, arch.width, arch.rank, arch.activation, rng));
      std::vector<double> shift;
      if (dims[i].has_shift()) {
        shift.resize(arch.rank);
        for (double& g : shift) g = unit(rng);
      }
      net.shifts.push_back(std::move(shift));
    }
    model.nets.push_back(std::move(net));
  }
  return model;
}

ParamLayout param_layout(const TnnModel& model) {
  ParamLayout lay;
  std::size_t pos = 0;
  lay.log_beta.assign(model.d(), ParamLayout::npos);
  for (std::size_t i = 0; i < model.d(); ++i)
    if (model.dims[i].has_scale()) lay.log_beta[i] = pos++;
  for (const auto& net : model.nets) {
    lay.coeffs.push_back(pos);
    pos += net.coeffs.size();
    std::vector<std::size_t> sub, sh;
    for (std::size_t i = 0; i < model.d(); ++i) {
      sub.push_back(pos);
      pos += net.subnets[i].parameter_count();
      if (net.shifts[i].empty()) {
        sh.push_back(ParamLayout::npos);
      } else {
        sh.push_back(pos);
        pos += net.shifts[i].size();
      }
    }
    lay.subnet.push_back(std::move(sub));
    lay.shifts.push_back(std::move(sh));
  }
  lay.total = pos;
  return lay;
}

std::vector<double> flatten_params(const TnnModel& model) {
  std::vector<double> out;
  out.reserve(param_layout(model).total);
  for (std::size_t i = 0; i < model.d(); ++i)
    if (model.dims[i].has_scale()) out.push_back(model.log_beta[i]);
  for (const auto& net : model.nets) {
    out.insert(out.end(), net.coeffs.begin(), net.coeffs.end());
    for (std::size_t i = 0; i < model.d(); ++i) {
      net.subnets[i].flatten_into(out);
      out.insert(out.end(), net.shifts[i].begin(), net.shifts[i].end());
    }
  }
  return out;
}

void unflatten_params(TnnModel& model, std::span<const double> flat) {
  const ParamLayout lay = param_layout(model);
  if (flat.size() != lay.total)
    throw std::invalid_argument("unflatten_params: expected " + std::to_string(lay.total) +
                                " values, got " + std::to_string(flat.size()));
  for (std::size_t i = 0; i < model.d(); ++i)
    if (lay.log_beta[i] != ParamLayout::npos) model.log_beta[i] = flat[lay.log_beta[i]];
  for (std::size_t l = 0; l < model.k(); ++l) {
    auto& net = model.nets[l];
    std::copy_n(flat.begin() + lay.coeffs[l], net.coeffs.size(), net.coeffs.begin());
    for (std::size_t i = 0; i < model.d(); ++i) {
      net.subnets[i].unflatten_from(flat.subspan(lay.subnet[l][i]));
      if (lay.shifts[l][i] != ParamLayout::npos)
        std::copy_n(flat.begin() + lay.shifts[l][i], net.shifts[i].size(), net.shifts[i].begin());
    }
  }
}

DimGrid make_grid(const DimensionSpec& spec, const QuadratureRule& rule, double beta) {
  DimGrid g;
  g.beta = beta;
  const std::size_t nq = rule.size();
  g.eval_points = rule.nodes;
  g.x.resize(nq);
  g.omega.resize(nq);
  g.envelope.assign(nq, 1.0);
  for (std::size_t q = 0; q < nq; ++q) {
    const double z = rule.nodes[q];
    switch (spec.kind) {
      case DimensionKind::WholeLine:
        g.x[q] = z / beta;
        g.omega[q] = rule.weights[q] / beta;
        g.envelope[q] = std::exp(-0.5 * z * z);
        break;
      case DimensionKind::HalfLine:
        g.x[q] = z / beta;
        g.omega[q] = rule.weights[q] / beta;
        g.envelope[q] = std::exp(-0.5 * z);
        break;
      default:
        g.x[q] = z;
        g.omega[q] = rule.weights[q];
        break;
    }
  }
  return g;
}

DegenerateComponent::DegenerateComponent(std::size_t l, std::size_t i, std::size_t j)
    : std::runtime_error("degenerate component: network " + std::to_string(l) + ", dimension " +
                         std::to_string(i) + ", component " + std::to_string(j) +
                         " has vanishing L2 norm"),
      network(l),
      dim(i),
      component(j) {}

namespace {

constexpr double kMinNorm = 1e-30;

struct BoundaryFactor {
  double g, dg;
};

BoundaryFactor dirichlet_factor(const DimensionSpec& s, double x) {
  const double h = 0.5 * (s.b - s.a);
  return {(x - s.a) * (s.b - x) / (h * h), (s.a + s.b - 2.0 * x) / (h * h)};
}

BoundaryFactor periodic_factor(const DimensionSpec& s, double x) {
  const double w = std::numbers::pi / s.b;
  return {std::sin(w * x), w * std::cos(w * x)};
}

}  // namespace

ComponentValues component_values(const TnnModel& model, std::size_t l, std::size_t i,
                                 const DimGrid& grid, std::span<const double> mass_kq) {
  const auto& spec = model.dims.at(i);
  const auto& net = model.nets.at(l);
  const std::size_t nq = grid.size();
  if (mass_kq.size() != nq) throw std::invalid_argument("component_values: mass weights length");

  ComponentValues cv;
  cv.net = forward_batch(net.subnets[i], grid.eval_points, &cv.tape);
  const std::size_t p = cv.net.values.rows();
  cv.raw = Matrix(p, nq);
  cv.raw_derivs = Matrix(p, nq);
  const double beta = grid.beta;
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t q = 0; q < nq; ++q) {
      const double f = cv.net.values(j, q);
      const double df = cv.net.input_derivs(j, q);
      double r = f, dr = df;
      switch (spec.kind) {
        case DimensionKind::BoundedDirichlet: {
          const auto bf = dirichlet_factor(spec, grid.x[q]);
          r = bf.g * f;
          dr = bf.dg * f + bf.g * df;
          break;
        }
        case DimensionKind::PeriodicAngle: {
          const auto bf = periodic_factor(spec, grid.x[q]);
          r = bf.g * f + net.shifts[i][j];
          dr = bf.dg * f + bf.g * df;
          break;
        }
        case DimensionKind::WholeLine:
          dr = beta * (df - grid.eval_points[q] * f);
          break;
        case DimensionKind::HalfLine:
          dr = beta * (df - 0.5 * f);
          break;
        case DimensionKind::BoundedNatural:
          break;
      }
      cv.raw(j, q) = r;
      cv.raw_derivs(j, q) = dr;
    }

  cv.norms.resize(p);
  cv.values = Matrix(p, nq);
  cv.derivs = Matrix(p, nq);
  for (std::size_t j = 0; j < p; ++j) {
    double s = 0.0;
    for (std::size_t q = 0; q < nq; ++q) s += mass_kq[q] * cv.raw(j, q) * cv.raw(j, q);
    const double n = std::sqrt(s);
    if (!(n >= kMinNorm)) throw DegenerateComponent(l, i, j);
    cv.norms[j] = n;
    for (std::size_t q = 0; q < nq; ++q) {
      cv.values(j, q) = cv.raw(j, q) / n;
      cv.derivs(j, q) = cv.raw_derivs(j, q) / n;
    }
  }
  return cv;
}

double component_backward(const TnnModel& model, std::size_t l, std::size_t i,
                          const DimGrid& grid, std::span<const double> mass_kq,
                          const ComponentValues& cv, const Matrix& values_bar,
                          const Matrix& derivs_bar, std::span<double> subnet_grad,
                          std::span<double> shift_grad, std::span<double> mass_kq_bar) {
  const auto& spec = model.dims.at(i);
  const auto& net = model.nets.at(l);
  const std::size_t p = cv.values.rows();
  const std::size_t nq = grid.size();
  const double beta = grid.beta;

  Matrix rbar(p, nq), drbar(p, nq);
  for (std::size_t j = 0; j < p; ++j) {
    const double n = cv.norms[j];
    double nbar = 0.0;
    for (std::size_t q = 0; q < nq; ++q)
      nbar -= values_bar(j, q) * cv.values(j, q) + derivs_bar(j, q) * cv.derivs(j, q);
    nbar /= n;
    const double sbar = nbar / (2.0 * n);  // adjoint of the squared norm
    for (std::size_t q = 0; q < nq; ++q) {
      const double r = cv.raw(j, q);
      rbar(j, q) = values_bar(j, q) / n + 2.0 * sbar * mass_kq[q] * r;
      drbar(j, q) = derivs_bar(j, q) / n;
      mass_kq_bar[q] += sbar * r * r;
    }
  }

  Matrix fbar(p, nq), dfbar(p, nq);
  double beta_bar = 0.0;
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t q = 0; q < nq; ++q) {
      const double rb = rbar(j, q), drb = drbar(j, q);
      switch (spec.kind) {
        case DimensionKind::BoundedDirichlet: {
          const auto bf = dirichlet_factor(spec, grid.x[q]);
          fbar(j, q) = bf.g * rb + bf.dg * drb;
          dfbar(j, q) = bf.g * drb;
          break;
        }
        case DimensionKind::PeriodicAngle: {
          const auto bf = periodic_factor(spec, grid.x[q]);
          fbar(j, q) = bf.g * rb + bf.dg * drb;
          dfbar(j, q) = bf.g * drb;
          shift_grad[j] += rb;
          break;
        }
        case DimensionKind::WholeLine:
          fbar(j, q) = rb - beta * grid.eval_points[q] * drb;
          dfbar(j, q) = beta * drb;
          beta_bar += drb * cv.raw_derivs(j, q) / beta;
          break;
        case DimensionKind::HalfLine:
          fbar(j, q) = rb - 0.5 * beta * drb;
          dfbar(j, q) = beta * drb;
          beta_bar += drb * cv.raw_derivs(j, q) / beta;
          break;
        case DimensionKind::BoundedNatural:
          fbar(j, q) = rb;
          dfbar(j, q) = drb;
          break;
      }
    }
  backprop_accumulate(net.subnets[i], grid.eval_points, fbar, dfbar, &cv.tape, subnet_grad);
  return beta_bar;
}

Discretization Discretization::create(const std::vector<DimensionSpec>& dims,
                                      const SeparableBilinearForm& mass_form) {
  if (!mass_form.is_mass_form()) throw std::invalid_argument("Discretization: not a mass form");
  if (mass_form.dims() != dims.size())
    throw std::invalid_argument("Discretization: mass form dimension mismatch");
  Discretization d;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    d.rules.push_back(dims[i].rule());
    d.mass_weights.push_back(mass_form.terms.front().kernels[i].weight);
  }
  return d;
}

double evaluate_point(const TnnModel& model, const Discretization& disc, std::size_t l,
                      std::span<const double> x) {
  if (x.size() != model.d()) throw std::invalid_argument("evaluate_point: wrong dimension");
  const auto& net = model.nets.at(l);
  std::vector<double> prod(net.coeffs.size(), 1.0);
  for (std::size_t i = 0; i < model.d(); ++i) {
    const auto& spec = model.dims[i];
    const DimGrid grid = make_grid(spec, *disc.rules[i], model.beta(i));
    std::vector<double> kq(grid.size());
    for (std::size_t q = 0; q < grid.size(); ++q)
      kq[q] = grid.omega[q] * disc.mass_weights[i].value(grid.x[q]);
    const ComponentValues cv = component_values(model, l, i, grid, kq);

    const double beta = grid.beta;
    double t = x[i];
    if (spec.has_scale()) t = beta * x[i];
    const std::vector<double> pt{t};
    const BatchEval ev = forward_batch(net.subnets[i], pt);
    for (std::size_t j = 0; j < prod.size(); ++j) {
      const double f = ev.values(j, 0);
      double v = f;
      switch (spec.kind) {
        case DimensionKind::BoundedDirichlet:
          v = dirichlet_factor(spec, x[i]).g * f;
          break;
        case DimensionKind::PeriodicAngle:
          v = periodic_factor(spec, x[i]).g * f + net.shifts[i][j];
          break;
        case DimensionKind::WholeLine:
          v = std::exp(-0.5 * t * t) * f;
          break;
        case DimensionKind::HalfLine:
          v = std::exp(-0.5 * t) * f;
          break;
        case DimensionKind::BoundedNatural:
          break;
      }
      prod[j] *= v / cv.norms[j];
    }
  }
  double s = 0.0;
  for (std::size_t j = 0; j < prod.size(); ++j) s += net.coeffs[j] * prod[j];
  return s;
}

}  // namespace tnn
