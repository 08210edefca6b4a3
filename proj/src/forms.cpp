#include "tnn/forms.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace tnn {

Weight Weight::one() {
  return {"1", [](double) { return 1.0; }, [](double) { return 0.0; }};
}

Weight Weight::monomial(int power) {
  if (power < 0) throw std::invalid_argument("Weight::monomial: negative power");
  if (power == 0) return one();
  return {"x^" + std::to_string(power),
          [power](double x) { return std::pow(x, power); },
          [power](double x) { return power * std::pow(x, power - 1); }};
}

Weight Weight::sin() {
  return {"sin", [](double x) { return std::sin(x); }, [](double x) { return std::cos(x); }};
}

Weight Weight::inv_sin() {
  return {"1/sin", [](double x) { return 1.0 / std::sin(x); },
          [](double x) {
            const double s = std::sin(x);
            return -std::cos(x) / (s * s);
          }};
}

Weight Weight::constant(double c) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "const:%.17g", c);
  return {buf, [c](double) { return c; }, [](double) { return 0.0; }};
}

std::string Kernel1D::key() const {
  return weight.name + "|" + std::to_string(deriv_left) + std::to_string(deriv_right);
}

namespace {

bool transposed(const SeparableTerm& s, const SeparableTerm& t) {
  if (s.kernels.size() != t.kernels.size() || s.coefficient != t.coefficient) return false;
  for (std::size_t i = 0; i < s.kernels.size(); ++i) {
    const auto& a = s.kernels[i];
    const auto& b = t.kernels[i];
    if (a.weight.name != b.weight.name || a.deriv_left != b.deriv_right ||
        a.deriv_right != b.deriv_left)
      return false;
  }
  return true;
}

Kernel1D mass(const Weight& w = Weight::one()) { return {w, 0, 0}; }
Kernel1D stiff(const Weight& w = Weight::one()) { return {w, 1, 1}; }

}  // namespace

void SeparableBilinearForm::validate_symmetric() const {
  const std::size_t d = dims();
  for (const auto& t : terms) {
    if (t.kernels.size() != d) throw std::invalid_argument("form: terms disagree on dimension count");
    for (const auto& k : t.kernels)
      if (k.deriv_left < 0 || k.deriv_left > 1 || k.deriv_right < 0 || k.deriv_right > 1)
        throw std::invalid_argument("form: derivative orders must be 0 or 1");
  }
  for (const auto& t : terms) {
    bool ok = transposed(t, t);
    for (const auto& other : terms) ok = ok || transposed(t, other);
    if (!ok) throw std::invalid_argument("form: a term has no transpose partner");
  }
}

bool SeparableBilinearForm::is_mass_form() const {
  if (terms.size() != 1) return false;
  for (const auto& k : terms.front().kernels)
    if (k.deriv_left != 0 || k.deriv_right != 0) return false;
  return true;
}

FormPair laplace_plus_potential(std::size_t dims, double kinetic_coeff,
                                const std::vector<PotentialTerm>& potential) {
  if (dims == 0) throw std::invalid_argument("laplace_plus_potential: zero dimensions");
  FormPair out;
  for (std::size_t s = 0; s < dims; ++s) {
    SeparableTerm t;
    t.coefficient = kinetic_coeff;
    for (std::size_t i = 0; i < dims; ++i) t.kernels.push_back(i == s ? stiff() : mass());
    out.a.terms.push_back(std::move(t));
  }
  for (const auto& v : potential) {
    if (v.factors.size() != dims)
      throw std::invalid_argument(
          "laplace_plus_potential: potential term is not separable over the problem dimensions");
    SeparableTerm t;
    t.coefficient = v.coefficient;
    for (const auto& w : v.factors) t.kernels.push_back(mass(w));
    out.a.terms.push_back(std::move(t));
  }
  SeparableTerm m;
  for (std::size_t i = 0; i < dims; ++i) m.kernels.push_back(mass());
  out.b.terms.push_back(std::move(m));
  out.a.validate_symmetric();
  return out;
}

std::vector<PotentialTerm> quadratic_potential(const Matrix& a) {
  const std::size_t d = a.rows();
  if (a.cols() != d) throw std::invalid_argument("quadratic_potential: matrix not square");
  std::vector<PotentialTerm> terms;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i; j < d; ++j) {
      PotentialTerm t;
      std::vector<Weight> f(d, Weight::one());
      if (i == j) {
        t.coefficient = 0.5 * a(i, i);
        f[i] = Weight::monomial(2);
      } else {
        t.coefficient = 0.5 * (a(i, j) + a(j, i));
        f[i] = Weight::monomial(1);
        f[j] = Weight::monomial(1);
      }
      t.factors = std::move(f);
      terms.push_back(std::move(t));
    }
  return terms;
}

SeparableBilinearForm gradient_form(std::size_t dims) {
  return laplace_plus_potential(dims, 1.0, {}).a;
}

FormPair hydrogen_spherical() {
  const Weight one = Weight::one();
  FormPair out;
  // 1/2 [ r^2 u_r v_r sin + u_th v_th sin + u_ph v_ph / sin ]
  out.a.terms.push_back({0.5, {stiff(Weight::monomial(2)), mass(Weight::sin()), mass(one)}});
  out.a.terms.push_back({0.5, {mass(one), stiff(Weight::sin()), mass(one)}});
  out.a.terms.push_back({0.5, {mass(one), mass(Weight::inv_sin()), stiff(one)}});
  // Coulomb: -int u v / r r^2 sin
  out.a.terms.push_back({-1.0, {mass(Weight::monomial(1)), mass(Weight::sin()), mass(one)}});
  out.b.terms.push_back({1.0, {mass(Weight::monomial(2)), mass(Weight::sin()), mass(one)}});
  out.a.validate_symmetric();
  return out;
}

SeparableBilinearForm spherical_gradient_form() {
  const Weight one = Weight::one();
  SeparableBilinearForm g;
  g.terms.push_back({1.0, {stiff(Weight::monomial(2)), mass(Weight::sin()), mass(one)}});
  g.terms.push_back({1.0, {mass(one), stiff(Weight::sin()), mass(one)}});
  g.terms.push_back({1.0, {mass(one), mass(Weight::inv_sin()), stiff(one)}});
  return g;
}

}  // namespace tnn
