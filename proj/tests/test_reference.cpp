#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "tnn/quadrature.hpp"
#include "tnn/reference.hpp"

using namespace tnn;

namespace {

Matrix coupled2() {
  Matrix a(2, 2);
  a(0, 0) = 0.8851;
  a(0, 1) = a(1, 0) = -0.1382;
  a(1, 1) = 1.1933;
  return a;
}

Matrix coupled5() {
  const double v[5][5] = {{1.05886042, 0.01365034, 0.09163945, 0.11975290, 0.05625013},
                          {0.01365034, 1.09613742, 0.10887930, 0.07448974, 0.07407652},
                          {0.09163945, 0.10887930, 1.00935913, 0.05588543, 0.08968956},
                          {0.11975290, 0.07448974, 0.05588543, 1.17627129, 0.06049045},
                          {0.05625013, 0.07407652, 0.08968956, 0.06049045, 0.94969417}};
  Matrix a(5, 5);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) a(i, j) = v[i][j];
  return a;
}

}  // namespace

TEST_CASE("physicists' Hermite polynomials") {
  CHECK(hermite_physicists(2, 1.0) == 2.0);
  CHECK(hermite_physicists(3, 0.0) == 0.0);
  CHECK(hermite_physicists(0, 3.7) == 1.0);
  CHECK(hermite_physicists(4, 0.5) == doctest::Approx(16 * 0.0625 - 48 * 0.25 + 12));
  const auto r = gauss_hermite(20);
  double s = 0;
  for (std::size_t q = 0; q < r.size(); ++q)
    s += r.weights[q] * hermite_physicists(2, r.nodes[q]) * hermite_physicists(3, r.nodes[q]);
  CHECK(std::abs(s) < 1e-10);
  CHECK_THROWS_AS(hermite_physicists(-1, 0.0), std::invalid_argument);
}

TEST_CASE("oscillator factors are orthonormal and match the closed form") {
  const double mu = 1.37;
  const auto r = gauss_hermite(60);
  // integrate in y with t = mu^{1/4} y; exp(-t^2) is the Hermite weight
  const double s = std::pow(mu, 0.25);
  for (int m = 0; m < 6; ++m)
    for (int n = 0; n < 6; ++n) {
      double ip = 0;
      for (std::size_t q = 0; q < r.size(); ++q) {
        const double y = r.nodes[q] / s;
        const auto a = oscillator_factor(m, mu, y);
        const auto b = oscillator_factor(n, mu, y);
        ip += r.weights[q] / s * a.poly * b.poly;  // exponents cancel the weight
      }
      CHECK(std::abs(ip - (m == n ? 1.0 : 0.0)) < 1e-12);
    }
  // closed form and central-difference derivative
  const double y = 0.43;
  const auto f = oscillator_factor(3, mu, y);
  const double norm = std::sqrt(s / (std::sqrt(std::numbers::pi) * 8 * 6));
  CHECK(f.value() == doctest::Approx(norm * hermite_physicists(3, s * y) * std::exp(-std::sqrt(mu) * y * y / 2)));
  const double h = 1e-6;
  const double fd = (oscillator_factor(3, mu, y + h).value() - oscillator_factor(3, mu, y - h).value()) / (2 * h);
  CHECK(f.deriv() == doctest::Approx(fd).epsilon(1e-8));
}

TEST_CASE("decoupled 2D spectrum") {
  const auto ref = oscillator_states(Matrix::identity(2), 16);
  const std::vector<double> expect{1, 2, 2, 3, 3, 3, 4, 4, 4, 4, 5, 5, 5, 5, 5, 6};
  REQUIRE(ref.states.size() == 16);
  for (std::size_t i = 0; i < 16; ++i) CHECK(ref.states[i].energy == doctest::Approx(expect[i]).epsilon(1e-15));
  CHECK_FALSE(ref.rotated());
  CHECK(ref.states[1].label() == "(0,1)");
  CHECK(ref.states[2].label() == "(1,0)");
  CHECK(ref.states[15].label() == "(0,5)");
  CHECK(ref.states[3].group == 2);
  CHECK(ref.states[5].group == 2);
  CHECK(ref.states[6].group == 3);
}

TEST_CASE("coupled references") {
  const auto r2 = oscillator_states(coupled2(), 6);
  CHECK(std::abs(r2.states[0].energy - 1.014291981649766) < 1e-12);
  CHECK(r2.rotated());
  const auto r5 = oscillator_states(coupled5(), 4);
  // the printed 5D matrix is rounded to 8 digits; the tabulated energy was
  // produced from unrounded entries and differs by about 4e-11
  CHECK(std::abs(r5.states[0].energy - 2.562993697776131) < 1e-10);
  CHECK(std::abs(r5.states[0].energy - 2.562993697814956) < 1e-13);
}

TEST_CASE("enumeration agrees with brute force") {
  for (std::size_t d = 1; d <= 5; ++d) {
    Matrix a = Matrix::identity(d);
    for (std::size_t i = 0; i < d; ++i) a(i, i) = 1.0 + 0.37 * double(i * i) / double(d);
    const auto ref = oscillator_states(a, 16);
    std::vector<double> all;
    std::vector<int> n(d, 0);
    const int bound = 16;
    // odometer over 0..bound in each coordinate, kept to total <= bound
    while (true) {
      int total = 0;
      for (int v : n) total += v;
      if (total <= bound) {
        double e = 0;
        for (std::size_t i = 0; i < d; ++i) e += (0.5 + n[i]) * std::sqrt(a(i, i));
        all.push_back(e);
      }
      std::size_t i = 0;
      while (i < d && ++n[i] > bound) n[i++] = 0;
      if (i == d) break;
    }
    std::sort(all.begin(), all.end());
    for (std::size_t s = 0; s < 16; ++s) CHECK(ref.states[s].energy == doctest::Approx(all[s]).epsilon(1e-14));
  }
}

TEST_CASE("rotated state values and gradients") {
  const auto ref = oscillator_states(coupled2(), 4);
  const std::vector<double> x{0.3, -0.7};
  std::vector<double> g;
  ref.value(2, x, &g);
  const double h = 1e-6;
  for (std::size_t k = 0; k < 2; ++k) {
    auto xp = x, xm = x;
    xp[k] += h;
    xm[k] -= h;
    CHECK(g[k] == doctest::Approx((ref.value(2, xp) - ref.value(2, xm)) / (2 * h)).epsilon(1e-7));
  }
}

TEST_CASE("hydrogen levels") {
  const auto e = hydrogen_energies(4);
  CHECK(e.size() == 1 + 4 + 9 + 16);
  CHECK(e[0] == -0.5);
  for (int i = 1; i <= 4; ++i) CHECK(e[i] == -0.125);
  for (int i = 5; i < 14; ++i) CHECK(e[i] == doctest::Approx(-1.0 / 18));
  CHECK(e[14] == -1.0 / 32);
  const auto s = hydrogen_states(5);
  CHECK(s[0].label() == "1s");
  CHECK(s[1].label() == "2s");
  CHECK(s[2].label() == "2p(m=-1)");
  CHECK(s[4].group == 1);
  CHECK_THROWS_AS(hydrogen_energies(0), std::invalid_argument);
}
