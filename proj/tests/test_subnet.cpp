#include "doctest.h"
#include "test_support.hpp"
#include "tnn/subnet.hpp"

#include <cmath>

using namespace tnn;

namespace {

SubnetParams linear_net(double w, double b) {
  SubnetParams net;
  net.activation = Activation::Identity;
  net.layers.push_back(DenseLayer{1, 1, {w}, {b}});
  return net;
}

double weighted_objective(const SubnetParams& net, const std::vector<double>& nodes,
                          const Matrix& av, const Matrix& ad) {
  const auto ev = forward_batch(net, nodes);
  double s = 0.0;
  for (std::size_t j = 0; j < av.rows(); ++j)
    for (std::size_t q = 0; q < av.cols(); ++q)
      s += av(j, q) * ev.values(j, q) + ad(j, q) * ev.input_derivs(j, q);
  return s;
}

}  // namespace

TEST_CASE("zero weights give the bias and zero derivative") {
  SubnetParams net;
  net.activation = Activation::Identity;
  net.layers.push_back(DenseLayer{1, 3, {0, 0, 0}, {1.5, -2.0, 0.25}});
  const std::vector<double> x{-1.0, 0.0, 2.0};
  const auto ev = forward_batch(net, x);
  for (std::size_t q = 0; q < 3; ++q) {
    CHECK(ev.values(0, q) == 1.5);
    CHECK(ev.values(1, q) == -2.0);
    CHECK(ev.values(2, q) == 0.25);
    for (std::size_t j = 0; j < 3; ++j) CHECK(ev.input_derivs(j, q) == 0.0);
  }
}

TEST_CASE("single linear layer") {
  const auto net = linear_net(2.5, 0.0);
  const std::vector<double> x{-1.0, 0.5, 3.0};
  const auto ev = forward_batch(net, x);
  for (std::size_t q = 0; q < 3; ++q) {
    CHECK(ev.values(0, q) == 2.5 * x[q]);
    CHECK(ev.input_derivs(0, q) == 2.5);
  }
  Matrix ones(1, 3, 1.0), zeros(1, 3, 0.0);
  const auto g = backprop(net, x, ones, zeros);
  CHECK(g[0] == doctest::Approx(2.5));  // sum of nodes
  CHECK(g[1] == 3.0);                   // Q
  const auto z = backprop(net, x, zeros, zeros);
  CHECK(z == std::vector<double>{0.0, 0.0});
}

TEST_CASE("input derivatives match central differences") {
  std::mt19937_64 rng(17);
  for (auto act : {Activation::Sin, Activation::Tanh}) {
    const auto net = make_subnet(3, 20, 4, act, rng);
    std::vector<double> x;
    for (int q = 0; q < 25; ++q) x.push_back(-3.0 + 0.25 * q);
    const auto ev = forward_batch(net, x);
    const double h = 1e-5;
    for (std::size_t q = 0; q < x.size(); ++q) {
      const std::vector<double> xp{x[q] + h}, xm{x[q] - h};
      const auto ep = forward_batch(net, xp), em = forward_batch(net, xm);
      for (std::size_t j = 0; j < 4; ++j) {
        const double fd = (ep.values(j, 0) - em.values(j, 0)) / (2 * h);
        CHECK(std::abs(fd - ev.input_derivs(j, q)) <= 1e-6 * (std::abs(ev.input_derivs(j, q)) + 1e-3));
      }
    }
  }
}

TEST_CASE("parameter gradients match central differences") {
  std::mt19937_64 rng(23);
  for (auto act : {Activation::Sin, Activation::Tanh}) {
    auto net = make_subnet(3, 10, 3, act, rng);
    std::vector<double> x;
    for (int q = 0; q < 12; ++q) x.push_back(-2.0 + 0.37 * q);
    const Matrix av = testing::random_matrix(rng, 3, x.size());
    const Matrix ad = testing::random_matrix(rng, 3, x.size());
    const auto g = backprop(net, x, av, ad);

    std::vector<double> flat;
    net.flatten_into(flat);
    REQUIRE(flat.size() == g.size());
    double worst = 0.0;
    for (std::size_t t = 0; t < flat.size(); ++t) {
      const double h = 1e-6 * std::max(1.0, std::abs(flat[t]));
      auto p = flat, m = flat;
      p[t] += h;
      m[t] -= h;
      auto np = net, nm = net;
      np.unflatten_from(p);
      nm.unflatten_from(m);
      const double fd = (weighted_objective(np, x, av, ad) - weighted_objective(nm, x, av, ad)) / (2 * h);
      worst = std::max(worst, std::abs(g[t] - fd) / (std::abs(g[t]) + 1e-8));
    }
    CHECK(worst <= 1e-5);
  }
}

TEST_CASE("backprop is linear in the adjoints") {
  std::mt19937_64 rng(29);
  const auto net = make_subnet(2, 8, 2, Activation::Sin, rng);
  const std::vector<double> x{-1.0, -0.3, 0.4, 1.7};
  const Matrix av = testing::random_matrix(rng, 2, 4);
  const Matrix ad = testing::random_matrix(rng, 2, 4);
  const auto g1 = backprop(net, x, av, ad);
  const auto g2 = backprop(net, x, -3.25 * av, -3.25 * ad);
  for (std::size_t t = 0; t < g1.size(); ++t)
    CHECK(std::abs(g2[t] + 3.25 * g1[t]) <= 1e-13 * (std::abs(g2[t]) + 1e-300) + 1e-15);
}

TEST_CASE("tape reuse gives identical gradients") {
  std::mt19937_64 rng(31);
  const auto net = make_subnet(3, 6, 2, Activation::Sin, rng);
  const std::vector<double> x{-0.5, 0.1, 0.9};
  SubnetTape tape;
  (void)forward_batch(net, x, &tape);
  const Matrix av = testing::random_matrix(rng, 2, 3);
  const Matrix ad = testing::random_matrix(rng, 2, 3);
  CHECK(backprop(net, x, av, ad, &tape) == backprop(net, x, av, ad));
}

TEST_CASE("errors") {
  std::mt19937_64 rng(1);
  const auto net = make_subnet(1, 4, 2, Activation::Sin, rng);
  const std::vector<double> x{0.0, 1.0};
  CHECK_THROWS_AS(backprop(net, x, Matrix(2, 3), Matrix(2, 3)), std::invalid_argument);
  const std::vector<double> bad{0.0, std::nan("")};
  CHECK_THROWS_AS(forward_batch(net, bad), SubnetOverflow);

  auto huge = linear_net(1e308, 0.0);
  const std::vector<double> big{1.0, 10.0};
  try {
    (void)forward_batch(huge, big);
    FAIL("expected overflow");
  } catch (const SubnetOverflow& e) {
    CHECK(e.node_index() == 1);
  }
}

TEST_CASE("initialization respects the documented ranges") {
  std::mt19937_64 rng(3);
  const auto net = make_subnet(3, 20, 5, Activation::Sin, rng);
  REQUIRE(net.layers.size() == 4);
  CHECK(net.layers.front().in == 1);
  CHECK(net.output_dim() == 5);
  for (std::size_t l = 0; l < 3; ++l)
    for (double b : net.layers[l].bias) CHECK(std::abs(b) <= M_PI);
  for (double b : net.layers.back().bias) CHECK(b == 0.0);
  const double lim = std::sqrt(6.0 / 21.0);
  for (double w : net.layers[0].weight) CHECK(std::abs(w) <= lim);
  CHECK(net.parameter_count() == (20 + 20) + (400 + 20) * 2 + (100 + 5));
}
