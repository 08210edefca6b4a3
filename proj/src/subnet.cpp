#include "tnn/subnet.hpp"

#include <cmath>
#include <numbers>

namespace tnn {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::Sin:
      return "sin";
    case Activation::Tanh:
      return "tanh";
    case Activation::Identity:
      return "identity";
  }
  return "unknown";
}

Activation activation_from_string(const std::string& name) {
  if (name == "sin") return Activation::Sin;
  if (name == "tanh") return Activation::Tanh;
  if (name == "identity") return Activation::Identity;
  throw std::invalid_argument("unknown activation '" + name + "'");
}

namespace {

struct ActDerivs {
  double f, df, ddf;
};

inline ActDerivs activate(Activation act, double a) {
  switch (act) {
    case Activation::Sin: {
      const double s = std::sin(a), c = std::cos(a);
      return {s, c, -s};
    }
    case Activation::Tanh: {
      const double t = std::tanh(a);
      const double d = 1.0 - t * t;
      return {t, d, -2.0 * t * d};
    }
    case Activation::Identity:
      return {a, 1.0, 0.0};
  }
  return {0, 0, 0};
}

// out(o, q) = sum_i w(o, i) in(i, q) (+ bias)
void affine(const DenseLayer& layer, const Matrix& in, Matrix& out, bool with_bias) {
  const std::size_t nq = in.cols();
  out = Matrix(layer.out, nq);
  for (std::size_t o = 0; o < layer.out; ++o) {
    auto orow = out.row(o);
    if (with_bias)
      for (std::size_t q = 0; q < nq; ++q) orow[q] = layer.bias[o];
    for (std::size_t i = 0; i < layer.in; ++i) {
      const double w = layer.weight[o * layer.in + i];
      const auto irow = in.row(i);
      for (std::size_t q = 0; q < nq; ++q) orow[q] += w * irow[q];
    }
  }
}

}  // namespace

std::size_t SubnetParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

void SubnetParams::flatten_into(std::vector<double>& out) const {
  for (const auto& l : layers) {
    out.insert(out.end(), l.weight.begin(), l.weight.end());
    out.insert(out.end(), l.bias.begin(), l.bias.end());
  }
}

std::size_t SubnetParams::unflatten_from(std::span<const double> in) {
  std::size_t pos = 0;
  for (auto& l : layers) {
    if (pos + l.weight.size() + l.bias.size() > in.size())
      throw std::invalid_argument("subnet unflatten: vector too short");
    std::copy_n(in.begin() + pos, l.weight.size(), l.weight.begin());
    pos += l.weight.size();
    std::copy_n(in.begin() + pos, l.bias.size(), l.bias.begin());
    pos += l.bias.size();
  }
  return pos;
}

SubnetParams make_subnet(std::size_t depth, std::size_t width, std::size_t p, Activation act,
                         std::mt19937_64& rng) {
  if (p == 0) throw std::invalid_argument("make_subnet: output dimension must be >= 1");
  if (depth > 0 && width == 0) throw std::invalid_argument("make_subnet: zero width");
  SubnetParams net;
  net.activation = act;
  std::size_t in = 1;
  for (std::size_t l = 0; l <= depth; ++l) {
    const bool last = (l == depth);
    DenseLayer layer;
    layer.in = in;
    layer.out = last ? p : width;
    const double lim = std::sqrt(6.0 / static_cast<double>(layer.in + layer.out));
    std::uniform_real_distribution<double> wdist(-lim, lim);
    layer.weight.resize(layer.in * layer.out);
    for (double& w : layer.weight) w = wdist(rng);
    layer.bias.assign(layer.out, 0.0);
    if (!last) {
      const double blim = act == Activation::Sin ? std::numbers::pi : 1.0;
      std::uniform_real_distribution<double> bdist(-blim, blim);
      for (double& b : layer.bias) b = bdist(rng);
    }
    net.layers.push_back(std::move(layer));
    in = net.layers.back().out;
  }
  return net;
}

BatchEval forward_batch(const SubnetParams& params, std::span<const double> nodes,
                        SubnetTape* tape) {
  const std::size_t nq = nodes.size();
  Matrix h(1, nq), hd(1, nq, 1.0);
  for (std::size_t q = 0; q < nq; ++q) {
    if (!std::isfinite(nodes[q])) throw SubnetOverflow(q, "subnet input is not finite");
    h(0, q) = nodes[q];
  }
  if (tape) *tape = SubnetTape{};

  const std::size_t nl = params.layers.size();
  for (std::size_t l = 0; l < nl; ++l) {
    const auto& layer = params.layers[l];
    if (layer.in != h.rows()) throw std::invalid_argument("subnet: layer shapes do not chain");
    Matrix a, ad;
    affine(layer, h, a, true);
    affine(layer, hd, ad, false);
    if (tape) {
      tape->inputs.push_back(h);
      tape->input_derivs.push_back(hd);
    }
    if (l + 1 == nl) {
      if (tape) {
        tape->pre.push_back(a);
        tape->pre_derivs.push_back(ad);
      }
      h = std::move(a);
      hd = std::move(ad);
      break;
    }
    Matrix hn(layer.out, nq), hdn(layer.out, nq);
    for (std::size_t o = 0; o < layer.out; ++o)
      for (std::size_t q = 0; q < nq; ++q) {
        const auto act = activate(params.activation, a(o, q));
        hn(o, q) = act.f;
        hdn(o, q) = act.df * ad(o, q);
      }
    if (tape) {
      tape->pre.push_back(std::move(a));
      tape->pre_derivs.push_back(std::move(ad));
    }
    h = std::move(hn);
    hd = std::move(hdn);
  }

  for (std::size_t j = 0; j < h.rows(); ++j)
    for (std::size_t q = 0; q < nq; ++q)
      if (!std::isfinite(h(j, q)) || !std::isfinite(hd(j, q)))
        throw SubnetOverflow(q, "subnet output not finite at node index " + std::to_string(q));
  return {std::move(h), std::move(hd)};
}

void backprop_accumulate(const SubnetParams& params, std::span<const double> nodes,
                         const Matrix& adj_values, const Matrix& adj_derivs,
                         const SubnetTape* tape, std::span<double> grad) {
  const std::size_t nq = nodes.size();
  const std::size_t p = params.output_dim();
  if (adj_values.rows() != p || adj_values.cols() != nq || adj_derivs.rows() != p ||
      adj_derivs.cols() != nq)
    throw std::invalid_argument("backprop: adjoint shape mismatch");
  if (grad.size() != params.parameter_count())
    throw std::invalid_argument("backprop: gradient buffer has wrong length");

  SubnetTape local;
  if (!tape) {
    (void)forward_batch(params, nodes, &local);
    tape = &local;
  }

  // offsets of each layer's block in the flat gradient
  const std::size_t nl = params.layers.size();
  std::vector<std::size_t> offset(nl);
  std::size_t pos = 0;
  for (std::size_t l = 0; l < nl; ++l) {
    offset[l] = pos;
    pos += params.layers[l].weight.size() + params.layers[l].bias.size();
  }

  Matrix hbar = adj_values, hdbar = adj_derivs;
  for (std::size_t l = nl; l-- > 0;) {
    const auto& layer = params.layers[l];
    Matrix abar(layer.out, nq), adbar(layer.out, nq);
    if (l + 1 == nl) {
      abar = hbar;
      adbar = hdbar;
    } else {
      const Matrix& a = tape->pre[l];
      const Matrix& ad = tape->pre_derivs[l];
      for (std::size_t o = 0; o < layer.out; ++o)
        for (std::size_t q = 0; q < nq; ++q) {
          const auto act = activate(params.activation, a(o, q));
          abar(o, q) = hbar(o, q) * act.df + hdbar(o, q) * act.ddf * ad(o, q);
          adbar(o, q) = hdbar(o, q) * act.df;
        }
    }
    const Matrix& hin = tape->inputs[l];
    const Matrix& hdin = tape->input_derivs[l];
    double* gw = grad.data() + offset[l];
    double* gb = gw + layer.weight.size();
    for (std::size_t o = 0; o < layer.out; ++o) {
      const auto ar = abar.row(o), adr = adbar.row(o);
      double bsum = 0.0;
      for (std::size_t q = 0; q < nq; ++q) bsum += ar[q];
      gb[o] += bsum;
      for (std::size_t i = 0; i < layer.in; ++i) {
        const auto hr = hin.row(i), hdr = hdin.row(i);
        double s = 0.0;
        for (std::size_t q = 0; q < nq; ++q) s += ar[q] * hr[q] + adr[q] * hdr[q];
        gw[o * layer.in + i] += s;
      }
    }
    if (l == 0) break;
    Matrix nh(layer.in, nq), nhd(layer.in, nq);
    for (std::size_t o = 0; o < layer.out; ++o) {
      const auto ar = abar.row(o), adr = adbar.row(o);
      for (std::size_t i = 0; i < layer.in; ++i) {
        const double w = layer.weight[o * layer.in + i];
        auto nr = nh.row(i), ndr = nhd.row(i);
        for (std::size_t q = 0; q < nq; ++q) {
          nr[q] += w * ar[q];
          ndr[q] += w * adr[q];
        }
      }
    }
    hbar = std::move(nh);
    hdbar = std::move(nhd);
  }
}

std::vector<double> backprop(const SubnetParams& params, std::span<const double> nodes,
                             const Matrix& adj_values, const Matrix& adj_derivs,
                             const SubnetTape* tape) {
  std::vector<double> grad(params.parameter_count(), 0.0);
  backprop_accumulate(params, nodes, adj_values, adj_derivs, tape, grad);
  return grad;
}

}  // namespace tnn
