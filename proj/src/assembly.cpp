#include "tnn/assembly.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace tnn {

Assembler::Assembler(std::vector<DimensionSpec> dims, std::vector<SeparableBilinearForm> forms,
                     std::size_t mass_form_index)
    : dims_(std::move(dims)), forms_(std::move(forms)), mass_form_(mass_form_index) {
  if (mass_form_ >= forms_.size()) throw std::invalid_argument("Assembler: mass form index");
  const std::size_t d = dims_.size();
  for (const auto& f : forms_) {
    if (f.dims() != d) throw std::invalid_argument("Assembler: form dimension does not match the model");
    f.validate_symmetric();
  }
  disc_ = Discretization::create(dims_, forms_[mass_form_]);

  kernels_.assign(d, {});
  auto intern = [&](std::size_t i, const Kernel1D& k) {
    for (std::size_t u = 0; u < kernels_[i].size(); ++u)
      if (kernels_[i][u].key() == k.key()) return u;
    kernels_[i].push_back(k);
    return kernels_[i].size() - 1;
  };
  term_kernels_.resize(forms_.size());
  for (std::size_t f = 0; f < forms_.size(); ++f)
    for (const auto& t : forms_[f].terms) {
      std::vector<std::size_t> idx(d);
      for (std::size_t i = 0; i < d; ++i) idx[i] = intern(i, t.kernels[i]);
      term_kernels_[f].push_back(std::move(idx));
    }
  mass_kernel_ = term_kernels_[mass_form_].front();
  for (const auto& ks : kernels_) max_kernels_ = std::max(max_kernels_, ks.size());
}

Assembler::State Assembler::forward(const TnnModel& model) const {
  const std::size_t d = dims_.size();
  const std::size_t k = model.k();
  if (model.dims != dims_) throw std::invalid_argument("Assembler: model dimensions differ");

  State st;
  st.grids.reserve(d);
  st.kq.resize(d);
  for (std::size_t i = 0; i < d; ++i) {
    st.grids.push_back(make_grid(dims_[i], *disc_.rules[i], model.beta(i)));
    const auto& g = st.grids.back();
    for (const auto& ker : kernels_[i]) {
      std::vector<double> kq(g.size());
      for (std::size_t q = 0; q < g.size(); ++q) {
        kq[q] = g.omega[q] * ker.weight.value(g.x[q]);
        if (!std::isfinite(kq[q]))
          throw AssemblyError("non-finite weight '" + ker.weight.name + "' in dimension " +
                              std::to_string(i) + " at node " + std::to_string(q));
      }
      st.kq[i].push_back(std::move(kq));
    }
  }

  st.comps.resize(k);
  for (std::size_t l = 0; l < k; ++l)
    for (std::size_t i = 0; i < d; ++i)
      st.comps[l].push_back(component_values(model, l, i, st.grids[i], st.kq[i][mass_kernel_[i]]));

  st.table = FactorTable(k, d, max_kernels_);
  for (std::size_t m = 0; m < k; ++m)
    for (std::size_t n = m; n < k; ++n)
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t u = 0; u < kernels_[i].size(); ++u) {
          const auto& ker = kernels_[i][u];
          const Matrix& left = ker.deriv_left ? st.comps[m][i].derivs : st.comps[m][i].values;
          const Matrix& right = ker.deriv_right ? st.comps[n][i].derivs : st.comps[n][i].values;
          const auto& kq = st.kq[i][u];
          const std::size_t pm = left.rows(), pn = right.rows(), nq = kq.size();
          Matrix f(pm, pn);
          std::vector<double> tmp(nq);
          for (std::size_t j = 0; j < pm; ++j) {
            const auto lr = left.row(j);
            for (std::size_t q = 0; q < nq; ++q) tmp[q] = kq[q] * lr[q];
            for (std::size_t jj = 0; jj < pn; ++jj) {
              const auto rr = right.row(jj);
              double s = 0.0;
              for (std::size_t q = 0; q < nq; ++q) s += tmp[q] * rr[q];
              if (!std::isfinite(s))
                throw AssemblyError("non-finite factor for pair (" + std::to_string(m) + "," +
                                    std::to_string(n) + "), dimension " + std::to_string(i) +
                                    ", kernel '" + ker.key() + "'");
              f(j, jj) = s;
            }
          }
          st.stats.factor_ops += pm * pn * nq;
          st.table.at(m, n, i, u) = std::move(f);
        }

  st.matrices.assign(forms_.size(), Matrix(k, k));
  for (std::size_t f = 0; f < forms_.size(); ++f)
    for (std::size_t m = 0; m < k; ++m)
      for (std::size_t n = m; n < k; ++n) {
        const auto& cm = model.nets[m].coeffs;
        const auto& cn = model.nets[n].coeffs;
        double total = 0.0;
        for (std::size_t t = 0; t < forms_[f].terms.size(); ++t) {
          const double coef = forms_[f].terms[t].coefficient;
          double term = 0.0;
          for (std::size_t j = 0; j < cm.size(); ++j) {
            double row = 0.0;
            for (std::size_t jj = 0; jj < cn.size(); ++jj) {
              double prod = 1.0;
              for (std::size_t i = 0; i < d; ++i)
                prod *= st.table.at(m, n, i, term_kernels_[f][t][i])(j, jj);
              row += prod * cn[jj];
            }
            term += cm[j] * row;
          }
          st.stats.product_ops += cm.size() * cn.size() * d;
          total += coef * term;
        }
        st.matrices[f](m, n) = total;
        st.matrices[f](n, m) = total;
      }
  return st;
}

std::vector<double> Assembler::backward(const TnnModel& model, const State& st,
                                        const std::vector<Matrix>& adjoints) const {
  const std::size_t d = dims_.size();
  const std::size_t k = model.k();
  if (adjoints.size() != forms_.size()) throw std::invalid_argument("Assembler: adjoint count");
  for (const auto& g : adjoints)
    if (g.rows() != k || g.cols() != k) throw std::invalid_argument("Assembler: adjoint shape mismatch");

  const ParamLayout lay = param_layout(model);
  std::vector<double> grad(lay.total, 0.0);

  // adjoints of the factor blocks, same indexing as the table
  FactorTable fbar(k, d, max_kernels_);
  std::vector<std::vector<std::vector<bool>>> touched(
      k * k, std::vector<std::vector<bool>>(d, std::vector<bool>(max_kernels_, false)));

  std::vector<double> prefix(d + 1), suffix(d + 1);
  for (std::size_t m = 0; m < k; ++m)
    for (std::size_t n = m; n < k; ++n) {
      const auto& cm = model.nets[m].coeffs;
      const auto& cn = model.nets[n].coeffs;
      double* cbar_m = grad.data() + lay.coeffs[m];
      double* cbar_n = grad.data() + lay.coeffs[n];
      for (std::size_t f = 0; f < forms_.size(); ++f) {
        const double g = (m == n) ? adjoints[f](m, m) : adjoints[f](m, n) + adjoints[f](n, m);
        if (g == 0.0) continue;
        for (std::size_t t = 0; t < forms_[f].terms.size(); ++t) {
          const double gc = g * forms_[f].terms[t].coefficient;
          const auto& tk = term_kernels_[f][t];
          for (std::size_t i = 0; i < d; ++i) {
            Matrix& fb = fbar.at(m, n, i, tk[i]);
            if (fb.empty()) fb = Matrix(cm.size(), cn.size());
            touched[m * k + n][i][tk[i]] = true;
          }
          for (std::size_t j = 0; j < cm.size(); ++j)
            for (std::size_t jj = 0; jj < cn.size(); ++jj) {
              prefix[0] = 1.0;
              for (std::size_t i = 0; i < d; ++i)
                prefix[i + 1] = prefix[i] * st.table.at(m, n, i, tk[i])(j, jj);
              suffix[d] = 1.0;
              for (std::size_t i = d; i-- > 0;)
                suffix[i] = suffix[i + 1] * st.table.at(m, n, i, tk[i])(j, jj);
              const double prod = prefix[d];
              cbar_m[j] += gc * prod * cn[jj];
              cbar_n[jj] += gc * cm[j] * prod;
              const double w = gc * cm[j] * cn[jj];
              for (std::size_t i = 0; i < d; ++i)
                fbar.at(m, n, i, tk[i])(j, jj) += w * prefix[i] * suffix[i + 1];
            }
        }
      }
    }

  // factor adjoints -> component adjoints and weight adjoints
  std::vector<std::vector<Matrix>> vbar(k), dbar(k);
  for (std::size_t l = 0; l < k; ++l)
    for (std::size_t i = 0; i < d; ++i) {
      vbar[l].emplace_back(st.comps[l][i].values.rows(), st.comps[l][i].values.cols());
      dbar[l].emplace_back(st.comps[l][i].values.rows(), st.comps[l][i].values.cols());
    }
  std::vector<std::vector<std::vector<double>>> kqbar(d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t u = 0; u < kernels_[i].size(); ++u) kqbar[i].emplace_back(st.grids[i].size(), 0.0);

  for (std::size_t m = 0; m < k; ++m)
    for (std::size_t n = m; n < k; ++n)
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t u = 0; u < kernels_[i].size(); ++u) {
          if (!touched[m * k + n][i][u]) continue;
          const Matrix& fb = fbar.at(m, n, i, u);
          const auto& ker = kernels_[i][u];
          const Matrix& left = ker.deriv_left ? st.comps[m][i].derivs : st.comps[m][i].values;
          const Matrix& right = ker.deriv_right ? st.comps[n][i].derivs : st.comps[n][i].values;
          Matrix& lbar = ker.deriv_left ? dbar[m][i] : vbar[m][i];
          Matrix& rbar = ker.deriv_right ? dbar[n][i] : vbar[n][i];
          const auto& kq = st.kq[i][u];
          auto& kb = kqbar[i][u];
          const bool need_kq = dims_[i].has_scale();
          const std::size_t pm = left.rows(), pn = right.rows(), nq = kq.size();
          std::vector<double> tmp(nq);
          for (std::size_t j = 0; j < pm; ++j) {
            // tmp = sum_jj fb(j,jj) right(jj,:)
            std::fill(tmp.begin(), tmp.end(), 0.0);
            for (std::size_t jj = 0; jj < pn; ++jj) {
              const double w = fb(j, jj);
              if (w == 0.0) continue;
              const auto rr = right.row(jj);
              for (std::size_t q = 0; q < nq; ++q) tmp[q] += w * rr[q];
            }
            auto lb = lbar.row(j);
            const auto lr = left.row(j);
            for (std::size_t q = 0; q < nq; ++q) lb[q] += kq[q] * tmp[q];
            if (need_kq)
              for (std::size_t q = 0; q < nq; ++q) kb[q] += lr[q] * tmp[q];
          }
          for (std::size_t jj = 0; jj < pn; ++jj) {
            std::fill(tmp.begin(), tmp.end(), 0.0);
            for (std::size_t j = 0; j < pm; ++j) {
              const double w = fb(j, jj);
              if (w == 0.0) continue;
              const auto lr = left.row(j);
              for (std::size_t q = 0; q < nq; ++q) tmp[q] += w * lr[q];
            }
            auto rb = rbar.row(jj);
            for (std::size_t q = 0; q < nq; ++q) rb[q] += kq[q] * tmp[q];
          }
        }

  std::vector<double> beta_bar(d, 0.0);
  for (std::size_t l = 0; l < k; ++l)
    for (std::size_t i = 0; i < d; ++i) {
      const std::size_t nparams = model.nets[l].subnets[i].parameter_count();
      std::span<double> sg(grad.data() + lay.subnet[l][i], nparams);
      std::span<double> shg;
      if (lay.shifts[l][i] != ParamLayout::npos)
        shg = std::span<double>(grad.data() + lay.shifts[l][i], model.nets[l].shifts[i].size());
      const std::size_t mk = mass_kernel_[i];
      beta_bar[i] += component_backward(model, l, i, st.grids[i], st.kq[i][mk], st.comps[l][i],
                                        vbar[l][i], dbar[l][i], sg, shg, kqbar[i][mk]);
    }

  for (std::size_t i = 0; i < d; ++i) {
    if (!dims_[i].has_scale()) continue;
    const auto& g = st.grids[i];
    const double beta = g.beta;
    double bb = beta_bar[i];
    for (std::size_t u = 0; u < kernels_[i].size(); ++u) {
      const auto& w = kernels_[i][u].weight;
      for (std::size_t q = 0; q < g.size(); ++q) {
        // kq = (w_q/beta) W(z_q/beta)
        const double dkq = -st.kq[i][u][q] / beta - g.omega[q] * w.derivative(g.x[q]) * g.x[q] / beta;
        bb += kqbar[i][u][q] * dkq;
      }
    }
    grad[lay.log_beta[i]] += bb * beta;
  }
  return grad;
}

AssembledPair assemble(const TnnModel& model, const FormPair& forms) {
  const Assembler as(model.dims, {forms.a, forms.b}, 1);
  auto st = as.forward(model);
  return {std::move(st.matrices[0]), std::move(st.matrices[1])};
}

std::vector<double> assemble_gradient(const TnnModel& model, const FormPair& forms,
                                      const Matrix& grad_a, const Matrix& grad_b) {
  const Assembler as(model.dims, {forms.a, forms.b}, 1);
  const auto st = as.forward(model);
  return as.backward(model, st, {grad_a, grad_b});
}

}  // namespace tnn
