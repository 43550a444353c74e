// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <tuple>

#include "losnet/nn/gru.hpp"

namespace losnet::nn {

/// Long short-term memory parameters: input (i), forget (f), output (o) gates
/// and candidate (g).
template <typename Scalar>
struct BasicLstmCell {
  BasicTensor<Scalar> w_i, w_f, w_o, w_g;
  BasicTensor<Scalar> u_i, u_f, u_o, u_g;
  BasicTensor<Scalar> b_i, b_f, b_o, b_g;

  static BasicLstmCell zeros(std::size_t input, std::size_t hidden) {
    const Shape w{hidden, input}, u{hidden, hidden}, b{hidden};
    using T = BasicTensor<Scalar>;
    return {T(w), T(w), T(w), T(w), T(u), T(u), T(u), T(u),
            T(b), T(b), T(b), T(b)};
  }

  static BasicLstmCell glorot(std::size_t input, std::size_t hidden, Rng& rng) {
    auto cell = zeros(input, hidden);
    const Scalar lw = std::sqrt(Scalar(6) / Scalar(input + hidden));
    const Scalar lu = std::sqrt(Scalar(6) / Scalar(hidden + hidden));
    for (auto* w : {&cell.w_i, &cell.w_f, &cell.w_o, &cell.w_g})
      for (auto& v : w->data()) v = Scalar(rng.uniform(-lw, lw));
    for (auto* u : {&cell.u_i, &cell.u_f, &cell.u_o, &cell.u_g})
      for (auto& v : u->data()) v = Scalar(rng.uniform(-lu, lu));
    return cell;
  }

  std::size_t input_size() const { return w_i.extent(1); }
  std::size_t hidden_size() const { return w_i.extent(0); }

  std::array<BasicTensor<Scalar>*, 12> params() {
    return {&w_i, &w_f, &w_o, &w_g, &u_i, &u_f,
            &u_o, &u_g, &b_i, &b_f, &b_o, &b_g};
  }
  std::array<const BasicTensor<Scalar>*, 12> params() const {
    return {&w_i, &w_f, &w_o, &w_g, &u_i, &u_f,
            &u_o, &u_g, &b_i, &b_f, &b_o, &b_g};
  }

  void validate() const {
    const std::size_t h = hidden_size(), in = input_size();
    const auto p = params();
    for (std::size_t k = 0; k < 12; ++k) {
      const Shape want = k < 4 ? Shape{h, in} : k < 8 ? Shape{h, h} : Shape{h};
      if (p[k]->shape() != want)
        throw DimensionError("lstm: parameter " + std::to_string(k) + " is " +
                             shape_string(p[k]->shape()) + ", expected " +
                             shape_string(want));
    }
  }
};

using LstmCell = BasicLstmCell<double>;

template <typename Scalar>
struct LstmStepCache {
  RowMatrix<Scalar> x, h_prev, c_prev, i, f, o, g, c, tanh_c;
};

template <typename Scalar, typename DX, typename DH, typename DC>
std::pair<RowMatrix<Scalar>, RowMatrix<Scalar>> lstm_step(
    const BasicLstmCell<Scalar>& cell, const Eigen::MatrixBase<DX>& x,
    const Eigen::MatrixBase<DH>& h_prev, const Eigen::MatrixBase<DC>& c_prev,
    LstmStepCache<Scalar>* cache) {
  using M = RowMatrix<Scalar>;
  const auto gate = [&](const BasicTensor<Scalar>& w,
                        const BasicTensor<Scalar>& u,
                        const BasicTensor<Scalar>& b) {
    M a = x * w.as_matrix().transpose();
    a.noalias() += h_prev * u.as_matrix().transpose();
    a.rowwise() += b.as_vector().transpose();
    return a;
  };
  const auto sig = [](Scalar v) { return sigmoid(v); };
  const auto tnh = [](Scalar v) { return std::tanh(v); };

  M i = gate(cell.w_i, cell.u_i, cell.b_i).unaryExpr(sig);
  M f = gate(cell.w_f, cell.u_f, cell.b_f).unaryExpr(sig);
  M o = gate(cell.w_o, cell.u_o, cell.b_o).unaryExpr(sig);
  M g = gate(cell.w_g, cell.u_g, cell.b_g).unaryExpr(tnh);
  M c = f.cwiseProduct(c_prev) + i.cwiseProduct(g);
  M tc = c.unaryExpr(tnh);
  M h = o.cwiseProduct(tc);
  if (cache) {
    cache->x = x;
    cache->h_prev = h_prev;
    cache->c_prev = c_prev;
    cache->i = std::move(i);
    cache->f = std::move(f);
    cache->o = std::move(o);
    cache->g = std::move(g);
    cache->c = c;
    cache->tanh_c = std::move(tc);
  }
  return {std::move(h), std::move(c)};
}

/// Returns (dx, dh_prev, dc_prev). `dc` is the gradient flowing into c_t from
/// later steps.
template <typename Scalar>
std::tuple<RowMatrix<Scalar>, RowMatrix<Scalar>, RowMatrix<Scalar>>
lstm_step_backward(const BasicLstmCell<Scalar>& cell,
                   const LstmStepCache<Scalar>& s, const RowMatrix<Scalar>& dh,
                   const RowMatrix<Scalar>& dc, BasicLstmCell<Scalar>& grads) {
  using M = RowMatrix<Scalar>;
  const Scalar one(1);
  const M dc_total =
      dc + dh.cwiseProduct(s.o).cwiseProduct(
               (one - s.tanh_c.array().square()).matrix());
  const auto sig_grad = [&](const M& y) {
    return (y.array() * (one - y.array())).matrix();
  };
  const M da_o = dh.cwiseProduct(s.tanh_c).cwiseProduct(sig_grad(s.o));
  const M da_f = dc_total.cwiseProduct(s.c_prev).cwiseProduct(sig_grad(s.f));
  const M da_i = dc_total.cwiseProduct(s.g).cwiseProduct(sig_grad(s.i));
  const M da_g = dc_total.cwiseProduct(s.i).cwiseProduct(
      (one - s.g.array().square()).matrix());

  M dx = M::Zero(s.x.rows(), s.x.cols());
  M dh_prev = M::Zero(s.h_prev.rows(), s.h_prev.cols());
  const auto accumulate = [&](const M& da, const BasicTensor<Scalar>& w,
                              const BasicTensor<Scalar>& u,
                              BasicTensor<Scalar>& gw, BasicTensor<Scalar>& gu,
                              BasicTensor<Scalar>& gb) {
    gw.as_matrix().noalias() += da.transpose() * s.x;
    gu.as_matrix().noalias() += da.transpose() * s.h_prev;
    gb.as_vector() += da.colwise().sum().transpose();
    dx.noalias() += da * w.as_matrix();
    dh_prev.noalias() += da * u.as_matrix();
  };
  accumulate(da_i, cell.w_i, cell.u_i, grads.w_i, grads.u_i, grads.b_i);
  accumulate(da_f, cell.w_f, cell.u_f, grads.w_f, grads.u_f, grads.b_f);
  accumulate(da_o, cell.w_o, cell.u_o, grads.w_o, grads.u_o, grads.b_o);
  accumulate(da_g, cell.w_g, cell.u_g, grads.w_g, grads.u_g, grads.b_g);

  M dc_prev = dc_total.cwiseProduct(s.f);
  return {std::move(dx), std::move(dh_prev), std::move(dc_prev)};
}

template <typename Scalar>
struct LstmStepResult {
  BasicTensor<Scalar> h, c;
  LstmStepCache<Scalar> cache;
};

template <typename Scalar>
LstmStepResult<Scalar> lstm_cell_step(const BasicLstmCell<Scalar>& cell,
                                      const BasicTensor<Scalar>& x_t,
                                      const BasicTensor<Scalar>& h_prev,
                                      const BasicTensor<Scalar>& c_prev) {
  cell.validate();
  const auto x = detail::as_rows(x_t, cell.input_size(), "x_t");
  const auto h = detail::as_rows(h_prev, cell.hidden_size(), "h_prev");
  const auto c = detail::as_rows(c_prev, cell.hidden_size(), "c_prev");
  if (x.rows() != h.rows() || h.rows() != c.rows())
    throw DimensionError("lstm_cell_step: batch extents differ");
  LstmStepResult<Scalar> out;
  auto [hn, cn] = lstm_step(cell, x, h, c, &out.cache);
  out.h = detail::like(hn, h_prev);
  out.c = detail::like(cn, c_prev);
  return out;
}

}  // namespace losnet::nn
