// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <utility>

#include "losnet/nn/activation.hpp"
#include "losnet/rng.hpp"
#include "losnet/tensor.hpp"

namespace losnet::nn {

/// Gated recurrent unit parameters. W_* map input to hidden
/// ([hidden x input]), U_* map hidden to hidden, b_* are [hidden].
template <typename Scalar>
struct BasicGruCell {
  BasicTensor<Scalar> w_z, w_r, w_h;
  BasicTensor<Scalar> u_z, u_r, u_h;
  BasicTensor<Scalar> b_z, b_r, b_h;

  static BasicGruCell zeros(std::size_t input, std::size_t hidden) {
    const Shape w{hidden, input}, u{hidden, hidden}, b{hidden};
    return {BasicTensor<Scalar>(w), BasicTensor<Scalar>(w),
            BasicTensor<Scalar>(w), BasicTensor<Scalar>(u),
            BasicTensor<Scalar>(u), BasicTensor<Scalar>(u),
            BasicTensor<Scalar>(b), BasicTensor<Scalar>(b),
            BasicTensor<Scalar>(b)};
  }

  /// Glorot-uniform weights, zero biases.
  static BasicGruCell glorot(std::size_t input, std::size_t hidden, Rng& rng) {
    auto cell = zeros(input, hidden);
    const Scalar lw = std::sqrt(Scalar(6) / Scalar(input + hidden));
    const Scalar lu = std::sqrt(Scalar(6) / Scalar(hidden + hidden));
    for (auto* w : {&cell.w_z, &cell.w_r, &cell.w_h})
      for (auto& v : w->data()) v = Scalar(rng.uniform(-lw, lw));
    for (auto* u : {&cell.u_z, &cell.u_r, &cell.u_h})
      for (auto& v : u->data()) v = Scalar(rng.uniform(-lu, lu));
    return cell;
  }

  std::size_t input_size() const { return w_z.extent(1); }
  std::size_t hidden_size() const { return w_z.extent(0); }

  std::array<BasicTensor<Scalar>*, 9> params() {
    return {&w_z, &w_r, &w_h, &u_z, &u_r, &u_h, &b_z, &b_r, &b_h};
  }
  std::array<const BasicTensor<Scalar>*, 9> params() const {
    return {&w_z, &w_r, &w_h, &u_z, &u_r, &u_h, &b_z, &b_r, &b_h};
  }

  void validate() const {
    const std::size_t h = hidden_size(), in = input_size();
    for (const auto* w : {&w_z, &w_r, &w_h})
      if (w->shape() != Shape{h, in})
        throw DimensionError("gru: input weight " + shape_string(w->shape()) +
                             " inconsistent with " + shape_string({h, in}));
    for (const auto* u : {&u_z, &u_r, &u_h})
      if (u->shape() != Shape{h, h})
        throw DimensionError("gru: recurrent weight " +
                             shape_string(u->shape()) + " inconsistent");
    for (const auto* b : {&b_z, &b_r, &b_h})
      if (b->shape() != Shape{h})
        throw DimensionError("gru: bias " + shape_string(b->shape()) +
                             " inconsistent");
  }
};

using GruCell = BasicGruCell<double>;

template <typename Scalar>
struct GruStepCache {
  RowMatrix<Scalar> x, h_prev, z, r, candidate;
};

/// One batched step: rows of `x` are samples.
///   z = sigmoid(x W_z' + h U_z' + b_z)
///   r = sigmoid(x W_r' + h U_r' + b_r)
///   c = tanh(x W_h' + (r .* h) U_h' + b_h)
///   h_t = (1 - z) .* h + z .* c
template <typename Scalar, typename DX, typename DH>
RowMatrix<Scalar> gru_step(const BasicGruCell<Scalar>& cell,
                           const Eigen::MatrixBase<DX>& x,
                           const Eigen::MatrixBase<DH>& h_prev,
                           GruStepCache<Scalar>* cache) {
  using M = RowMatrix<Scalar>;
  const auto sig = [](Scalar v) { return sigmoid(v); };
  const auto tnh = [](Scalar v) { return std::tanh(v); };

  M z = x * cell.w_z.as_matrix().transpose();
  z.noalias() += h_prev * cell.u_z.as_matrix().transpose();
  z.rowwise() += cell.b_z.as_vector().transpose();
  z = z.unaryExpr(sig);

  M r = x * cell.w_r.as_matrix().transpose();
  r.noalias() += h_prev * cell.u_r.as_matrix().transpose();
  r.rowwise() += cell.b_r.as_vector().transpose();
  r = r.unaryExpr(sig);

  const M gated = r.cwiseProduct(h_prev);
  M c = x * cell.w_h.as_matrix().transpose();
  c.noalias() += gated * cell.u_h.as_matrix().transpose();
  c.rowwise() += cell.b_h.as_vector().transpose();
  c = c.unaryExpr(tnh);

  M h = h_prev + z.cwiseProduct(c - h_prev);
  if (cache) {
    cache->x = x;
    cache->h_prev = h_prev;
    cache->z = std::move(z);
    cache->r = std::move(r);
    cache->candidate = std::move(c);
  }
  return h;
}

/// Backward through one step. Accumulates parameter gradients into `grads`
/// and returns (dL/dx, dL/dh_prev).
template <typename Scalar>
std::pair<RowMatrix<Scalar>, RowMatrix<Scalar>> gru_step_backward(
    const BasicGruCell<Scalar>& cell, const GruStepCache<Scalar>& c,
    const RowMatrix<Scalar>& dh, BasicGruCell<Scalar>& grads) {
  using M = RowMatrix<Scalar>;
  const Scalar one(1);

  const M dz = dh.cwiseProduct(c.candidate - c.h_prev);
  const M dcand = dh.cwiseProduct(c.z);
  M dh_prev = dh - dh.cwiseProduct(c.z);

  const M da_h = dcand.cwiseProduct(
      (one - c.candidate.array().square()).matrix());
  const M gated = c.r.cwiseProduct(c.h_prev);
  grads.w_h.as_matrix().noalias() += da_h.transpose() * c.x;
  grads.u_h.as_matrix().noalias() += da_h.transpose() * gated;
  grads.b_h.as_vector() += da_h.colwise().sum().transpose();
  M dx = da_h * cell.w_h.as_matrix();
  const M dgated = da_h * cell.u_h.as_matrix();
  const M dr = dgated.cwiseProduct(c.h_prev);
  dh_prev += dgated.cwiseProduct(c.r);

  const M da_z =
      dz.cwiseProduct((c.z.array() * (one - c.z.array())).matrix());
  grads.w_z.as_matrix().noalias() += da_z.transpose() * c.x;
  grads.u_z.as_matrix().noalias() += da_z.transpose() * c.h_prev;
  grads.b_z.as_vector() += da_z.colwise().sum().transpose();
  dx.noalias() += da_z * cell.w_z.as_matrix();
  dh_prev.noalias() += da_z * cell.u_z.as_matrix();

  const M da_r =
      dr.cwiseProduct((c.r.array() * (one - c.r.array())).matrix());
  grads.w_r.as_matrix().noalias() += da_r.transpose() * c.x;
  grads.u_r.as_matrix().noalias() += da_r.transpose() * c.h_prev;
  grads.b_r.as_vector() += da_r.colwise().sum().transpose();
  dx.noalias() += da_r * cell.w_r.as_matrix();
  dh_prev.noalias() += da_r * cell.u_r.as_matrix();

  return {std::move(dx), std::move(dh_prev)};
}

template <typename Scalar>
struct GruStepResult {
  BasicTensor<Scalar> h;
  GruStepCache<Scalar> cache;
};

namespace detail {
template <typename Scalar>
RowMatrix<Scalar> as_rows(const BasicTensor<Scalar>& t, std::size_t width,
                          const char* what) {
  if (t.rank() == 1 && t.extent(0) == width)
    return t.as_vector().transpose();
  if (t.rank() == 2 && t.extent(1) == width) return t.as_matrix();
  throw DimensionError(std::string("recurrent step: ") + what + " shape " +
                       shape_string(t.shape()) + " incompatible with width " +
                       std::to_string(width));
}

template <typename Scalar>
BasicTensor<Scalar> like(const RowMatrix<Scalar>& m,
                         const BasicTensor<Scalar>& shape_of) {
  BasicTensor<Scalar> out(shape_of.rank() == 1
                              ? Shape{static_cast<std::size_t>(m.cols())}
                              : Shape{static_cast<std::size_t>(m.rows()),
                                      static_cast<std::size_t>(m.cols())});
  out.as_matrix() = m;
  return out;
}
}  // namespace detail

/// Tensor-level step; `x_t` is [input] or [batch x input], `h_prev` matches.
template <typename Scalar>
GruStepResult<Scalar> gru_cell_step(const BasicGruCell<Scalar>& cell,
                                    const BasicTensor<Scalar>& x_t,
                                    const BasicTensor<Scalar>& h_prev) {
  cell.validate();
  const auto x = detail::as_rows(x_t, cell.input_size(), "x_t");
  const auto h = detail::as_rows(h_prev, cell.hidden_size(), "h_prev");
  if (x.rows() != h.rows())
    throw DimensionError("gru_cell_step: batch of x_t and h_prev differ");
  GruStepResult<Scalar> out;
  out.h = detail::like(gru_step(cell, x, h, &out.cache), h_prev);
  return out;
}

}  // namespace losnet::nn
