// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "losnet/nn/gru.hpp"
#include "losnet/nn/layer.hpp"
#include "losnet/nn/lstm.hpp"

namespace losnet::nn {

enum class Direction { forward, bidirectional };

std::string_view to_string(Direction d);
Direction parse_direction(std::string_view name);

namespace detail {

using Mat = RowMatrix<double>;
using MatRef = Eigen::Ref<Mat>;
using ConstMatRef = Eigen::Ref<const Mat>;

/// Rows stacked gate by gate: result row g*H + j is row j of parts[g].
template <std::size_t N>
Mat stack_rows(const std::array<const Tensor*, N>& parts) {
  const auto rows = static_cast<Eigen::Index>(parts[0]->extent(0));
  const auto cols = static_cast<Eigen::Index>(parts[0]->size()) / rows;
  Mat out(rows * static_cast<Eigen::Index>(N), cols);
  for (std::size_t g = 0; g < N; ++g)
    out.middleRows(static_cast<Eigen::Index>(g) * rows, rows) =
        Eigen::Map<const Mat>(parts[g]->raw(), rows, cols);
  return out;
}

template <std::size_t N>
void unstack_rows(const Mat& m, const std::array<Tensor*, N>& parts) {
  const auto rows = static_cast<Eigen::Index>(parts[0]->extent(0));
  const auto cols = static_cast<Eigen::Index>(parts[0]->size()) / rows;
  for (std::size_t g = 0; g < N; ++g)
    Eigen::Map<Mat>(parts[g]->raw(), rows, cols) =
        m.middleRows(static_cast<Eigen::Index>(g) * rows, rows);
}

}  // namespace detail

/// Per-cell glue for RecurrentLayer. Gate pre-activations are laid out as
/// [batch x gates*hidden]; the input projection of every step is computed in
/// one product up front and the weight gradients in one product after the
/// backward sweep. Buffers hold per-step rows in processing order.
template <typename Cell>
struct RecurrentTraits;

template <>
struct RecurrentTraits<GruCell> {
  using Mat = detail::Mat;
  static constexpr std::string_view name = "gru";
  static constexpr Eigen::Index gates = 3;

  struct State {
    Mat h;
  };
  struct Buffers {
    Mat h_prev, zr, cand;
    void resize(Eigen::Index rows, Eigen::Index hidden) {
      h_prev.resize(rows, hidden);
      zr.resize(rows, 2 * hidden);
      cand.resize(rows, hidden);
    }
  };

  static Mat input_weights(const GruCell& c) {
    return detail::stack_rows<3>({&c.w_z, &c.w_r, &c.w_h});
  }
  static Mat recurrent_weights(const GruCell& c) {
    return detail::stack_rows<3>({&c.u_z, &c.u_r, &c.u_h});
  }
  static Eigen::RowVectorXd bias(const GruCell& c) {
    return detail::stack_rows<3>({&c.b_z, &c.b_r, &c.b_h}).transpose();
  }
  static State zero(Eigen::Index batch, Eigen::Index hidden) {
    return {Mat::Zero(batch, hidden)};
  }

  static void step(const Mat& u, detail::ConstMatRef pre, State& s,
                   Buffers* buf, Eigen::Index row0) {
    const Eigen::Index b = s.h.rows(), hd = s.h.cols();
    Mat zr = pre.leftCols(2 * hd);
    zr.noalias() += s.h * u.topRows(2 * hd).transpose();
    zr = sigmoid_array(zr.array()).matrix();
    const Mat gated = zr.rightCols(hd).cwiseProduct(s.h);
    Mat c = pre.rightCols(hd);
    c.noalias() += gated * u.bottomRows(hd).transpose();
    c = tanh_array(c.array()).matrix();
    if (buf) {
      buf->h_prev.middleRows(row0, b) = s.h;
      buf->zr.middleRows(row0, b) = zr;
      buf->cand.middleRows(row0, b) = c;
    }
    s.h += zr.leftCols(hd).cwiseProduct(c - s.h);
  }

  /// `ds` holds dL/d(new state) on entry and dL/d(previous state) on exit;
  /// writes the step's pre-activation gradients into `da`.
  static void backward_step(const Mat& u, const Buffers& buf, Eigen::Index row0,
                            State& ds, detail::MatRef da) {
    const Eigen::Index b = ds.h.rows(), hd = ds.h.cols();
    const auto hp = buf.h_prev.middleRows(row0, b);
    const auto z = buf.zr.middleRows(row0, b).leftCols(hd);
    const auto r = buf.zr.middleRows(row0, b).rightCols(hd);
    const auto c = buf.cand.middleRows(row0, b);
    const auto one = Mat::Ones(b, hd).array();

    da.rightCols(hd) = (ds.h.array() * z.array() * (one - c.array().square())).matrix();
    const Mat dgated = da.rightCols(hd) * u.bottomRows(hd);
    da.leftCols(hd) = (ds.h.array() * (c.array() - hp.array()) * z.array() *
                       (one - z.array())).matrix();
    da.middleCols(hd, hd) = (dgated.array() * hp.array() * r.array() *
                             (one - r.array())).matrix();
    Mat dh_prev = (ds.h.array() * (one - z.array()) +
                   dgated.array() * r.array()).matrix();
    dh_prev.noalias() += da.leftCols(2 * hd) * u.topRows(2 * hd);
    ds.h = std::move(dh_prev);
  }

  static void parameter_grads(const Buffers& buf, const Mat& da, const Mat& xs,
                              GruCell& g) {
    const Eigen::Index hd = buf.h_prev.cols();
    detail::unstack_rows<3>(da.transpose() * xs, {&g.w_z, &g.w_r, &g.w_h});
    const Mat du_zr = da.leftCols(2 * hd).transpose() * buf.h_prev;
    const Mat gated = buf.zr.rightCols(hd).cwiseProduct(buf.h_prev);
    const Mat du_h = da.rightCols(hd).transpose() * gated;
    g.u_z.as_matrix() = du_zr.topRows(hd);
    g.u_r.as_matrix() = du_zr.bottomRows(hd);
    g.u_h.as_matrix() = du_h;
    const Eigen::RowVectorXd db = da.colwise().sum();
    g.b_z.as_vector() = db.segment(0, hd).transpose();
    g.b_r.as_vector() = db.segment(hd, hd).transpose();
    g.b_h.as_vector() = db.segment(2 * hd, hd).transpose();
  }
};

template <>
struct RecurrentTraits<LstmCell> {
  using Mat = detail::Mat;
  static constexpr std::string_view name = "lstm";
  static constexpr Eigen::Index gates = 4;

  struct State {
    Mat h, c;
  };
  struct Buffers {
    Mat h_prev, c_prev, act, tanh_c;
    void resize(Eigen::Index rows, Eigen::Index hidden) {
      h_prev.resize(rows, hidden);
      c_prev.resize(rows, hidden);
      act.resize(rows, 4 * hidden);
      tanh_c.resize(rows, hidden);
    }
  };

  static Mat input_weights(const LstmCell& c) {
    return detail::stack_rows<4>({&c.w_i, &c.w_f, &c.w_o, &c.w_g});
  }
  static Mat recurrent_weights(const LstmCell& c) {
    return detail::stack_rows<4>({&c.u_i, &c.u_f, &c.u_o, &c.u_g});
  }
  static Eigen::RowVectorXd bias(const LstmCell& c) {
    return detail::stack_rows<4>({&c.b_i, &c.b_f, &c.b_o, &c.b_g}).transpose();
  }
  static State zero(Eigen::Index batch, Eigen::Index hidden) {
    return {Mat::Zero(batch, hidden), Mat::Zero(batch, hidden)};
  }

  static void step(const Mat& u, detail::ConstMatRef pre, State& s,
                   Buffers* buf, Eigen::Index row0) {
    const Eigen::Index b = s.h.rows(), hd = s.h.cols();
    Mat a = pre;
    a.noalias() += s.h * u.transpose();
    a.leftCols(3 * hd) = sigmoid_array(a.leftCols(3 * hd).array()).matrix();
    a.rightCols(hd) = tanh_array(a.rightCols(hd).array()).matrix();
    Mat c = (a.middleCols(hd, hd).array() * s.c.array() +
             a.leftCols(hd).array() * a.rightCols(hd).array()).matrix();
    Mat tc = tanh_array(c.array()).matrix();
    if (buf) {
      buf->h_prev.middleRows(row0, b) = s.h;
      buf->c_prev.middleRows(row0, b) = s.c;
      buf->act.middleRows(row0, b) = a;
      buf->tanh_c.middleRows(row0, b) = tc;
    }
    s.h = a.middleCols(2 * hd, hd).cwiseProduct(tc);
    s.c = std::move(c);
  }

  static void backward_step(const Mat& u, const Buffers& buf, Eigen::Index row0,
                            State& ds, detail::MatRef da) {
    const Eigen::Index b = ds.h.rows(), hd = ds.h.cols();
    const auto a = buf.act.middleRows(row0, b);
    const auto i = a.leftCols(hd).array();
    const auto f = a.middleCols(hd, hd).array();
    const auto o = a.middleCols(2 * hd, hd).array();
    const auto g = a.rightCols(hd).array();
    const auto tc = buf.tanh_c.middleRows(row0, b).array();
    const auto cp = buf.c_prev.middleRows(row0, b).array();

    const Mat dc = (ds.c.array() + ds.h.array() * o * (1.0 - tc.square())).matrix();
    const auto dca = dc.array();
    da.leftCols(hd) = (dca * g * i * (1.0 - i)).matrix();
    da.middleCols(hd, hd) = (dca * cp * f * (1.0 - f)).matrix();
    da.middleCols(2 * hd, hd) = (ds.h.array() * tc * o * (1.0 - o)).matrix();
    da.rightCols(hd) = (dca * i * (1.0 - g.square())).matrix();
    ds.c = (dca * f).matrix();
    ds.h.noalias() = da * u;
  }

  static void parameter_grads(const Buffers& buf, const Mat& da, const Mat& xs,
                              LstmCell& g) {
    const Eigen::Index hd = buf.h_prev.cols();
    detail::unstack_rows<4>(da.transpose() * xs, {&g.w_i, &g.w_f, &g.w_o, &g.w_g});
    detail::unstack_rows<4>(da.transpose() * buf.h_prev,
                            {&g.u_i, &g.u_f, &g.u_o, &g.u_g});
    const Eigen::RowVectorXd db = da.colwise().sum();
    g.b_i.as_vector() = db.segment(0, hd).transpose();
    g.b_f.as_vector() = db.segment(hd, hd).transpose();
    g.b_o.as_vector() = db.segment(2 * hd, hd).transpose();
    g.b_g.as_vector() = db.segment(3 * hd, hd).transpose();
  }
};

/// Runs a cell over [batch x steps x features]. A bidirectional layer owns a
/// second cell that reads the reversed sequence; its outputs are re-reversed
/// and concatenated after the forward ones. With return_sequences=false the
/// output is the final state of each direction, [batch x hidden*dirs].
template <typename Cell>
class RecurrentLayer final : public Layer {
  using Traits = RecurrentTraits<Cell>;
  using Mat = RowMatrix<double>;
  using Strided = Eigen::Map<Mat, 0, Eigen::OuterStride<>>;
  using ConstStrided = Eigen::Map<const Mat, 0, Eigen::OuterStride<>>;

 public:
  RecurrentLayer(Cell forward_cell, bool return_sequences)
      : cells_{std::move(forward_cell)}, return_sequences_(return_sequences) {
    cells_[0].validate();
  }

  RecurrentLayer(Cell forward_cell, Cell backward_cell, bool return_sequences)
      : cells_{std::move(forward_cell), std::move(backward_cell)},
        return_sequences_(return_sequences) {
    cells_[0].validate();
    cells_[1].validate();
    if (cells_[0].hidden_size() != cells_[1].hidden_size() ||
        cells_[0].input_size() != cells_[1].input_size()) {
      throw DimensionError(std::string(Traits::name) +
                           ": bidirectional cells differ in size");
    }
  }

  static RecurrentLayer glorot(std::size_t input, std::size_t hidden,
                               Direction direction, bool return_sequences,
                               Rng& rng) {
    auto fwd = Cell::glorot(input, hidden, rng);
    if (direction == Direction::forward)
      return RecurrentLayer(std::move(fwd), return_sequences);
    auto bwd = Cell::glorot(input, hidden, rng);
    return RecurrentLayer(std::move(fwd), std::move(bwd), return_sequences);
  }

  std::size_t directions() const { return cells_.size(); }
  std::size_t hidden_size() const { return cells_[0].hidden_size(); }
  std::size_t input_size() const { return cells_[0].input_size(); }
  bool return_sequences() const { return return_sequences_; }
  const Cell& cell(std::size_t dir) const { return cells_.at(dir); }

  std::string_view kind() const override { return Traits::name; }

  Shape output_shape(const Shape& input) const override {
    if (input.size() != 3 || input[2] != input_size()) {
      throw DimensionError(std::string(Traits::name) + ": input " +
                           shape_string(input) + " is not [batch x steps x " +
                           std::to_string(input_size()) + "]");
    }
    const std::size_t width = hidden_size() * directions();
    if (return_sequences_) return {input[0], input[1], width};
    return {input[0], width};
  }

  ForwardResult forward(const Tensor& x) const override {
    auto cache = make_cache<Cache>(output_shape(x.shape()));
    Tensor y = run(x, cache.get());
    require_finite(y, Traits::name);
    return {std::move(y), std::move(cache)};
  }

  Tensor infer(const Tensor& x) const override {
    output_shape(x.shape());
    Tensor y = run(x, nullptr);
    require_finite(y, Traits::name);
    return y;
  }

  LayerGradients backward(const LayerCache& cache,
                          const Tensor& upstream) const override {
    const auto& c = this->template checked_cache<Cache>(cache, upstream);
    const std::size_t batch = c.input_shape[0], steps = c.input_shape[1];
    const std::size_t hidden = hidden_size(), width = hidden * directions();
    const auto b = static_cast<Eigen::Index>(batch);
    const auto hd = static_cast<Eigen::Index>(hidden);
    const auto rows = b * static_cast<Eigen::Index>(steps);

    Tensor dx(c.input_shape);
    LayerGradients g;
    for (std::size_t dir = 0; dir < directions(); ++dir) {
      const Cell& cell = cells_[dir];
      const auto& buf = c.buffers[dir];
      const Mat u = Traits::recurrent_weights(cell);
      Mat da(rows, Traits::gates * hd);
      auto ds = Traits::zero(b, hd);
      if (!return_sequences_) {
        ds.h = ConstStrided(upstream.raw() + dir * hidden, b, hd,
                            Eigen::OuterStride<>(static_cast<Eigen::Index>(width)));
      }
      for (std::size_t k = steps; k-- > 0;) {
        const std::size_t t = dir == 0 ? k : steps - 1 - k;
        if (return_sequences_) {
          ds.h += ConstStrided(upstream.raw() + t * width + dir * hidden, b, hd,
                               Eigen::OuterStride<>(
                                   static_cast<Eigen::Index>(steps * width)));
        }
        const auto row0 = static_cast<Eigen::Index>(k) * b;
        Traits::backward_step(u, buf, row0, ds, da.middleRows(row0, b));
      }
      Cell grads = Cell::zeros(input_size(), hidden);
      Traits::parameter_grads(buf, da, c.xs[dir], grads);
      scatter_add(Mat(da * Traits::input_weights(cell)), dir, dx);
      for (const auto* p : grads.params()) g.params.push_back(*p);
    }
    g.input = std::move(dx);
    return g;
  }

  std::unique_ptr<Layer> clone() const override {
    return std::make_unique<RecurrentLayer>(*this);
  }

  std::vector<const Tensor*> parameters() const override {
    std::vector<const Tensor*> out;
    for (const auto& cell : cells_)
      for (const auto* p : cell.params()) out.push_back(p);
    return out;
  }

 private:
  struct Cache : LayerCache {
    Shape input_shape;
    // Per direction, rows ordered (processing step, sample).
    std::vector<Mat> xs;
    std::vector<typename Traits::Buffers> buffers;
  };

  /// Gathers x into [steps*batch x features] in the direction's step order.
  Mat gather(const Tensor& x, std::size_t dir) const {
    const std::size_t batch = x.extent(0), steps = x.extent(1),
                      features = x.extent(2);
    const auto b = static_cast<Eigen::Index>(batch);
    const auto f = static_cast<Eigen::Index>(features);
    Mat xs(b * static_cast<Eigen::Index>(steps), f);
    for (std::size_t k = 0; k < steps; ++k) {
      const std::size_t t = dir == 0 ? k : steps - 1 - k;
      xs.middleRows(static_cast<Eigen::Index>(k) * b, b) =
          ConstStrided(x.raw() + t * features, b, f,
                       Eigen::OuterStride<>(static_cast<Eigen::Index>(steps * features)));
    }
    return xs;
  }

  void scatter_add(const Mat& dxs, std::size_t dir, Tensor& dx) const {
    const std::size_t batch = dx.extent(0), steps = dx.extent(1),
                      features = dx.extent(2);
    const auto b = static_cast<Eigen::Index>(batch);
    for (std::size_t k = 0; k < steps; ++k) {
      const std::size_t t = dir == 0 ? k : steps - 1 - k;
      Strided(dx.raw() + t * features, b, static_cast<Eigen::Index>(features),
              Eigen::OuterStride<>(static_cast<Eigen::Index>(steps * features))) +=
          dxs.middleRows(static_cast<Eigen::Index>(k) * b, b);
    }
  }

  Tensor run(const Tensor& x, Cache* cache) const {
    const std::size_t batch = x.extent(0), steps = x.extent(1);
    const std::size_t hidden = hidden_size(), width = hidden * directions();
    const auto b = static_cast<Eigen::Index>(batch);
    const auto hd = static_cast<Eigen::Index>(hidden);
    Tensor y(output_shape(x.shape()));
    if (cache) {
      cache->input_shape = x.shape();
      cache->xs.resize(directions());
      cache->buffers.resize(directions());
    }
    for (std::size_t dir = 0; dir < directions(); ++dir) {
      const Cell& cell = cells_[dir];
      Mat xs = gather(x, dir);
      Mat pre = xs * Traits::input_weights(cell).transpose();
      pre.rowwise() += Traits::bias(cell);
      const Mat u = Traits::recurrent_weights(cell);
      typename Traits::Buffers* buf = nullptr;
      if (cache) {
        cache->xs[dir] = std::move(xs);
        buf = &cache->buffers[dir];
        buf->resize(pre.rows(), hd);
      }
      auto state = Traits::zero(b, hd);
      for (std::size_t k = 0; k < steps; ++k) {
        const std::size_t t = dir == 0 ? k : steps - 1 - k;
        const auto row0 = static_cast<Eigen::Index>(k) * b;
        Traits::step(u, pre.middleRows(row0, b), state, buf, row0);
        if (return_sequences_) {
          Strided(y.raw() + t * width + dir * hidden, b, hd,
                  Eigen::OuterStride<>(
                      static_cast<Eigen::Index>(steps * width))) = state.h;
        }
      }
      if (!return_sequences_) {
        Strided(y.raw() + dir * hidden, b, hd,
                Eigen::OuterStride<>(static_cast<Eigen::Index>(width))) =
            state.h;
      }
    }
    return y;
  }

  std::vector<Cell> cells_;
  bool return_sequences_;
};

using GruLayer = RecurrentLayer<GruCell>;
using LstmLayer = RecurrentLayer<LstmCell>;

/// Hidden sequence [batch x steps x hidden] of the top layer and its final
/// state [batch x hidden].
struct SequenceOutput {
  Tensor hidden_sequence;
  Tensor final_state;
};

/// Left-to-right pass through a stack of GRU cells (h0 = 0); layer l reads
/// layer l-1's hidden sequence.
SequenceOutput gru_sequence_forward(std::span<const GruCell> stack,
                                    const Tensor& x);

/// Forward cell on x, backward cell on reversed x; per-step outputs
/// concatenated as [forward | backward] -> [batch x steps x 2*hidden].
Tensor bilstm_forward(const LstmCell& forward_cell,
                      const LstmCell& backward_cell, const Tensor& x);

}  // namespace losnet::nn
