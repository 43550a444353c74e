// SPDX-License-Identifier: Apache-2.0
#include "losnet/nn/layers.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace losnet::nn {

using Mat = RowMatrix<double>;
using ConstMatMap = Eigen::Map<const Mat>;
using MatMap = Eigen::Map<Mat>;

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::relu:
      return "relu";
    case Activation::sigmoid:
      return "sigmoid";
    case Activation::tanh:
      return "tanh";
    case Activation::linear:
      break;
  }
  return "linear";
}

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::relu;
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "tanh") return Activation::tanh;
  if (name == "linear") return Activation::linear;
  throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

std::string_view to_string(Padding p) {
  return p == Padding::same ? "same" : "valid";
}

Padding parse_padding(std::string_view name) {
  if (name == "same") return Padding::same;
  if (name == "valid") return Padding::valid;
  throw std::invalid_argument("unknown padding '" + std::string(name) + "'");
}

namespace {

Tensor glorot_tensor(Shape shape, std::size_t fan_in, std::size_t fan_out,
                     Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  return rng_uniform(rng, std::move(shape), -limit, limit);
}

}  // namespace

// ---------------------------------------------------------------- dense

struct DenseCache : LayerCache {
  Tensor input;
};

DenseLayer::DenseLayer(Tensor weights, Tensor bias)
    : weights_(std::move(weights)), bias_(std::move(bias)) {
  if (weights_.rank() != 2 || bias_.rank() != 1 ||
      bias_.extent(0) != weights_.extent(0)) {
    throw DimensionError("dense: weights " + shape_string(weights_.shape()) +
                         " and bias " + shape_string(bias_.shape()) +
                         " are inconsistent");
  }
}

DenseLayer DenseLayer::glorot(std::size_t in, std::size_t out, Rng& rng) {
  return DenseLayer(glorot_tensor({out, in}, in, out, rng), Tensor({out}));
}

Shape DenseLayer::output_shape(const Shape& input) const {
  if (input.empty() || input.back() != in_features()) {
    throw DimensionError("dense: input " + shape_string(input) +
                         " needs trailing extent " +
                         std::to_string(in_features()));
  }
  Shape out = input;
  out.back() = out_features();
  return out;
}

Tensor DenseLayer::infer(const Tensor& x) const {
  Tensor y(output_shape(x.shape()));
  auto ym = y.as_matrix();
  ym.noalias() = x.as_matrix() * weights_.as_matrix().transpose();
  ym.rowwise() += bias_.as_vector().transpose();
  return y;
}

ForwardResult DenseLayer::forward(const Tensor& x) const {
  Tensor y = infer(x);
  auto cache = make_cache<DenseCache>(y.shape());
  cache->input = x;
  return {std::move(y), std::move(cache)};
}

LayerGradients DenseLayer::backward(const LayerCache& cache,
                                    const Tensor& upstream) const {
  const auto& c = checked_cache<DenseCache>(cache, upstream);
  LayerGradients g;
  g.input = Tensor(c.input.shape());
  g.input.as_matrix().noalias() = upstream.as_matrix() * weights_.as_matrix();
  Tensor dw(weights_.shape());
  dw.as_matrix().noalias() = upstream.as_matrix().transpose() * c.input.as_matrix();
  Tensor db(bias_.shape());
  db.as_vector() = upstream.as_matrix().colwise().sum().transpose();
  g.params.push_back(std::move(dw));
  g.params.push_back(std::move(db));
  return g;
}

std::unique_ptr<Layer> DenseLayer::clone() const {
  return std::make_unique<DenseLayer>(*this);
}

// ---------------------------------------------------------------- conv1d

struct ConvCache : LayerCache {
  Tensor input;
};

Conv1dLayer::Conv1dLayer(Tensor kernels, Tensor bias, Padding padding)
    : kernels_(std::move(kernels)), bias_(std::move(bias)), padding_(padding) {
  if (kernels_.rank() != 3 || bias_.rank() != 1 ||
      bias_.extent(0) != kernels_.extent(0)) {
    throw DimensionError("conv1d: kernels " + shape_string(kernels_.shape()) +
                         " and bias " + shape_string(bias_.shape()) +
                         " are inconsistent");
  }
}

Conv1dLayer Conv1dLayer::glorot(std::size_t in_channels, std::size_t filters,
                                std::size_t k, Padding padding, Rng& rng) {
  return Conv1dLayer(glorot_tensor({filters, in_channels, k}, in_channels * k,
                                   filters * k, rng),
                     Tensor({filters}), padding);
}

std::size_t Conv1dLayer::output_length(std::size_t length) const {
  if (padding_ == Padding::same) return length;
  if (length < kernel_size()) {
    throw DimensionError("conv1d: sequence length " + std::to_string(length) +
                         " shorter than kernel " +
                         std::to_string(kernel_size()) + " with valid padding");
  }
  return length - kernel_size() + 1;
}

Shape Conv1dLayer::output_shape(const Shape& input) const {
  if (input.size() != 3 || input[1] != in_channels()) {
    throw DimensionError("conv1d: input " + shape_string(input) +
                         " is not [batch x " + std::to_string(in_channels()) +
                         " x length]");
  }
  return {input[0], filters(), output_length(input[2])};
}

namespace {

/// Patch matrix for output position `l`: row b, column c*k + j holds
/// x[b, c, l + j - pad] (zero outside the sequence).
void im2col(const Tensor& x, std::size_t l, std::size_t k, std::size_t pad,
            Mat& patch) {
  const std::size_t batch = x.extent(0), channels = x.extent(1),
                    length = x.extent(2);
  patch.setZero(static_cast<Eigen::Index>(batch),
                static_cast<Eigen::Index>(channels * k));
  for (std::size_t b = 0; b < batch; ++b) {
    const double* row = x.raw() + b * channels * length;
    for (std::size_t c = 0; c < channels; ++c) {
      for (std::size_t j = 0; j < k; ++j) {
        const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(l + j) -
                                   static_cast<std::ptrdiff_t>(pad);
        if (src >= 0 && src < static_cast<std::ptrdiff_t>(length)) {
          patch(static_cast<Eigen::Index>(b),
                static_cast<Eigen::Index>(c * k + j)) =
              row[c * length + static_cast<std::size_t>(src)];
        }
      }
    }
  }
}

}  // namespace

Tensor Conv1dLayer::forward_impl(const Tensor& x) const {
  Tensor y(output_shape(x.shape()));
  const std::size_t batch = x.extent(0), f = filters(), k = kernel_size();
  const std::size_t out_len = y.extent(2);
  const std::size_t pad = padding_ == Padding::same ? (k - 1) / 2 : 0;
  const ConstMatMap kmat(kernels_.raw(), static_cast<Eigen::Index>(f),
                         static_cast<Eigen::Index>(in_channels() * k));
  Mat patch, out;
  for (std::size_t l = 0; l < out_len; ++l) {
    im2col(x, l, k, pad, patch);
    out.noalias() = patch * kmat.transpose();
    out.rowwise() += bias_.as_vector().transpose();
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t o = 0; o < f; ++o)
        y.raw()[(b * f + o) * out_len + l] =
            out(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(o));
  }
  return y;
}

ForwardResult Conv1dLayer::forward(const Tensor& x) const {
  Tensor y = forward_impl(x);
  auto cache = make_cache<ConvCache>(y.shape());
  cache->input = x;
  return {std::move(y), std::move(cache)};
}

LayerGradients Conv1dLayer::backward(const LayerCache& cache,
                                     const Tensor& upstream) const {
  const auto& c = checked_cache<ConvCache>(cache, upstream);
  const Tensor& x = c.input;
  const std::size_t batch = x.extent(0), channels = x.extent(1),
                    length = x.extent(2);
  const std::size_t f = filters(), k = kernel_size();
  const std::size_t out_len = upstream.extent(2);
  const std::size_t pad = padding_ == Padding::same ? (k - 1) / 2 : 0;
  const ConstMatMap kmat(kernels_.raw(), static_cast<Eigen::Index>(f),
                         static_cast<Eigen::Index>(channels * k));

  Tensor dk(kernels_.shape());
  MatMap dkmat(dk.raw(), static_cast<Eigen::Index>(f),
               static_cast<Eigen::Index>(channels * k));
  Tensor db(bias_.shape());
  Tensor dx(x.shape());

  Mat patch, dy(static_cast<Eigen::Index>(batch), static_cast<Eigen::Index>(f));
  Mat dpatch;
  for (std::size_t l = 0; l < out_len; ++l) {
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t o = 0; o < f; ++o)
        dy(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(o)) =
            upstream.raw()[(b * f + o) * out_len + l];
    im2col(x, l, k, pad, patch);
    dkmat.noalias() += dy.transpose() * patch;
    db.as_vector() += dy.colwise().sum().transpose();
    dpatch.noalias() = dy * kmat;
    for (std::size_t b = 0; b < batch; ++b) {
      double* row = dx.raw() + b * channels * length;
      for (std::size_t ch = 0; ch < channels; ++ch) {
        for (std::size_t j = 0; j < k; ++j) {
          const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(l + j) -
                                     static_cast<std::ptrdiff_t>(pad);
          if (src >= 0 && src < static_cast<std::ptrdiff_t>(length)) {
            row[ch * length + static_cast<std::size_t>(src)] +=
                dpatch(static_cast<Eigen::Index>(b),
                       static_cast<Eigen::Index>(ch * k + j));
          }
        }
      }
    }
  }
  LayerGradients g;
  g.input = std::move(dx);
  g.params.push_back(std::move(dk));
  g.params.push_back(std::move(db));
  return g;
}

std::unique_ptr<Layer> Conv1dLayer::clone() const {
  return std::make_unique<Conv1dLayer>(*this);
}

// ---------------------------------------------------------------- activation

struct ActivationCache : LayerCache {
  Tensor output;
};

Tensor ActivationLayer::infer(const Tensor& x) const {
  Tensor y(x.shape());
  const auto xa = x.as_vector().array();
  auto ya = y.as_vector().array();
  switch (activation_) {
    case Activation::relu:
      ya = xa.max(0.0);
      break;
    case Activation::sigmoid:
      ya = sigmoid_array(xa).reshaped();
      break;
    case Activation::tanh:
      ya = tanh_array(xa).reshaped();
      break;
    case Activation::linear:
      ya = xa;
      break;
  }
  return y;
}

ForwardResult ActivationLayer::forward(const Tensor& x) const {
  Tensor y = infer(x);
  auto cache = make_cache<ActivationCache>(y.shape());
  cache->output = y;
  return {std::move(y), std::move(cache)};
}

// Derivatives are taken through the cached output.
LayerGradients ActivationLayer::backward(const LayerCache& cache,
                                         const Tensor& upstream) const {
  const auto& c = checked_cache<ActivationCache>(cache, upstream);
  LayerGradients g;
  g.input = Tensor(upstream.shape());
  const auto ya = c.output.as_vector().array();
  const auto ua = upstream.as_vector().array();
  auto ga = g.input.as_vector().array();
  switch (activation_) {
    case Activation::relu:
      ga = (ya > 0.0).select(ua, 0.0);
      break;
    case Activation::sigmoid:
      ga = ua * ya * (1.0 - ya);
      break;
    case Activation::tanh:
      ga = ua * (1.0 - ya.square());
      break;
    case Activation::linear:
      ga = ua;
      break;
  }
  return g;
}

std::unique_ptr<Layer> ActivationLayer::clone() const {
  return std::make_unique<ActivationLayer>(*this);
}

// ---------------------------------------------------------------- reshape

struct ShapeCache : LayerCache {
  Shape input_shape;
};

ReshapeLayer::ReshapeLayer(Shape sample_shape)
    : sample_shape_(std::move(sample_shape)) {}

Shape ReshapeLayer::output_shape(const Shape& input) const {
  if (input.empty()) throw DimensionError("reshape: input has no batch axis");
  const std::size_t per_sample = shape_size(input) / input[0];
  if (per_sample != shape_size(sample_shape_)) {
    throw DimensionError("reshape: cannot view " + shape_string(input) +
                         " as batch x " + shape_string(sample_shape_));
  }
  Shape out{input[0]};
  out.insert(out.end(), sample_shape_.begin(), sample_shape_.end());
  return out;
}

ForwardResult ReshapeLayer::forward(const Tensor& x) const {
  Tensor y = x.reshaped(output_shape(x.shape()));
  auto cache = make_cache<ShapeCache>(y.shape());
  cache->input_shape = x.shape();
  return {std::move(y), std::move(cache)};
}

LayerGradients ReshapeLayer::backward(const LayerCache& cache,
                                      const Tensor& upstream) const {
  const auto& c = checked_cache<ShapeCache>(cache, upstream);
  return {upstream.reshaped(c.input_shape), {}};
}

std::unique_ptr<Layer> ReshapeLayer::clone() const {
  return std::make_unique<ReshapeLayer>(*this);
}

// ---------------------------------------------------------------- transpose

Tensor transpose_last2(const Tensor& x) {
  if (x.rank() != 3) {
    throw DimensionError("transpose: expected rank 3, got " +
                         shape_string(x.shape()));
  }
  const std::size_t batch = x.extent(0), a = x.extent(1), b = x.extent(2);
  Tensor y({batch, b, a});
  for (std::size_t n = 0; n < batch; ++n) {
    const ConstMatMap src(x.raw() + n * a * b, static_cast<Eigen::Index>(a),
                          static_cast<Eigen::Index>(b));
    MatMap dst(y.raw() + n * a * b, static_cast<Eigen::Index>(b),
               static_cast<Eigen::Index>(a));
    dst = src.transpose();
  }
  return y;
}

Shape TransposeLayer::output_shape(const Shape& input) const {
  if (input.size() != 3) {
    throw DimensionError("transpose: expected rank 3, got " +
                         shape_string(input));
  }
  return {input[0], input[2], input[1]};
}

ForwardResult TransposeLayer::forward(const Tensor& x) const {
  Tensor y = transpose_last2(x);
  auto cache = make_cache<ShapeCache>(y.shape());
  cache->input_shape = x.shape();
  return {std::move(y), std::move(cache)};
}

LayerGradients TransposeLayer::backward(const LayerCache& cache,
                                        const Tensor& upstream) const {
  checked_cache<ShapeCache>(cache, upstream);
  return {transpose_last2(upstream), {}};
}

std::unique_ptr<Layer> TransposeLayer::clone() const {
  return std::make_unique<TransposeLayer>(*this);
}

// ---------------------------------------------------------------- attention

struct AttentionCache : LayerCache {
  Tensor input;
  Mat q, k, v;
  std::vector<Mat> weights;
};

SelfAttentionLayer::SelfAttentionLayer(Tensor w_q, Tensor w_k, Tensor w_v)
    : w_q_(std::move(w_q)), w_k_(std::move(w_k)), w_v_(std::move(w_v)) {
  const Shape sq = w_q_.shape();
  if (sq.size() != 2 || sq[0] != sq[1] || w_k_.shape() != sq ||
      w_v_.shape() != sq) {
    throw DimensionError("attention: projections must be equal square [d x d]");
  }
}

SelfAttentionLayer SelfAttentionLayer::glorot(std::size_t d, Rng& rng) {
  if (d == 0) throw DimensionError("attention: width d must be positive");
  auto wq = glorot_tensor({d, d}, d, d, rng);
  auto wk = glorot_tensor({d, d}, d, d, rng);
  auto wv = glorot_tensor({d, d}, d, d, rng);
  return SelfAttentionLayer(std::move(wq), std::move(wk), std::move(wv));
}

void SelfAttentionLayer::check_input(const Tensor& x) const {
  if (x.rank() != 3 || x.extent(2) != width()) {
    throw DimensionError("attention: input " + shape_string(x.shape()) +
                         " is not [batch x steps x " +
                         std::to_string(width()) + "]");
  }
}

Shape SelfAttentionLayer::output_shape(const Shape& input) const {
  if (input.size() != 3 || input[2] != width()) {
    throw DimensionError("attention: input " + shape_string(input) +
                         " is not [batch x steps x " +
                         std::to_string(width()) + "]");
  }
  return input;
}

namespace {

Mat softmax_rows(const Mat& scores) {
  Mat a = scores;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const double m = a.row(i).maxCoeff();
    a.row(i) = (a.row(i).array() - m).exp().matrix();
    a.row(i) /= a.row(i).sum();
  }
  return a;
}

}  // namespace

Tensor SelfAttentionLayer::attention_weights(const Tensor& x) const {
  auto fr = forward(x);
  const auto& c = static_cast<const AttentionCache&>(*fr.cache);
  const std::size_t batch = x.extent(0), steps = x.extent(1);
  Tensor w({batch, steps, steps});
  for (std::size_t b = 0; b < batch; ++b) {
    MatMap(w.raw() + b * steps * steps, static_cast<Eigen::Index>(steps),
           static_cast<Eigen::Index>(steps)) = c.weights[b];
  }
  return w;
}

ForwardResult SelfAttentionLayer::forward(const Tensor& x) const {
  check_input(x);
  const std::size_t batch = x.extent(0), steps = x.extent(1), d = width();
  const auto s = static_cast<Eigen::Index>(steps);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));

  auto cache = make_cache<AttentionCache>(x.shape());
  cache->input = x;
  const auto xm = x.as_matrix();
  cache->q.noalias() = xm * w_q_.as_matrix().transpose();
  cache->k.noalias() = xm * w_k_.as_matrix().transpose();
  cache->v.noalias() = xm * w_v_.as_matrix().transpose();

  Tensor y(x.shape());
  auto ym = y.as_matrix();
  cache->weights.reserve(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    const auto row0 = static_cast<Eigen::Index>(b * steps);
    const Mat scores = scale * cache->q.middleRows(row0, s) *
                       cache->k.middleRows(row0, s).transpose();
    Mat a = softmax_rows(scores);
    ym.middleRows(row0, s).noalias() = a * cache->v.middleRows(row0, s);
    cache->weights.push_back(std::move(a));
  }
  return {std::move(y), std::move(cache)};
}

LayerGradients SelfAttentionLayer::backward(const LayerCache& cache,
                                            const Tensor& upstream) const {
  const auto& c = checked_cache<AttentionCache>(cache, upstream);
  const std::size_t batch = c.input.extent(0), steps = c.input.extent(1);
  const auto s = static_cast<Eigen::Index>(steps);
  const double scale = 1.0 / std::sqrt(static_cast<double>(width()));
  const auto dy = upstream.as_matrix();

  Mat dq(c.q.rows(), c.q.cols()), dk(c.k.rows(), c.k.cols()),
      dv(c.v.rows(), c.v.cols());
  for (std::size_t b = 0; b < batch; ++b) {
    const auto row0 = static_cast<Eigen::Index>(b * steps);
    const Mat& a = c.weights[b];
    const auto dyb = dy.middleRows(row0, s);
    dv.middleRows(row0, s).noalias() = a.transpose() * dyb;
    const Mat da = dyb * c.v.middleRows(row0, s).transpose();
    const Eigen::VectorXd rowdot = (da.cwiseProduct(a)).rowwise().sum();
    Mat dscores = a.cwiseProduct(da.colwise() - rowdot);
    dscores *= scale;
    dq.middleRows(row0, s).noalias() = dscores * c.k.middleRows(row0, s);
    dk.middleRows(row0, s).noalias() =
        dscores.transpose() * c.q.middleRows(row0, s);
  }

  const auto xm = c.input.as_matrix();
  LayerGradients g;
  g.input = Tensor(c.input.shape());
  auto dx = g.input.as_matrix();
  dx.noalias() = dq * w_q_.as_matrix();
  dx.noalias() += dk * w_k_.as_matrix();
  dx.noalias() += dv * w_v_.as_matrix();
  for (const Mat* d : {&dq, &dk, &dv}) {
    Tensor gw({width(), width()});
    gw.as_matrix().noalias() = d->transpose() * xm;
    g.params.push_back(std::move(gw));
  }
  return g;
}

std::unique_ptr<Layer> SelfAttentionLayer::clone() const {
  return std::make_unique<SelfAttentionLayer>(*this);
}

}  // namespace losnet::nn
