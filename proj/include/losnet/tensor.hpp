// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "losnet/error.hpp"

namespace losnet {

using Shape = std::vector<std::size_t>;

inline std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

inline std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

template <typename Scalar>
using RowMatrix =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Dense row-major n-dimensional array. Rank 0 is a scalar.
///
/// Extents are strictly positive; the flat buffer always holds
/// product(shape) values.
template <typename Scalar>
class BasicTensor {
 public:
  using value_type = Scalar;
  using MatrixMap = Eigen::Map<RowMatrix<Scalar>>;
  using ConstMatrixMap = Eigen::Map<const RowMatrix<Scalar>>;
  using VectorMap = Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>;
  using ConstVectorMap =
      Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>;

  BasicTensor() : data_(1, Scalar(0)) {}

  explicit BasicTensor(Shape shape, Scalar fill = Scalar(0))
      : shape_(std::move(shape)) {
    validate_shape(shape_);
    data_.assign(shape_size(shape_), fill);
  }

  BasicTensor(Shape shape, const std::vector<Scalar>& data)
      : shape_(std::move(shape)), data_(data.begin(), data.end()) {
    validate_shape(shape_);
    if (data_.size() != shape_size(shape_)) {
      throw DimensionError("tensor: shape " + shape_string(shape_) +
                           " needs " + std::to_string(shape_size(shape_)) +
                           " values, got " + std::to_string(data_.size()));
    }
  }

  static BasicTensor scalar(Scalar v) { return BasicTensor(Shape{}, {v}); }

  static BasicTensor vector(std::initializer_list<Scalar> values) {
    return BasicTensor(Shape{values.size()}, std::vector<Scalar>(values));
  }

  static BasicTensor matrix(
      std::initializer_list<std::initializer_list<Scalar>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r ? rows.begin()->size() : 0;
    std::vector<Scalar> flat;
    flat.reserve(r * c);
    for (const auto& row : rows) {
      if (row.size() != c) throw DimensionError("tensor: ragged matrix literal");
      flat.insert(flat.end(), row.begin(), row.end());
    }
    return BasicTensor(Shape{r, c}, std::move(flat));
  }

  template <typename Derived>
  static BasicTensor from_eigen(const Eigen::MatrixBase<Derived>& m) {
    BasicTensor t(Shape{static_cast<std::size_t>(m.rows()),
                        static_cast<std::size_t>(m.cols())});
    t.as_matrix() = m;
    return t;
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t extent(std::size_t axis) const {
    if (axis >= shape_.size()) {
      throw DimensionError("tensor: axis " + std::to_string(axis) +
                           " out of range for " + shape_string(shape_));
    }
    return shape_[axis];
  }

  std::span<Scalar> data() noexcept { return data_; }
  std::span<const Scalar> data() const noexcept { return data_; }
  Scalar* raw() noexcept { return data_.data(); }
  const Scalar* raw() const noexcept { return data_.data(); }

  Scalar& operator[](std::size_t i) { return data_[i]; }
  const Scalar& operator[](std::size_t i) const { return data_[i]; }

  template <typename... Index>
  Scalar& operator()(Index... idx) {
    return data_[offset({static_cast<std::size_t>(idx)...})];
  }
  template <typename... Index>
  const Scalar& operator()(Index... idx) const {
    return data_[offset({static_cast<std::size_t>(idx)...})];
  }

  Scalar item() const {
    if (data_.size() != 1) {
      throw DimensionError("tensor: item() on " + shape_string(shape_));
    }
    return data_[0];
  }

  /// View the buffer as rows x cols where cols is the trailing extent.
  MatrixMap as_matrix() {
    const auto [r, c] = matrix_dims();
    return MatrixMap(data_.data(), r, c);
  }
  ConstMatrixMap as_matrix() const {
    const auto [r, c] = matrix_dims();
    return ConstMatrixMap(data_.data(), r, c);
  }
  VectorMap as_vector() {
    return VectorMap(data_.data(), static_cast<Eigen::Index>(data_.size()));
  }
  ConstVectorMap as_vector() const {
    return ConstVectorMap(data_.data(),
                          static_cast<Eigen::Index>(data_.size()));
  }

  BasicTensor reshaped(Shape shape) const {
    if (shape_size(shape) != data_.size()) {
      throw DimensionError("tensor: cannot reshape " + shape_string(shape_) +
                           " to " + shape_string(shape));
    }
    BasicTensor t = *this;
    t.shape_ = std::move(shape);
    validate_shape(t.shape_);
    return t;
  }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(),
                       [](Scalar v) { return std::isfinite(v); });
  }

  friend bool operator==(const BasicTensor& a, const BasicTensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  static void validate_shape(const Shape& shape) {
    for (auto e : shape) {
      if (e == 0) {
        throw DimensionError("tensor: zero extent in shape " +
                             shape_string(shape));
      }
    }
  }

  std::pair<Eigen::Index, Eigen::Index> matrix_dims() const {
    if (shape_.empty()) return {1, 1};
    const auto cols = static_cast<Eigen::Index>(shape_.back());
    return {static_cast<Eigen::Index>(data_.size()) / cols, cols};
  }

  std::size_t offset(std::initializer_list<std::size_t> idx) const {
    if (idx.size() != shape_.size()) {
      throw DimensionError("tensor: index rank " + std::to_string(idx.size()) +
                           " for " + shape_string(shape_));
    }
    std::size_t flat = 0;
    std::size_t axis = 0;
    for (auto i : idx) {
      if (i >= shape_[axis]) {
        throw DimensionError("tensor: index out of range for " +
                             shape_string(shape_));
      }
      flat = flat * shape_[axis] + i;
      ++axis;
    }
    return flat;
  }

  Shape shape_;
  // Aligned storage keeps Eigen's vectorized reduction order independent of
  // where the allocator happens to place the buffer.
  std::vector<Scalar, Eigen::aligned_allocator<Scalar>> data_;
};

using Tensor = BasicTensor<double>;

template <typename Scalar>
void require_finite(const BasicTensor<Scalar>& t, std::string_view op) {
  if (!t.all_finite()) {
    throw NonFiniteError(std::string(op) + ": non-finite value in tensor " +
                         shape_string(t.shape()));
  }
}

template <typename Scalar>
BasicTensor<Scalar> matmul(const BasicTensor<Scalar>& a,
                           const BasicTensor<Scalar>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.extent(1) != b.extent(0)) {
    throw DimensionError("matmul: shape mismatch " + shape_string(a.shape()) +
                         " x " + shape_string(b.shape()));
  }
  require_finite(a, "matmul");
  require_finite(b, "matmul");
  BasicTensor<Scalar> c(Shape{a.extent(0), b.extent(1)});
  c.as_matrix().noalias() = a.as_matrix() * b.as_matrix();
  require_finite(c, "matmul");
  return c;
}

template <typename Scalar, typename Fn>
BasicTensor<Scalar> map(const BasicTensor<Scalar>& a, Fn&& f) {
  require_finite(a, "map");
  BasicTensor<Scalar> out(a.shape());
  std::transform(a.data().begin(), a.data().end(), out.data().begin(), f);
  require_finite(out, "map");
  return out;
}

template <typename Scalar, typename Fn>
BasicTensor<Scalar> zip_map(const BasicTensor<Scalar>& a,
                            const BasicTensor<Scalar>& b, Fn&& f) {
  if (a.shape() != b.shape()) {
    throw DimensionError("zip_map: shape mismatch " + shape_string(a.shape()) +
                         " vs " + shape_string(b.shape()));
  }
  require_finite(a, "zip_map");
  require_finite(b, "zip_map");
  BasicTensor<Scalar> out(a.shape());
  std::transform(a.data().begin(), a.data().end(), b.data().begin(),
                 out.data().begin(), f);
  require_finite(out, "zip_map");
  return out;
}

template <typename Scalar>
BasicTensor<Scalar> operator+(const BasicTensor<Scalar>& a,
                              const BasicTensor<Scalar>& b) {
  return zip_map(a, b, std::plus<Scalar>());
}
template <typename Scalar>
BasicTensor<Scalar> operator-(const BasicTensor<Scalar>& a,
                              const BasicTensor<Scalar>& b) {
  return zip_map(a, b, std::minus<Scalar>());
}
/// Elementwise (Hadamard) product.
template <typename Scalar>
BasicTensor<Scalar> operator*(const BasicTensor<Scalar>& a,
                              const BasicTensor<Scalar>& b) {
  return zip_map(a, b, std::multiplies<Scalar>());
}
template <typename Scalar>
BasicTensor<Scalar> operator*(Scalar s, const BasicTensor<Scalar>& a) {
  return map(a, [s](Scalar v) { return s * v; });
}

enum class ReduceKind { sum, mean, max };

/// Collapses `axis`; the result drops that axis (a rank-1 input reduces to a
/// rank-0 scalar).
template <typename Scalar>
BasicTensor<Scalar> reduce(const BasicTensor<Scalar>& a, std::size_t axis,
                           ReduceKind kind) {
  if (axis >= a.rank()) {
    throw DimensionError("reduce: axis " + std::to_string(axis) +
                         " invalid for " + shape_string(a.shape()));
  }
  require_finite(a, "reduce");
  const Shape& in = a.shape();
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= in[i];
  for (std::size_t i = axis + 1; i < in.size(); ++i) inner *= in[i];
  const std::size_t n = in[axis];

  Shape out_shape;
  for (std::size_t i = 0; i < in.size(); ++i)
    if (i != axis) out_shape.push_back(in[i]);
  BasicTensor<Scalar> out(out_shape);

  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < inner; ++i) {
      const Scalar* base = a.raw() + o * n * inner + i;
      Scalar acc = kind == ReduceKind::max ? base[0] : Scalar(0);
      for (std::size_t p = 0; p < n; ++p) {
        const Scalar v = base[p * inner];
        if (kind == ReduceKind::max)
          acc = std::max(acc, v);
        else
          acc += v;
      }
      if (kind == ReduceKind::mean) acc /= static_cast<Scalar>(n);
      out[o * inner + i] = acc;
    }
  }
  require_finite(out, "reduce");
  return out;
}

}  // namespace losnet
