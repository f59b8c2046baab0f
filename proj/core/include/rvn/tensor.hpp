#pragma once

#include <complex>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace rvn {

using Shape = std::vector<std::int64_t>;

std::string shape_to_string(const Shape& s);

/// Dense row-major n-dimensional array. The scalar type may be real
/// (float, double, uint8_t) or std::complex<float/double>.
template <typename T>
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(Shape shape) : shape_(std::move(shape)) {
    data_.assign(static_cast<std::size_t>(checked_numel(shape_)), T{});
  }

  Tensor(Shape shape, std::vector<T> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (checked_numel(shape_) != static_cast<std::int64_t>(data_.size()))
      throw std::invalid_argument("Tensor: data size does not match shape " +
                                  shape_to_string(shape_));
  }

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }

  static Tensor full(Shape shape, T value) {
    Tensor t(std::move(shape));
    for (auto& v : t.data_) v = value;
    return t;
  }

  const Shape& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }

  /// Dimension i; negative i counts from the end.
  std::int64_t dim(int i) const {
    const int r = rank();
    if (i < 0) i += r;
    if (i < 0 || i >= r)
      throw std::out_of_range("Tensor::dim: axis " + std::to_string(i) +
                              " out of range for rank " + std::to_string(r));
    return shape_[static_cast<std::size_t>(i)];
  }

  std::int64_t numel() const { return static_cast<std::int64_t>(data_.size()); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  T& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
  const T& operator[](std::int64_t i) const {
    return data_[static_cast<std::size_t>(i)];
  }

  T& operator()(std::int64_t i, std::int64_t j) {
    return data_[static_cast<std::size_t>(i * shape_[1] + j)];
  }
  const T& operator()(std::int64_t i, std::int64_t j) const {
    return data_[static_cast<std::size_t>(i * shape_[1] + j)];
  }
  T& operator()(std::int64_t i, std::int64_t j, std::int64_t k) {
    return data_[static_cast<std::size_t>((i * shape_[1] + j) * shape_[2] + k)];
  }
  const T& operator()(std::int64_t i, std::int64_t j, std::int64_t k) const {
    return data_[static_cast<std::size_t>((i * shape_[1] + j) * shape_[2] + k)];
  }
  T& operator()(std::int64_t i, std::int64_t j, std::int64_t k,
                std::int64_t l) {
    return data_[static_cast<std::size_t>(
        ((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l)];
  }
  const T& operator()(std::int64_t i, std::int64_t j, std::int64_t k,
                      std::int64_t l) const {
    return data_[static_cast<std::size_t>(
        ((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l)];
  }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  /// Reinterpret with a new shape of identical element count.
  Tensor reshaped(Shape shape) const {
    if (checked_numel(shape) != numel())
      throw std::invalid_argument("Tensor::reshaped: element count mismatch");
    Tensor t;
    t.shape_ = std::move(shape);
    t.data_ = data_;
    return t;
  }

  void fill(T value) {
    for (auto& v : data_) v = value;
  }

  bool operator==(const Tensor& other) const {
    return shape_ == other.shape_ && data_ == other.data_;
  }

  static std::int64_t checked_numel(const Shape& shape) {
    std::int64_t n = 1;
    for (auto d : shape) {
      if (d < 0) throw std::invalid_argument("Tensor: negative dimension");
      n *= d;
    }
    return n;
  }

 private:
  Shape shape_;
  std::vector<T> data_;
};

template <typename T>
using CTensor = Tensor<std::complex<T>>;

using MaskArray = Tensor<std::uint8_t>;

/// max |x_i|, 0 for empty tensors.
template <typename T>
double max_abs(const Tensor<T>& t) {
  double m = 0.0;
  for (std::int64_t i = 0; i < t.numel(); ++i)
    m = std::max(m, static_cast<double>(std::abs(t[i])));
  return m;
}

/// max |x_i - y_i| over both tensors; shapes must match.
template <typename T>
double max_abs_diff(const Tensor<T>& a, const Tensor<T>& b) {
  if (!a.same_shape(b))
    throw std::invalid_argument("max_abs_diff: shape mismatch");
  double m = 0.0;
  for (std::int64_t i = 0; i < a.numel(); ++i)
    m = std::max(m, static_cast<double>(std::abs(a[i] - b[i])));
  return m;
}

/// l2 norm accumulated in double.
template <typename T>
double norm2(const Tensor<T>& t) {
  double s = 0.0;
  for (std::int64_t i = 0; i < t.numel(); ++i) {
    const double a = static_cast<double>(std::abs(t[i]));
    s += a * a;
  }
  return std::sqrt(s);
}

template <typename T>
bool all_finite(const Tensor<T>& t) {
  for (std::int64_t i = 0; i < t.numel(); ++i)
    if (!std::isfinite(static_cast<double>(t[i]))) return false;
  return true;
}

template <typename T>
bool all_finite(const Tensor<std::complex<T>>& t) {
  for (std::int64_t i = 0; i < t.numel(); ++i)
    if (!std::isfinite(static_cast<double>(t[i].real())) ||
        !std::isfinite(static_cast<double>(t[i].imag())))
      return false;
  return true;
}

}  // namespace rvn
