#pragma once

#include <atsal/errors.hpp>

#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace atsal {

// Extents of a rank-4 tensor in (batch, channels, rows, cols) order.
struct Shape {
  std::size_t n = 0;
  std::size_t c = 0;
  std::size_t h = 0;
  std::size_t w = 0;

  constexpr std::size_t size() const noexcept { return n * c * h * w; }
  constexpr std::size_t plane() const noexcept { return h * w; }
  friend constexpr bool operator==(const Shape&, const Shape&) = default;

  std::string str() const {
    return std::to_string(n) + "x" + std::to_string(c) + "x" + std::to_string(h) + "x" +
           std::to_string(w);
  }
};

// (rows, cols) pair used for kernels, strides and paddings.
struct Pair {
  std::size_t rows = 1;
  std::size_t cols = 1;

  constexpr Pair() = default;
  constexpr Pair(std::size_t both) : rows(both), cols(both) {}
  constexpr Pair(std::size_t r, std::size_t c) : rows(r), cols(c) {}
  friend constexpr bool operator==(const Pair&, const Pair&) = default;
};

// Dense row-major rank-4 array. Storage is a plain vector, so tensors have
// value semantics; gradients live on the autograd tape, not in the tensor.
template <typename T>
class BasicTensor {
public:
  using value_type = T;

  BasicTensor() = default;

  explicit BasicTensor(Shape shape, T fill = T{}) : shape_(shape), data_(shape.size(), fill) {}

  BasicTensor(Shape shape, std::vector<T> data) : shape_(shape), data_(std::move(data)) {
    if (data_.size() != shape_.size())
      throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                           " does not match shape " + shape_.str());
  }

  static BasicTensor scalar(T value) { return BasicTensor(Shape{1, 1, 1, 1}, value); }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  std::vector<T>& storage() noexcept { return data_; }
  const std::vector<T>& storage() const noexcept { return data_; }

  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  std::size_t index(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const noexcept {
    return ((n * shape_.c + c) * shape_.h + h) * shape_.w + w;
  }
  T& operator()(std::size_t n, std::size_t c, std::size_t h, std::size_t w) noexcept {
    return data_[index(n, c, h, w)];
  }
  const T& operator()(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const noexcept {
    return data_[index(n, c, h, w)];
  }

  // Pointer to the (rows x cols) plane of image n, channel c.
  T* plane(std::size_t n, std::size_t c) noexcept { return data_.data() + index(n, c, 0, 0); }
  const T* plane(std::size_t n, std::size_t c) const noexcept {
    return data_.data() + index(n, c, 0, 0);
  }

  T item() const {
    if (data_.size() != 1)
      throw DimensionError("item() on tensor of shape " + shape_.str());
    return data_[0];
  }

  template <typename U>
  BasicTensor<U> cast() const {
    std::vector<U> out(data_.begin(), data_.end());
    return BasicTensor<U>(shape_, std::move(out));
  }

  bool all_finite() const noexcept {
    for (const T& v : data_)
      if (!std::isfinite(v))
        return false;
    return true;
  }

  friend bool operator==(const BasicTensor&, const BasicTensor&) = default;

private:
  Shape shape_{};
  std::vector<T> data_;
};

using Tensor = BasicTensor<float>;

// Named parameter tensors. std::map keeps serialization order deterministic.
template <typename T>
using ParamMap = std::map<std::string, BasicTensor<T>>;

using WeightStore = ParamMap<float>;

template <typename T>
ParamMap<T> cast_params(const WeightStore& store) {
  ParamMap<T> out;
  for (const auto& [key, value] : store)
    out.emplace(key, value.template cast<T>());
  return out;
}

// Concatenates equally shaped images along the batch axis.
template <typename T>
BasicTensor<T> stack_batch(std::span<const BasicTensor<T>> items) {
  if (items.empty())
    throw ArgumentError("stack_batch: no tensors");
  Shape s = items.front().shape();
  std::size_t total = 0;
  for (const auto& t : items) {
    const Shape& o = t.shape();
    if (o.c != s.c || o.h != s.h || o.w != s.w)
      throw DimensionError("stack_batch: shape " + o.str() + " differs from " + s.str());
    total += o.n;
  }
  std::vector<T> data;
  data.reserve(total * s.c * s.h * s.w);
  for (const auto& t : items)
    data.insert(data.end(), t.data().begin(), t.data().end());
  s.n = total;
  return BasicTensor<T>(s, std::move(data));
}

// Extracts image i of a batch as a 1-image tensor.
template <typename T>
BasicTensor<T> batch_item(const BasicTensor<T>& t, std::size_t i) {
  const Shape& s = t.shape();
  if (i >= s.n)
    throw DimensionError("batch_item: index " + std::to_string(i) + " out of batch " +
                         std::to_string(s.n));
  const std::size_t stride = s.c * s.h * s.w;
  auto first = t.data().begin() + static_cast<std::ptrdiff_t>(i * stride);
  return BasicTensor<T>(Shape{1, s.c, s.h, s.w},
                        std::vector<T>(first, first + static_cast<std::ptrdiff_t>(stride)));
}

} // namespace atsal
