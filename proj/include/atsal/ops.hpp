#pragma once

#include <atsal/tensor.hpp>

#include <cstddef>
#include <span>
#include <vector>

namespace atsal {

enum class Activation { relu, sigmoid };
enum class ElementwiseOp { add, mul };

// Output extent of a sliding window: floor((in + 2*pad - kernel) / stride) + 1.
// Throws DimensionError naming `axis` when the window does not fit.
std::size_t window_output_extent(std::size_t in, std::size_t kernel, std::size_t stride,
                                 std::size_t pad, const char* axis);

// 2-D cross-correlation with zero padding. weight is (out, in, kh, kw); bias
// has one entry per output channel or is empty.
template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& input, const BasicTensor<T>& weight,
                      std::span<const T> bias, Pair stride, Pair padding);

// Accumulates into whichever of grad_input / grad_weight / grad_bias is
// non-null. Buffers must already have the matching shape.
template <typename T>
void conv2d_backward(const BasicTensor<T>& input, const BasicTensor<T>& weight,
                     const BasicTensor<T>& grad_output, Pair stride, Pair padding,
                     BasicTensor<T>* grad_input, BasicTensor<T>* grad_weight,
                     std::span<T> grad_bias);

// Max over each window. When argmax is given it receives, per output element,
// the flat input index of the winner (first in row-major scan on ties).
template <typename T>
BasicTensor<T> maxpool2d(const BasicTensor<T>& input, Pair kernel, Pair stride,
                         std::vector<std::size_t>* argmax = nullptr);

template <typename T>
void maxpool2d_backward(const BasicTensor<T>& grad_output, std::span<const std::size_t> argmax,
                        BasicTensor<T>& grad_input);

// Bilinear resampling with half-pixel centers (corner alignment off).
template <typename T>
BasicTensor<T> resize_bilinear(const BasicTensor<T>& input, std::size_t rows, std::size_t cols);

template <typename T>
void resize_bilinear_backward(const BasicTensor<T>& grad_output, BasicTensor<T>& grad_input);

// Bilinear upsampling by an integer factor on both spatial axes.
template <typename T>
BasicTensor<T> upsample(const BasicTensor<T>& input, std::size_t factor);

// Sigmoid results are clamped to the open interval (0, 1) representable in T.
template <typename T>
BasicTensor<T> activation(const BasicTensor<T>& input, Activation kind);

// Derivative expressed through the forward output.
template <typename T>
void activation_backward(const BasicTensor<T>& output, const BasicTensor<T>& grad_output,
                         Activation kind, BasicTensor<T>& grad_input);

// a (op) b, where b either matches a or is single-channel and is replicated
// across a's channels.
template <typename T>
BasicTensor<T> elementwise(const BasicTensor<T>& a, const BasicTensor<T>& b, ElementwiseOp op);

template <typename T>
void elementwise_backward(const BasicTensor<T>& a, const BasicTensor<T>& b,
                          const BasicTensor<T>& grad_output, ElementwiseOp op,
                          BasicTensor<T>* grad_a, BasicTensor<T>* grad_b);

} // namespace atsal
