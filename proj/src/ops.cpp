#include <atsal/ops.hpp>

#include <atsal/gemm.hpp>
#include <atsal/parallel.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace atsal {

std::size_t window_output_extent(std::size_t in, std::size_t kernel, std::size_t stride,
                                 std::size_t pad, const char* axis) {
  if (kernel == 0 || stride == 0)
    throw ArgumentError(std::string("kernel and stride must be >= 1 on axis ") + axis);
  if (in + 2 * pad < kernel)
    throw DimensionError(std::string("window of ") + std::to_string(kernel) +
                         " does not fit padded extent " + std::to_string(in + 2 * pad) +
                         " on axis " + axis);
  return (in + 2 * pad - kernel) / stride + 1;
}

namespace {

struct ConvGeometry {
  std::size_t channels, in_h, in_w;
  std::size_t out_channels, out_h, out_w;
  Pair kernel, stride, pad;

  std::size_t k_dim() const { return channels * kernel.rows * kernel.cols; }
  std::size_t out_plane() const { return out_h * out_w; }
  bool pointwise() const {
    return kernel == Pair{1, 1} && stride == Pair{1, 1} && pad == Pair{0, 0};
  }
};

template <typename T>
ConvGeometry conv_geometry(const BasicTensor<T>& input, const BasicTensor<T>& weight, Pair stride,
                           Pair padding) {
  const Shape& in = input.shape();
  const Shape& w = weight.shape();
  if (w.c != in.c)
    throw DimensionError("conv2d: input channels " + std::to_string(in.c) +
                         " do not match weight in_channels " + std::to_string(w.c) +
                         " (axis: channels)");
  ConvGeometry g{};
  g.channels = in.c;
  g.in_h = in.h;
  g.in_w = in.w;
  g.out_channels = w.n;
  g.kernel = Pair{w.h, w.w};
  g.stride = stride;
  g.pad = padding;
  g.out_h = window_output_extent(in.h, w.h, stride.rows, padding.rows, "rows");
  g.out_w = window_output_extent(in.w, w.w, stride.cols, padding.cols, "cols");
  return g;
}

// Output positions handled per im2col chunk, sized to keep the column buffer
// around 16 MiB of floats.
std::size_t chunk_columns(const ConvGeometry& g) {
  const std::size_t budget = std::size_t{1} << 22;
  const std::size_t per = std::max<std::size_t>(512, budget / std::max<std::size_t>(1, g.k_dim()));
  return std::min(per, g.out_plane());
}

// Column matrix (k_dim x count) for output positions [p0, p0 + count).
template <typename T>
void im2col(const ConvGeometry& g, const T* image, std::size_t p0, std::size_t count, T* col) {
  const long in_h = static_cast<long>(g.in_h);
  const long in_w = static_cast<long>(g.in_w);
  std::size_t row = 0;
  for (std::size_t c = 0; c < g.channels; ++c) {
    const T* plane = image + c * g.in_h * g.in_w;
    for (std::size_t ki = 0; ki < g.kernel.rows; ++ki) {
      for (std::size_t kj = 0; kj < g.kernel.cols; ++kj, ++row) {
        T* dst = col + row * count;
        std::size_t oy = p0 / g.out_w;
        std::size_t ox = p0 % g.out_w;
        for (std::size_t q = 0; q < count; ++q) {
          const long iy = static_cast<long>(oy * g.stride.rows + ki) - static_cast<long>(g.pad.rows);
          const long ix = static_cast<long>(ox * g.stride.cols + kj) - static_cast<long>(g.pad.cols);
          dst[q] = (iy >= 0 && iy < in_h && ix >= 0 && ix < in_w) ? plane[iy * in_w + ix] : T{};
          if (++ox == g.out_w) {
            ox = 0;
            ++oy;
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const ConvGeometry& g, const T* col, std::size_t p0, std::size_t count, T* image) {
  const long in_h = static_cast<long>(g.in_h);
  const long in_w = static_cast<long>(g.in_w);
  std::size_t row = 0;
  for (std::size_t c = 0; c < g.channels; ++c) {
    T* plane = image + c * g.in_h * g.in_w;
    for (std::size_t ki = 0; ki < g.kernel.rows; ++ki) {
      for (std::size_t kj = 0; kj < g.kernel.cols; ++kj, ++row) {
        const T* src = col + row * count;
        std::size_t oy = p0 / g.out_w;
        std::size_t ox = p0 % g.out_w;
        for (std::size_t q = 0; q < count; ++q) {
          const long iy = static_cast<long>(oy * g.stride.rows + ki) - static_cast<long>(g.pad.rows);
          const long ix = static_cast<long>(ox * g.stride.cols + kj) - static_cast<long>(g.pad.cols);
          if (iy >= 0 && iy < in_h && ix >= 0 && ix < in_w)
            plane[iy * in_w + ix] += src[q];
          if (++ox == g.out_w) {
            ox = 0;
            ++oy;
          }
        }
      }
    }
  }
}

template <typename T>
T clamp_open_unit(T y) {
  constexpr T lo = std::numeric_limits<T>::min();
  const T hi = std::nextafter(T(1), T(0));
  return std::clamp(y, lo, hi);
}

struct AxisSamples {
  std::vector<std::size_t> lo, hi;
  std::vector<double> frac;
};

AxisSamples half_pixel_samples(std::size_t in, std::size_t out) {
  AxisSamples s;
  s.lo.resize(out);
  s.hi.resize(out);
  s.frac.resize(out);
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  for (std::size_t i = 0; i < out; ++i) {
    double src = (static_cast<double>(i) + 0.5) * scale - 0.5;
    if (src < 0.0)
      src = 0.0;
    std::size_t i0 = static_cast<std::size_t>(src);
    if (i0 > in - 1)
      i0 = in - 1;
    s.lo[i] = i0;
    s.hi[i] = std::min(i0 + 1, in - 1);
    s.frac[i] = src - static_cast<double>(i0);
  }
  return s;
}

void require_same_shape(const Shape& a, const Shape& b, const char* what) {
  if (a != b)
    throw DimensionError(std::string(what) + ": shape " + b.str() + " does not match " + a.str());
}

} // namespace

template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& input, const BasicTensor<T>& weight,
                      std::span<const T> bias, Pair stride, Pair padding) {
  const ConvGeometry g = conv_geometry(input, weight, stride, padding);
  if (!bias.empty() && bias.size() != g.out_channels)
    throw DimensionError("conv2d: bias length " + std::to_string(bias.size()) +
                         " does not match out_channels " + std::to_string(g.out_channels));
  const std::size_t batch = input.shape().n;
  BasicTensor<T> out(Shape{batch, g.out_channels, g.out_h, g.out_w});
  const std::size_t plane = g.out_plane();
  const std::size_t kdim = g.k_dim();
  const std::size_t chunk = chunk_columns(g);
  const std::size_t chunks_per_image = (plane + chunk - 1) / chunk;

  parallel_for(batch * chunks_per_image, [&](std::size_t job) {
    const std::size_t n = job / chunks_per_image;
    const std::size_t p0 = (job % chunks_per_image) * chunk;
    const std::size_t count = std::min(chunk, plane - p0);
    const T* image = input.plane(n, 0);
    T* dst = out.plane(n, 0) + p0;
    if (g.pointwise()) {
      gemm<T>(Transpose::no, Transpose::no, g.out_channels, count, kdim, weight.data().data(), kdim,
              image + p0, plane, dst, plane, false);
    } else {
      thread_local std::vector<T> col;
      col.resize(kdim * count);
      im2col(g, image, p0, count, col.data());
      gemm<T>(Transpose::no, Transpose::no, g.out_channels, count, kdim, weight.data().data(), kdim,
              col.data(), count, dst, plane, false);
    }
    if (!bias.empty())
      for (std::size_t oc = 0; oc < g.out_channels; ++oc) {
        T* row = dst + oc * plane;
        const T b = bias[oc];
        for (std::size_t q = 0; q < count; ++q)
          row[q] += b;
      }
  });
  return out;
}

template <typename T>
void conv2d_backward(const BasicTensor<T>& input, const BasicTensor<T>& weight,
                     const BasicTensor<T>& grad_output, Pair stride, Pair padding,
                     BasicTensor<T>* grad_input, BasicTensor<T>* grad_weight,
                     std::span<T> grad_bias) {
  const ConvGeometry g = conv_geometry(input, weight, stride, padding);
  const std::size_t batch = input.shape().n;
  require_same_shape(Shape{batch, g.out_channels, g.out_h, g.out_w}, grad_output.shape(),
                     "conv2d_backward grad_output");
  if (grad_input)
    require_same_shape(input.shape(), grad_input->shape(), "conv2d_backward grad_input");
  if (grad_weight)
    require_same_shape(weight.shape(), grad_weight->shape(), "conv2d_backward grad_weight");

  const std::size_t plane = g.out_plane();
  const std::size_t kdim = g.k_dim();
  const std::size_t chunk = chunk_columns(g);
  std::vector<T> col;
  std::vector<T> dcol;

  for (std::size_t n = 0; n < batch; ++n) {
    const T* dy = grad_output.plane(n, 0);
    if (!grad_bias.empty())
      for (std::size_t oc = 0; oc < g.out_channels; ++oc) {
        T acc{};
        const T* row = dy + oc * plane;
        for (std::size_t q = 0; q < plane; ++q)
          acc += row[q];
        grad_bias[oc] += acc;
      }
    for (std::size_t p0 = 0; p0 < plane; p0 += chunk) {
      const std::size_t count = std::min(chunk, plane - p0);
      if (grad_weight) {
        const T* cols = nullptr;
        std::size_t ld = count;
        if (g.pointwise()) {
          cols = input.plane(n, 0) + p0;
          ld = plane;
        } else {
          col.resize(kdim * count);
          im2col(g, input.plane(n, 0), p0, count, col.data());
          cols = col.data();
        }
        gemm<T>(Transpose::no, Transpose::yes, g.out_channels, kdim, count, dy + p0, plane, cols, ld,
                grad_weight->data().data(), kdim, true);
      }
      if (grad_input) {
        if (g.pointwise()) {
          gemm<T>(Transpose::yes, Transpose::no, kdim, count, g.out_channels, weight.data().data(),
                  kdim, dy + p0, plane, grad_input->plane(n, 0) + p0, plane, true);
        } else {
          dcol.resize(kdim * count);
          gemm<T>(Transpose::yes, Transpose::no, kdim, count, g.out_channels, weight.data().data(),
                  kdim, dy + p0, plane, dcol.data(), count, false);
          col2im_add(g, dcol.data(), p0, count, grad_input->plane(n, 0));
        }
      }
    }
  }
}

template <typename T>
BasicTensor<T> maxpool2d(const BasicTensor<T>& input, Pair kernel, Pair stride,
                         std::vector<std::size_t>* argmax) {
  const Shape& in = input.shape();
  if (kernel.rows > in.h || kernel.cols > in.w)
    throw DimensionError("maxpool2d: kernel " + std::to_string(kernel.rows) + "x" +
                         std::to_string(kernel.cols) + " larger than input " +
                         std::to_string(in.h) + "x" + std::to_string(in.w) +
                         (kernel.rows > in.h ? " (axis: rows)" : " (axis: cols)"));
  const std::size_t oh = window_output_extent(in.h, kernel.rows, stride.rows, 0, "rows");
  const std::size_t ow = window_output_extent(in.w, kernel.cols, stride.cols, 0, "cols");
  BasicTensor<T> out(Shape{in.n, in.c, oh, ow});
  if (argmax)
    argmax->assign(out.size(), 0);
  std::size_t o = 0;
  for (std::size_t n = 0; n < in.n; ++n)
    for (std::size_t c = 0; c < in.c; ++c) {
      const std::size_t base = input.index(n, c, 0, 0);
      const T* src = input.data().data() + base;
      for (std::size_t y = 0; y < oh; ++y)
        for (std::size_t x = 0; x < ow; ++x, ++o) {
          std::size_t best = (y * stride.rows) * in.w + x * stride.cols;
          T best_v = src[best];
          for (std::size_t i = 0; i < kernel.rows; ++i)
            for (std::size_t j = 0; j < kernel.cols; ++j) {
              const std::size_t idx = (y * stride.rows + i) * in.w + x * stride.cols + j;
              if (src[idx] > best_v) {
                best_v = src[idx];
                best = idx;
              }
            }
          out[o] = best_v;
          if (argmax)
            (*argmax)[o] = base + best;
        }
    }
  return out;
}

template <typename T>
void maxpool2d_backward(const BasicTensor<T>& grad_output, std::span<const std::size_t> argmax,
                        BasicTensor<T>& grad_input) {
  if (argmax.size() != grad_output.size())
    throw DimensionError("maxpool2d_backward: argmax length does not match grad_output");
  for (std::size_t i = 0; i < argmax.size(); ++i)
    grad_input[argmax[i]] += grad_output[i];
}

template <typename T>
BasicTensor<T> resize_bilinear(const BasicTensor<T>& input, std::size_t rows, std::size_t cols) {
  const Shape& in = input.shape();
  if (rows == 0 || cols == 0)
    throw ArgumentError("resize_bilinear: target extent must be positive");
  if (in.h == 0 || in.w == 0)
    throw DimensionError("resize_bilinear: empty input");
  const AxisSamples ys = half_pixel_samples(in.h, rows);
  const AxisSamples xs = half_pixel_samples(in.w, cols);
  BasicTensor<T> out(Shape{in.n, in.c, rows, cols});
  for (std::size_t n = 0; n < in.n; ++n)
    for (std::size_t c = 0; c < in.c; ++c) {
      const T* src = input.plane(n, c);
      T* dst = out.plane(n, c);
      for (std::size_t y = 0; y < rows; ++y) {
        const T* r0 = src + ys.lo[y] * in.w;
        const T* r1 = src + ys.hi[y] * in.w;
        const T fy = static_cast<T>(ys.frac[y]);
        for (std::size_t x = 0; x < cols; ++x) {
          const T fx = static_cast<T>(xs.frac[x]);
          const T top = r0[xs.lo[x]] + fx * (r0[xs.hi[x]] - r0[xs.lo[x]]);
          const T bottom = r1[xs.lo[x]] + fx * (r1[xs.hi[x]] - r1[xs.lo[x]]);
          dst[y * cols + x] = top + fy * (bottom - top);
        }
      }
    }
  return out;
}

template <typename T>
void resize_bilinear_backward(const BasicTensor<T>& grad_output, BasicTensor<T>& grad_input) {
  const Shape& in = grad_input.shape();
  const Shape& out = grad_output.shape();
  if (in.n != out.n || in.c != out.c)
    throw DimensionError("resize_bilinear_backward: batch/channel mismatch");
  const AxisSamples ys = half_pixel_samples(in.h, out.h);
  const AxisSamples xs = half_pixel_samples(in.w, out.w);
  for (std::size_t n = 0; n < in.n; ++n)
    for (std::size_t c = 0; c < in.c; ++c) {
      const T* g = grad_output.plane(n, c);
      T* dst = grad_input.plane(n, c);
      for (std::size_t y = 0; y < out.h; ++y) {
        const T fy = static_cast<T>(ys.frac[y]);
        T* r0 = dst + ys.lo[y] * in.w;
        T* r1 = dst + ys.hi[y] * in.w;
        for (std::size_t x = 0; x < out.w; ++x) {
          const T fx = static_cast<T>(xs.frac[x]);
          const T v = g[y * out.w + x];
          r0[xs.lo[x]] += v * (1 - fy) * (1 - fx);
          r0[xs.hi[x]] += v * (1 - fy) * fx;
          r1[xs.lo[x]] += v * fy * (1 - fx);
          r1[xs.hi[x]] += v * fy * fx;
        }
      }
    }
}

template <typename T>
BasicTensor<T> upsample(const BasicTensor<T>& input, std::size_t factor) {
  if (factor == 0)
    throw ArgumentError("upsample: factor must be >= 1");
  if (factor == 1)
    return input;
  return resize_bilinear(input, input.shape().h * factor, input.shape().w * factor);
}

template <typename T>
BasicTensor<T> activation(const BasicTensor<T>& input, Activation kind) {
  BasicTensor<T> out(input.shape());
  const auto src = input.data();
  auto dst = out.data();
  if (kind == Activation::relu) {
    for (std::size_t i = 0; i < src.size(); ++i)
      dst[i] = src[i] > T{} ? src[i] : T{};
  } else {
    for (std::size_t i = 0; i < src.size(); ++i)
      dst[i] = clamp_open_unit(T(1) / (T(1) + std::exp(-src[i])));
  }
  return out;
}

template <typename T>
void activation_backward(const BasicTensor<T>& output, const BasicTensor<T>& grad_output,
                         Activation kind, BasicTensor<T>& grad_input) {
  require_same_shape(output.shape(), grad_output.shape(), "activation_backward");
  require_same_shape(output.shape(), grad_input.shape(), "activation_backward");
  const auto y = output.data();
  const auto g = grad_output.data();
  auto dst = grad_input.data();
  if (kind == Activation::relu) {
    for (std::size_t i = 0; i < y.size(); ++i)
      if (y[i] > T{})
        dst[i] += g[i];
  } else {
    for (std::size_t i = 0; i < y.size(); ++i)
      dst[i] += g[i] * y[i] * (T(1) - y[i]);
  }
}

namespace {

// True when b is broadcast across a's channels.
template <typename T>
bool check_broadcast(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa == sb)
    return false;
  if (sb.c == 1 && sb.n == sa.n && sb.h == sa.h && sb.w == sa.w)
    return true;
  const char* axis = sb.n != sa.n ? "batch" : sb.c != sa.c ? "channels" : sb.h != sa.h ? "rows" : "cols";
  throw DimensionError("elementwise: shapes " + sa.str() + " and " + sb.str() +
                       " are incompatible (axis: " + axis + ")");
}

} // namespace

template <typename T>
BasicTensor<T> elementwise(const BasicTensor<T>& a, const BasicTensor<T>& b, ElementwiseOp op) {
  const bool broadcast = check_broadcast(a, b);
  const Shape& s = a.shape();
  BasicTensor<T> out(s);
  const std::size_t plane = s.plane();
  for (std::size_t n = 0; n < s.n; ++n)
    for (std::size_t c = 0; c < s.c; ++c) {
      const T* pa = a.plane(n, c);
      const T* pb = broadcast ? b.plane(n, 0) : b.plane(n, c);
      T* po = out.plane(n, c);
      if (op == ElementwiseOp::add)
        for (std::size_t i = 0; i < plane; ++i)
          po[i] = pa[i] + pb[i];
      else
        for (std::size_t i = 0; i < plane; ++i)
          po[i] = pa[i] * pb[i];
    }
  return out;
}

template <typename T>
void elementwise_backward(const BasicTensor<T>& a, const BasicTensor<T>& b,
                          const BasicTensor<T>& grad_output, ElementwiseOp op,
                          BasicTensor<T>* grad_a, BasicTensor<T>* grad_b) {
  const bool broadcast = check_broadcast(a, b);
  const Shape& s = a.shape();
  require_same_shape(s, grad_output.shape(), "elementwise_backward");
  const std::size_t plane = s.plane();
  for (std::size_t n = 0; n < s.n; ++n)
    for (std::size_t c = 0; c < s.c; ++c) {
      const T* g = grad_output.plane(n, c);
      const T* pa = a.plane(n, c);
      const T* pb = broadcast ? b.plane(n, 0) : b.plane(n, c);
      if (grad_a) {
        T* da = grad_a->plane(n, c);
        for (std::size_t i = 0; i < plane; ++i)
          da[i] += op == ElementwiseOp::add ? g[i] : g[i] * pb[i];
      }
      if (grad_b) {
        T* db = broadcast ? grad_b->plane(n, 0) : grad_b->plane(n, c);
        for (std::size_t i = 0; i < plane; ++i)
          db[i] += op == ElementwiseOp::add ? g[i] : g[i] * pa[i];
      }
    }
}

#define ATSAL_INSTANTIATE_OPS(T)                                                                  \
  template BasicTensor<T> conv2d<T>(const BasicTensor<T>&, const BasicTensor<T>&,                 \
                                    std::span<const T>, Pair, Pair);                              \
  template void conv2d_backward<T>(const BasicTensor<T>&, const BasicTensor<T>&,                  \
                                   const BasicTensor<T>&, Pair, Pair, BasicTensor<T>*,            \
                                   BasicTensor<T>*, std::span<T>);                                \
  template BasicTensor<T> maxpool2d<T>(const BasicTensor<T>&, Pair, Pair,                         \
                                       std::vector<std::size_t>*);                                \
  template void maxpool2d_backward<T>(const BasicTensor<T>&, std::span<const std::size_t>,        \
                                      BasicTensor<T>&);                                           \
  template BasicTensor<T> resize_bilinear<T>(const BasicTensor<T>&, std::size_t, std::size_t);    \
  template void resize_bilinear_backward<T>(const BasicTensor<T>&, BasicTensor<T>&);              \
  template BasicTensor<T> upsample<T>(const BasicTensor<T>&, std::size_t);                        \
  template BasicTensor<T> activation<T>(const BasicTensor<T>&, Activation);                       \
  template void activation_backward<T>(const BasicTensor<T>&, const BasicTensor<T>&, Activation, \
                                       BasicTensor<T>&);                                          \
  template BasicTensor<T> elementwise<T>(const BasicTensor<T>&, const BasicTensor<T>&,            \
                                         ElementwiseOp);                                          \
  template void elementwise_backward<T>(const BasicTensor<T>&, const BasicTensor<T>&,             \
                                        const BasicTensor<T>&, ElementwiseOp, BasicTensor<T>*,    \
                                        BasicTensor<T>*);

ATSAL_INSTANTIATE_OPS(float)
ATSAL_INSTANTIATE_OPS(double)

#undef ATSAL_INSTANTIATE_OPS

} // namespace atsal
