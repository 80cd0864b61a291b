#pragma once

#include <atsal/ops.hpp>
#include <atsal/tensor.hpp>

#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace atsal {

// Handle to a node recorded on a Tape.
struct Var {
  static constexpr std::size_t invalid = std::numeric_limits<std::size_t>::max();
  std::size_t id = invalid;
};

// Choices made by piecewise ops in recording order: the active mask of every
// relu and the winning input index of every max-pool output.
struct BranchTrace {
  std::vector<std::vector<std::size_t>> choices;
};

// Reverse-mode autodiff tape. Every op evaluates eagerly, stores its value and
// a backward closure; backward() replays the closures in reverse order.
// A tape is single-threaded; build one tape per sample for parallel work.
template <typename T>
class Tape {
public:
  using Tensor = BasicTensor<T>;
  using Value = Var;

  Tape() = default;
  // Binds a parameter map so that param(key) can lift entries onto the tape.
  explicit Tape(const ParamMap<T>& params) : bound_params_(&params) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) noexcept = default;
  Tape& operator=(Tape&&) noexcept = default;

  Var constant(Tensor value);
  Var variable(Tensor value);
  // Differentiable leaf for a bound parameter; repeated lookups share a node.
  Var param(const std::string& key);

  const Tensor& value(Var v) const;
  const Tensor& grad(Var v) const;
  bool requires_grad(Var v) const;
  std::size_t size() const noexcept { return nodes_.size(); }

  const std::map<std::string, Var>& params() const noexcept { return params_; }
  // Gradients of every parameter lifted with param(), keyed by name.
  ParamMap<T> param_grads() const;

  Var conv2d(Var input, Var weight, Var bias, Pair stride, Pair padding);
  Var maxpool2d(Var input, Pair kernel, Pair stride);
  Var resize(Var input, std::size_t rows, std::size_t cols);
  Var upsample(Var input, std::size_t factor);
  Var activation(Var input, Activation kind);
  Var relu(Var input) { return activation(input, Activation::relu); }
  Var sigmoid(Var input) { return activation(input, Activation::sigmoid); }
  Var elementwise(Var a, Var b, ElementwiseOp op);
  Var add(Var a, Var b) { return elementwise(a, b, ElementwiseOp::add); }
  Var mul(Var a, Var b) { return elementwise(a, b, ElementwiseOp::mul); }
  // scale * x + shift, elementwise.
  Var affine(Var input, T scale, T shift);
  // Scalar sum of all elements (64-bit accumulation).
  Var sum(Var input);
  // x / sum(x) over all elements.
  Var sum_normalize(Var input);
  // Scalar sum_i weights[i] * terms[i]; every term must be a scalar.
  Var weighted_sum(std::span<const Var> terms, std::span<const T> weights);
  // Records a scalar function of `input` whose value and gradient were
  // computed externally.
  Var scalar_function(Var input, T value, Tensor gradient);

  // Populates grad() for every node on the path to `loss` (a scalar).
  void backward(Var loss);

  // Appends every subsequent relu / max-pool choice to `trace`.
  void record_branches(BranchTrace* trace) noexcept { recording_ = trace; }
  // Replays the choices of `trace` instead of comparing values, which turns
  // the recorded graph into a smooth function of its inputs. The trace must
  // come from the same sequence of ops.
  void pin_branches(const BranchTrace* trace) noexcept {
    pinned_ = trace;
    replayed_ = 0;
  }

private:
  using Backward = std::function<void(Tape&, std::size_t self)>;

  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    Backward backward;
  };

  Var push(Tensor value, bool requires_grad, Backward backward);
  const Node& node(Var v) const;
  Tensor& grad_buffer(std::size_t id);
  bool needs(Var v) const { return nodes_[v.id].requires_grad; }

  std::vector<Node> nodes_;
  std::map<std::string, Var> params_;
  const ParamMap<T>* bound_params_ = nullptr;
  bool has_gradients_ = false;
  BranchTrace* recording_ = nullptr;
  const BranchTrace* pinned_ = nullptr;
  std::size_t replayed_ = 0;

  const std::vector<std::size_t>& next_pinned(std::size_t expected);
};

// Forward-only executor with the same op surface as Tape, used for inference.
template <typename T>
class Eager {
public:
  using Tensor = BasicTensor<T>;
  using Value = Tensor;

  explicit Eager(const ParamMap<T>& params) : params_(&params) {}

  Tensor constant(Tensor value) const { return value; }

  const Tensor& param(const std::string& key) const {
    auto it = params_->find(key);
    if (it == params_->end())
      throw MissingKeyError(key);
    return it->second;
  }

  Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, Pair stride, Pair pad) const {
    return atsal::conv2d<T>(x, w, b.data(), stride, pad);
  }
  Tensor maxpool2d(const Tensor& x, Pair kernel, Pair stride) const {
    return atsal::maxpool2d<T>(x, kernel, stride);
  }
  Tensor resize(const Tensor& x, std::size_t rows, std::size_t cols) const {
    return resize_bilinear<T>(x, rows, cols);
  }
  Tensor upsample(const Tensor& x, std::size_t factor) const {
    return atsal::upsample<T>(x, factor);
  }
  Tensor activation(const Tensor& x, Activation kind) const {
    return atsal::activation<T>(x, kind);
  }
  Tensor relu(const Tensor& x) const { return activation(x, Activation::relu); }
  Tensor sigmoid(const Tensor& x) const { return activation(x, Activation::sigmoid); }
  Tensor elementwise(const Tensor& a, const Tensor& b, ElementwiseOp op) const {
    return atsal::elementwise<T>(a, b, op);
  }
  Tensor add(const Tensor& a, const Tensor& b) const { return elementwise(a, b, ElementwiseOp::add); }
  Tensor mul(const Tensor& a, const Tensor& b) const { return elementwise(a, b, ElementwiseOp::mul); }
  Tensor affine(const Tensor& x, T scale, T shift) const {
    Tensor out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i)
      out[i] = scale * x[i] + shift;
    return out;
  }
  const Tensor& value(const Tensor& x) const { return x; }

private:
  const ParamMap<T>* params_;
};

} // namespace atsal
