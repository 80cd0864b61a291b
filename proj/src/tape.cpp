#include <atsal/tape.hpp>

#include <string>
#include <utility>

namespace atsal {

template <typename T>
Var Tape<T>::push(Tensor value, bool requires_grad, Backward backward) {
  nodes_.push_back(Node{std::move(value), Tensor{}, requires_grad,
                        requires_grad ? std::move(backward) : Backward{}});
  has_gradients_ = false;
  return Var{nodes_.size() - 1};
}

template <typename T>
const typename Tape<T>::Node& Tape<T>::node(Var v) const {
  if (v.id >= nodes_.size())
    throw StateError("tape: variable " +
                     (v.id == Var::invalid ? std::string("<unset>") : std::to_string(v.id)) +
                     " is not recorded on this tape");
  return nodes_[v.id];
}

template <typename T>
typename Tape<T>::Tensor& Tape<T>::grad_buffer(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty() && !n.value.empty())
    n.grad = Tensor(n.value.shape());
  return n.grad;
}

template <typename T>
Var Tape<T>::constant(Tensor value) {
  return push(std::move(value), false, {});
}

template <typename T>
Var Tape<T>::variable(Tensor value) {
  return push(std::move(value), true, {});
}

template <typename T>
Var Tape<T>::param(const std::string& key) {
  if (auto it = params_.find(key); it != params_.end())
    return it->second;
  if (!bound_params_)
    throw StateError("tape: param('" + key + "') without a bound parameter map");
  auto it = bound_params_->find(key);
  if (it == bound_params_->end())
    throw MissingKeyError(key);
  const Var v = variable(it->second);
  params_.emplace(key, v);
  return v;
}

template <typename T>
const typename Tape<T>::Tensor& Tape<T>::value(Var v) const {
  return node(v).value;
}

template <typename T>
const typename Tape<T>::Tensor& Tape<T>::grad(Var v) const {
  const Node& n = node(v);
  if (!has_gradients_)
    throw StateError("tape: grad() requested before backward()");
  if (!n.requires_grad)
    throw StateError("tape: variable " + std::to_string(v.id) + " does not require grad");
  return n.grad;
}

template <typename T>
bool Tape<T>::requires_grad(Var v) const {
  return node(v).requires_grad;
}

template <typename T>
ParamMap<T> Tape<T>::param_grads() const {
  ParamMap<T> out;
  for (const auto& [key, v] : params_)
    out.emplace(key, grad(v));
  return out;
}

template <typename T>
Var Tape<T>::conv2d(Var input, Var weight, Var bias, Pair stride, Pair padding) {
  const Tensor& b = value(bias);
  Tensor out = atsal::conv2d<T>(value(input), value(weight), b.data(), stride, padding);
  const bool rg = needs(input) || needs(weight) || needs(bias);
  return push(std::move(out), rg, [=](Tape& t, std::size_t self) {
    const Tensor& g = t.nodes_[self].grad;
    Tensor* gi = t.needs(input) ? &t.grad_buffer(input.id) : nullptr;
    Tensor* gw = t.needs(weight) ? &t.grad_buffer(weight.id) : nullptr;
    std::span<T> gb = t.needs(bias) ? t.grad_buffer(bias.id).data() : std::span<T>{};
    conv2d_backward<T>(t.nodes_[input.id].value, t.nodes_[weight.id].value, g, stride, padding, gi,
                       gw, gb);
  });
}

template <typename T>
const std::vector<std::size_t>& Tape<T>::next_pinned(std::size_t expected) {
  if (replayed_ >= pinned_->choices.size() || pinned_->choices[replayed_].size() != expected)
    throw StateError("tape: pinned branch trace does not match the recorded ops");
  return pinned_->choices[replayed_++];
}

template <typename T>
Var Tape<T>::maxpool2d(Var input, Pair kernel, Pair stride) {
  std::vector<std::size_t> argmax;
  Tensor out = atsal::maxpool2d<T>(value(input), kernel, stride, &argmax);
  if (pinned_) {
    argmax = next_pinned(argmax.size());
    const Tensor& x = value(input);
    for (std::size_t i = 0; i < argmax.size(); ++i)
      out[i] = x[argmax[i]];
  }
  if (recording_)
    recording_->choices.push_back(argmax);
  return push(std::move(out), needs(input),
              [=, argmax = std::move(argmax)](Tape& t, std::size_t self) {
                maxpool2d_backward<T>(t.nodes_[self].grad, argmax, t.grad_buffer(input.id));
              });
}

template <typename T>
Var Tape<T>::resize(Var input, std::size_t rows, std::size_t cols) {
  Tensor out = resize_bilinear<T>(value(input), rows, cols);
  return push(std::move(out), needs(input), [=](Tape& t, std::size_t self) {
    resize_bilinear_backward<T>(t.nodes_[self].grad, t.grad_buffer(input.id));
  });
}

template <typename T>
Var Tape<T>::upsample(Var input, std::size_t factor) {
  if (factor == 0)
    throw ArgumentError("upsample: factor must be >= 1");
  const Shape& s = value(input).shape();
  return resize(input, s.h * factor, s.w * factor);
}

template <typename T>
Var Tape<T>::activation(Var input, Activation kind) {
  if (kind == Activation::relu && (pinned_ || recording_)) {
    const Tensor& x = value(input);
    std::vector<std::size_t> mask(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
      mask[i] = x[i] > T(0) ? 1 : 0;
    if (pinned_)
      mask = next_pinned(mask.size());
    if (recording_)
      recording_->choices.push_back(mask);
    Tensor out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i)
      out[i] = mask[i] ? x[i] : T(0);
    return push(std::move(out), needs(input),
                [=, mask = std::move(mask)](Tape& t, std::size_t self) {
                  const Tensor& g = t.nodes_[self].grad;
                  Tensor& gi = t.grad_buffer(input.id);
                  for (std::size_t i = 0; i < g.size(); ++i)
                    if (mask[i])
                      gi[i] += g[i];
                });
  }
  Tensor out = atsal::activation<T>(value(input), kind);
  return push(std::move(out), needs(input), [=](Tape& t, std::size_t self) {
    activation_backward<T>(t.nodes_[self].value, t.nodes_[self].grad, kind,
                           t.grad_buffer(input.id));
  });
}

template <typename T>
Var Tape<T>::elementwise(Var a, Var b, ElementwiseOp op) {
  Tensor out = atsal::elementwise<T>(value(a), value(b), op);
  return push(std::move(out), needs(a) || needs(b), [=](Tape& t, std::size_t self) {
    Tensor* ga = t.needs(a) ? &t.grad_buffer(a.id) : nullptr;
    Tensor* gb = t.needs(b) ? &t.grad_buffer(b.id) : nullptr;
    elementwise_backward<T>(t.nodes_[a.id].value, t.nodes_[b.id].value, t.nodes_[self].grad, op,
                            ga, gb);
  });
}

template <typename T>
Var Tape<T>::affine(Var input, T scale, T shift) {
  const Tensor& x = value(input);
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i)
    out[i] = scale * x[i] + shift;
  return push(std::move(out), needs(input), [=](Tape& t, std::size_t self) {
    const Tensor& g = t.nodes_[self].grad;
    Tensor& gi = t.grad_buffer(input.id);
    for (std::size_t i = 0; i < g.size(); ++i)
      gi[i] += scale * g[i];
  });
}

template <typename T>
Var Tape<T>::sum(Var input) {
  double acc = 0.0;
  for (const T v : value(input).data())
    acc += static_cast<double>(v);
  return push(Tensor::scalar(static_cast<T>(acc)), needs(input), [=](Tape& t, std::size_t self) {
    const T g = t.nodes_[self].grad[0];
    for (T& v : t.grad_buffer(input.id).data())
      v += g;
  });
}

template <typename T>
Var Tape<T>::sum_normalize(Var input) {
  const Tensor& x = value(input);
  double total = 0.0;
  for (const T v : x.data())
    total += static_cast<double>(v);
  if (!(total > 0.0))
    throw DomainError("sum_normalize: total mass must be positive");
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i)
    out[i] = static_cast<T>(static_cast<double>(x[i]) / total);
  return push(std::move(out), needs(input), [=](Tape& t, std::size_t self) {
    // d(x_i / S)/dx_j = (delta_ij - y_i) / S
    const Tensor& g = t.nodes_[self].grad;
    const Tensor& y = t.nodes_[self].value;
    double dot = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
      dot += static_cast<double>(g[i]) * static_cast<double>(y[i]);
    Tensor& gi = t.grad_buffer(input.id);
    for (std::size_t i = 0; i < g.size(); ++i)
      gi[i] += static_cast<T>((static_cast<double>(g[i]) - dot) / total);
  });
}

template <typename T>
Var Tape<T>::weighted_sum(std::span<const Var> terms, std::span<const T> weights) {
  if (terms.size() != weights.size())
    throw ArgumentError("weighted_sum: terms and weights differ in length");
  double acc = 0.0;
  bool rg = false;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const Tensor& v = value(terms[i]);
    if (v.size() != 1)
      throw DimensionError("weighted_sum: term " + std::to_string(i) + " is not a scalar");
    acc += static_cast<double>(weights[i]) * static_cast<double>(v[0]);
    rg = rg || needs(terms[i]);
  }
  std::vector<Var> ts(terms.begin(), terms.end());
  std::vector<T> ws(weights.begin(), weights.end());
  return push(Tensor::scalar(static_cast<T>(acc)), rg,
              [ts = std::move(ts), ws = std::move(ws)](Tape& t, std::size_t self) {
                const T g = t.nodes_[self].grad[0];
                for (std::size_t i = 0; i < ts.size(); ++i)
                  if (t.needs(ts[i]))
                    t.grad_buffer(ts[i].id)[0] += ws[i] * g;
              });
}

template <typename T>
Var Tape<T>::scalar_function(Var input, T value_, Tensor gradient) {
  if (gradient.shape() != value(input).shape())
    throw DimensionError("scalar_function: gradient shape " + gradient.shape().str() +
                         " does not match input " + value(input).shape().str());
  return push(Tensor::scalar(value_), needs(input),
              [=, gradient = std::move(gradient)](Tape& t, std::size_t self) {
                const T g = t.nodes_[self].grad[0];
                Tensor& gi = t.grad_buffer(input.id);
                for (std::size_t i = 0; i < gradient.size(); ++i)
                  gi[i] += g * gradient[i];
              });
}

template <typename T>
void Tape<T>::backward(Var loss) {
  if (nodes_.empty())
    throw StateError("backward() called before any forward operation was recorded");
  const Node& root = node(loss);
  if (root.value.size() != 1)
    throw ArgumentError("backward() expects a scalar loss, got shape " + root.value.shape().str());
  for (Node& n : nodes_)
    n.grad = Tensor{};
  if (root.requires_grad) {
    grad_buffer(loss.id)[0] = T(1);
    for (std::size_t i = loss.id + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (n.requires_grad && n.backward && !n.grad.empty())
        n.backward(*this, i);
    }
  }
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (nodes_[i].requires_grad)
      grad_buffer(i);
  has_gradients_ = true;
}

template class Tape<float>;
template class Tape<double>;

} // namespace atsal
