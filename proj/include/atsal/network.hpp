#pragma once

#include <atsal/tensor.hpp>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace atsal {

enum class LayerKind { conv, maxpool, upsample, relu, sigmoid };

const char* to_string(LayerKind kind) noexcept;

// One row of a declarative network. Non-conv layers carry the channel count
// through unchanged (in_channels == out_channels).
struct LayerSpec {
  LayerKind kind = LayerKind::relu;
  Pair kernel{1, 1};
  Pair stride{1, 1};
  Pair padding{0, 0};
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t upsample_factor = 1;
  // Parameter key component for conv layers.
  std::string name;
  // Conv output passes through the temporal EMA hook.
  bool temporal = false;

  std::size_t parameter_count() const noexcept;
  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct NetworkSpec {
  std::string name;
  std::vector<LayerSpec> layers;

  std::size_t input_channels() const;
  std::size_t output_channels() const;
  // Throws ArgumentError when extents are zero or channel counts do not chain.
  void validate() const;
  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

// Fluent construction that fills in carried-through channel counts.
class NetworkBuilder {
public:
  NetworkBuilder(std::string name, std::size_t input_channels);

  NetworkBuilder& conv(std::string layer_name, std::size_t out_channels, std::size_t kernel,
                       std::size_t padding, std::size_t stride = 1);
  NetworkBuilder& maxpool(std::size_t kernel, std::size_t stride);
  NetworkBuilder& upsample(std::size_t factor);
  NetworkBuilder& relu();
  NetworkBuilder& sigmoid();
  // Marks the most recent conv layer as EMA-wrapped.
  NetworkBuilder& temporal();

  NetworkSpec build() const;

private:
  NetworkSpec spec_;
  std::size_t channels_;
};

// Sum over conv layers of out*in*kh*kw + out.
std::size_t count_parameters(const NetworkSpec& spec);

// Layers of a followed by layers of b, named "<a>+<b>". Channels must chain.
NetworkSpec concat(const NetworkSpec& a, const NetworkSpec& b);

// Divides every interior channel count by divisor. keep_input / keep_output
// hold the first conv's input and last conv's output at their original width.
NetworkSpec scale_width(const NetworkSpec& spec, std::size_t divisor, bool keep_input,
                        bool keep_output);

// Receptive field after each layer, composed as rf += (k - 1) * jump,
// jump *= stride; upsampling divides the jump.
struct ReceptiveFieldRow {
  std::size_t index = 0;
  LayerKind kind = LayerKind::relu;
  std::string name;
  std::size_t rf_rows = 1;
  std::size_t rf_cols = 1;
  double jump_rows = 1.0;
  double jump_cols = 1.0;
};

std::vector<ReceptiveFieldRow> receptive_field(const NetworkSpec& spec);

// Text form: optional "# network <name>" header, then one line per layer:
//   kind k s p in out factor [name]
// with k/s/p written as "3" or "3x1" and kind "conv+ema" for temporal convs.
void write_spec(std::ostream& out, const NetworkSpec& spec);
NetworkSpec read_spec(std::istream& in);
std::string to_text(const NetworkSpec& spec);
NetworkSpec spec_from_text(const std::string& text);

// Parameter keys: <prefix><network name>/<layer name>/{weight,bias}.
std::string weight_key(const std::string& prefix, const NetworkSpec& spec, const LayerSpec& layer);
std::string bias_key(const std::string& prefix, const NetworkSpec& spec, const LayerSpec& layer);

// He-uniform weights U(-sqrt(6/fan_in), sqrt(6/fan_in)), zero biases.
void init_he_uniform(const NetworkSpec& spec, const std::string& prefix, std::mt19937_64& rng,
                     WeightStore& out);

// Uniform double in [0, 1) from the top 53 bits; platform independent.
double uniform01(std::mt19937_64& rng);

// Hooks that customize run_network for a particular stream.
template <typename Value>
struct RunHooks {
  // Applied to the output of every conv layer flagged temporal.
  std::function<Value(Value)> temporal;
  // When set, upsample layers resize to this (rows, cols) instead of
  // multiplying by their factor.
  std::optional<Pair> upsample_target;
};

// Executes spec on x with any executor exposing the Tape/Eager op surface.
template <class Ops, typename Value = typename Ops::Value>
Value run_network(Ops& ops, const NetworkSpec& spec, const std::string& prefix, Value x,
                  const RunHooks<Value>& hooks = {}) {
  for (const LayerSpec& layer : spec.layers) {
    switch (layer.kind) {
    case LayerKind::conv: {
      const auto& w = ops.param(weight_key(prefix, spec, layer));
      const auto& b = ops.param(bias_key(prefix, spec, layer));
      x = ops.conv2d(x, w, b, layer.stride, layer.padding);
      if (layer.temporal && hooks.temporal)
        x = hooks.temporal(std::move(x));
      break;
    }
    case LayerKind::maxpool:
      x = ops.maxpool2d(x, layer.kernel, layer.stride);
      break;
    case LayerKind::upsample:
      if (hooks.upsample_target)
        x = ops.resize(x, hooks.upsample_target->rows, hooks.upsample_target->cols);
      else
        x = ops.upsample(x, layer.upsample_factor);
      break;
    case LayerKind::relu:
      x = ops.relu(x);
      break;
    case LayerKind::sigmoid:
      x = ops.sigmoid(x);
      break;
    }
  }
  return x;
}

} // namespace atsal
