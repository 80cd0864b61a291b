#pragma once

#include <atsal/network.hpp>
#include <atsal/tape.hpp>
#include <atsal/tensor.hpp>

#include <cstdint>
#include <optional>
#include <string>

namespace atsal {

inline const std::string attention_prefix = "attention/";

// Stock VGG-16 convolutional stack through pool5.
NetworkSpec build_vgg16_spec();
// VGG-16 with pool3 widened to (4, 4) and pool4/pool5 removed: x16 downsampling.
NetworkSpec build_encoder_spec();
// The mask branch: two conv pairs separated by pooling, a 1x1 head, x4
// upsampling back to the latent grid and a sigmoid.
NetworkSpec build_attention_spec();
// Mirror of the encoder with bilinear upsampling, x16 in total.
NetworkSpec build_decoder_spec();

struct AttentionNetworks {
  NetworkSpec encoder;
  NetworkSpec attention;
  NetworkSpec decoder;
};

// The three networks with interior widths divided by width_divisor; the
// RGB input and single-channel heads keep their widths.
AttentionNetworks attention_networks(std::size_t width_divisor = 1);

template <typename V>
struct AttentionValues {
  V saliency; // Y1
  V mask;     // M
  V encoded;  // z1
  V latent;   // z = (1 + M) * z1
};

using AttentionOutput = AttentionValues<Tensor>;

template <typename T>
struct AttentionHooks {
  // Replaces the computed mask, e.g. to pin M to 0 or 1.
  std::optional<BasicTensor<T>> mask_override;
};

template <class Ops>
AttentionValues<typename Ops::Value>
forward_attention(Ops& ops, const AttentionNetworks& nets, typename Ops::Value frame,
                  const AttentionHooks<typename Ops::Tensor::value_type>& hooks = {}) {
  using Value = typename Ops::Value;
  AttentionValues<Value> out;
  out.encoded = run_network(ops, nets.encoder, attention_prefix, frame);
  if (hooks.mask_override) {
    out.mask = ops.constant(*hooks.mask_override);
  } else {
    // The x4 upsample lands exactly on the latent grid at full scale; at
    // reduced resolutions pooling floors, so resize to the latent extents.
    const Shape z1 = ops.value(out.encoded).shape();
    RunHooks<Value> hook;
    hook.upsample_target = Pair{z1.h, z1.w};
    out.mask = run_network(ops, nets.attention, attention_prefix, out.encoded, hook);
  }
  out.latent = ops.mul(out.encoded, ops.affine(out.mask, 1, 1));
  out.saliency = run_network(ops, nets.decoder, attention_prefix, out.latent);
  return out;
}

// Inference convenience over the eager executor.
AttentionOutput forward_attention(const Tensor& frame, const WeightStore& weights,
                                  std::size_t width_divisor = 1,
                                  const AttentionHooks<float>& hooks = {});

// He-uniform weights for all three networks under attention_prefix.
WeightStore init_attention_weights(std::uint64_t seed, std::size_t width_divisor = 1);

void init_attention_weights(const AttentionNetworks& nets, std::mt19937_64& rng, WeightStore& out);

} // namespace atsal
