#include <atsal/attention.hpp>

namespace atsal {
namespace {

// conv 3x3 pad 1 followed by relu, for each width in the block.
void vgg_block(NetworkBuilder& b, int block, std::initializer_list<std::size_t> widths) {
  int i = 1;
  for (const std::size_t w : widths) {
    b.conv("conv" + std::to_string(block) + "_" + std::to_string(i++), w, 3, 1).relu();
  }
}

} // namespace

NetworkSpec build_vgg16_spec() {
  NetworkBuilder b("vgg16", 3);
  vgg_block(b, 1, {64, 64});
  b.maxpool(2, 2);
  vgg_block(b, 2, {128, 128});
  b.maxpool(2, 2);
  vgg_block(b, 3, {256, 256, 256});
  b.maxpool(2, 2);
  vgg_block(b, 4, {512, 512, 512});
  b.maxpool(2, 2);
  vgg_block(b, 5, {512, 512, 512});
  b.maxpool(2, 2);
  return b.build();
}

NetworkSpec build_encoder_spec() {
  NetworkBuilder b("encoder", 3);
  vgg_block(b, 1, {64, 64});
  b.maxpool(2, 2);
  vgg_block(b, 2, {128, 128});
  b.maxpool(2, 2);
  vgg_block(b, 3, {256, 256, 256});
  b.maxpool(4, 4);
  vgg_block(b, 4, {512, 512, 512});
  vgg_block(b, 5, {512, 512, 512});
  return b.build();
}

NetworkSpec build_attention_spec() {
  NetworkBuilder b("mask", 512);
  b.maxpool(2, 2);
  b.conv("conv1", 64, 3, 1).relu();
  b.conv("conv2", 128, 3, 1).relu();
  b.maxpool(2, 2);
  b.conv("conv3", 64, 3, 1).relu();
  b.conv("conv4", 128, 3, 1).relu();
  b.conv("conv5", 1, 1, 0);
  b.upsample(4);
  b.sigmoid();
  return b.build();
}

NetworkSpec build_decoder_spec() {
  NetworkBuilder b("decoder", 512);
  b.conv("conv5", 512, 3, 1).relu();
  b.upsample(4);
  b.conv("conv4", 256, 3, 1).relu();
  b.upsample(2);
  b.conv("conv3", 128, 3, 1).relu();
  b.upsample(2);
  b.conv("conv2", 64, 3, 1).relu();
  b.conv("out", 1, 1, 0);
  b.sigmoid();
  return b.build();
}

AttentionNetworks attention_networks(std::size_t width_divisor) {
  AttentionNetworks nets{build_encoder_spec(), build_attention_spec(), build_decoder_spec()};
  if (width_divisor != 1) {
    nets.encoder = scale_width(nets.encoder, width_divisor, true, false);
    nets.attention = scale_width(nets.attention, width_divisor, false, true);
    nets.decoder = scale_width(nets.decoder, width_divisor, false, true);
  }
  return nets;
}

AttentionOutput forward_attention(const Tensor& frame, const WeightStore& weights,
                                  std::size_t width_divisor, const AttentionHooks<float>& hooks) {
  if (frame.shape().c != 3)
    throw DimensionError("forward_attention: expected a 3-channel frame, got " +
                         frame.shape().str());
  Eager<float> ops(weights);
  return forward_attention(ops, attention_networks(width_divisor), frame, hooks);
}

void init_attention_weights(const AttentionNetworks& nets, std::mt19937_64& rng, WeightStore& out) {
  init_he_uniform(nets.encoder, attention_prefix, rng, out);
  init_he_uniform(nets.attention, attention_prefix, rng, out);
  init_he_uniform(nets.decoder, attention_prefix, rng, out);
}

WeightStore init_attention_weights(std::uint64_t seed, std::size_t width_divisor) {
  std::mt19937_64 rng(seed);
  WeightStore out;
  init_attention_weights(attention_networks(width_divisor), rng, out);
  return out;
}

} // namespace atsal
