#include <doctest.h>

#include "gradient_check.hpp"
#include "test_support.hpp"

#include <atsal/attention.hpp>
#include <atsal/weights.hpp>

#include <cmath>

using namespace atsal;
using testing::random_tensor;

TEST_CASE("full-scale attention stream shapes") {
  const WeightStore w = init_attention_weights(11);
  std::mt19937_64 rng(1);
  const Tensor frame = random_tensor(Shape{1, 3, 320, 640}, rng, 0, 1);
  const AttentionOutput out = forward_attention(frame, w);
  CHECK(out.encoded.shape() == Shape{1, 512, 20, 40});
  CHECK(out.mask.shape() == Shape{1, 1, 20, 40});
  CHECK(out.latent.shape() == Shape{1, 512, 20, 40});
  CHECK(out.saliency.shape() == Shape{1, 1, 320, 640});
  for (float v : out.saliency.data()) {
    REQUIRE(v > 0.0f);
    REQUIRE(v < 1.0f);
  }
  for (float v : out.mask.data()) {
    REQUIRE(v > 0.0f);
    REQUIRE(v < 1.0f);
  }
}

TEST_CASE("mask modulation of the latent") {
  const std::size_t div = 8;
  const WeightStore w = init_attention_weights(5, div);
  std::mt19937_64 rng(2);
  const Tensor frame = random_tensor(Shape{1, 3, 160, 320}, rng, 0, 1);
  const Shape grid{1, 1, 10, 20};

  AttentionHooks<float> zero{Tensor(grid, 0.0f)};
  const AttentionOutput off = forward_attention(frame, w, div, zero);
  CHECK(off.latent == off.encoded);

  AttentionHooks<float> one{Tensor(grid, 1.0f)};
  const AttentionOutput on = forward_attention(frame, w, div, one);
  for (std::size_t i = 0; i < on.latent.size(); ++i)
    REQUIRE(on.latent[i] == 2.0f * on.encoded[i]);

  // Encoder features are post-relu, so the latent grows with the mask.
  AttentionHooks<float> half{random_tensor(grid, rng, 0, 1)};
  AttentionHooks<float> more{*half.mask_override};
  for (float& v : more.mask_override->data())
    v += 0.25f;
  const AttentionOutput a = forward_attention(frame, w, div, half);
  const AttentionOutput b = forward_attention(frame, w, div, more);
  for (std::size_t i = 0; i < a.latent.size(); ++i)
    REQUIRE(b.latent[i] >= a.latent[i]);

  const AttentionOutput free = forward_attention(frame, w, div);
  CHECK(free.mask.shape() == grid);
  for (std::size_t i = 0; i < free.latent.size(); ++i) {
    const std::size_t cell = i % grid.size();
    REQUIRE(std::abs(free.latent[i] - (1.0f + free.mask[cell]) * free.encoded[i]) <=
            1e-6f * std::abs(free.latent[i]));
  }
}

TEST_CASE("reduced-width networks") {
  const AttentionNetworks nets = attention_networks(8);
  CHECK(nets.encoder.input_channels() == 3);
  CHECK(nets.encoder.output_channels() == 64);
  CHECK(nets.attention.output_channels() == 1);
  CHECK(nets.decoder.output_channels() == 1);

  const WeightStore w = init_attention_weights(3, 8);
  Eager<float> ops(w);
  const Tensor z(Shape{1, 64, 5, 10}, 0.1f);
  CHECK(run_network(ops, nets.decoder, attention_prefix, z).shape() == Shape{1, 1, 80, 160});
}

TEST_CASE("missing weights are reported by key") {
  WeightStore w = init_attention_weights(3, 8);
  const std::string key = attention_prefix + "encoder/conv1_1/weight";
  REQUIRE(w.count(key) == 1);
  w.erase(key);
  const Tensor frame(Shape{1, 3, 80, 160}, 0.5f);
  try {
    forward_attention(frame, w, 8);
    FAIL("expected MissingKeyError");
  } catch (const MissingKeyError& e) {
    CHECK(std::string(e.what()).find(key) != std::string::npos);
  }
}

TEST_CASE("attention gradients on a small sample of parameters") {
  const testing::GradientCheck r = testing::attention_gradient_check(20, 17);
  CHECK(r.sampled == 20);
  CHECK(r.pinned_offset == 0.0);
  CHECK(r.max_rel_error < 1e-4);
}
