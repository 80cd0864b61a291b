#pragma once

#include <atsal/attention.hpp>
#include <atsal/network.hpp>
#include <atsal/sphere.hpp>
#include <atsal/tensor.hpp>

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace atsal {

inline const std::string poles_prefix = "poles/";
inline const std::string equator_prefix = "equator/";
inline constexpr double default_ema_alpha = 0.1;
inline constexpr std::size_t default_face_size = 160;

template <typename T>
struct EmaState {
  BasicTensor<T> e;
  double alpha = default_ema_alpha;
  bool initialized = false;
};

// E_t = alpha * S_t + (1 - alpha) * E_{t-1}, with E_0 = S_0.
template <typename T>
BasicTensor<T> ema_step(const BasicTensor<T>& s, EmaState<T>& state);

// conv-relu-pool x3 down to 1/8, an EMA-wrapped bottleneck conv, and a
// mirrored upsampling decoder with a sigmoid head.
NetworkSpec build_expert_spec();

inline constexpr std::array<std::size_t, 2> pole_faces{4, 5};
inline constexpr std::array<std::size_t, 4> equator_faces{0, 1, 2, 3};

struct RoutedFaces {
  Tensor poles;   // faces 4, 5 stacked along the batch axis
  Tensor equator; // faces 0..3 stacked along the batch axis
};

// faces must hold exactly six single-image tensors.
RoutedFaces route_faces(std::span<const Tensor> faces);
std::array<Tensor, cube_face_count> merge_faces(const RoutedFaces& routed);

// Runs both experts over a frame sequence, keeping one EMA state per expert
// batch (and so per face). Call reset() at the start of each video.
class ExpertStream {
public:
  ExpertStream(const WeightStore& weights, std::size_t width_divisor = 1,
               double alpha = default_ema_alpha);

  CubeFaces step(const CubeFaces& faces);
  void reset();

  const NetworkSpec& spec() const noexcept { return spec_; }

private:
  Tensor run_expert(const std::string& prefix, const Tensor& batch, EmaState<float>& state) const;

  const WeightStore* weights_;
  NetworkSpec spec_;
  double alpha_;
  EmaState<float> poles_state_;
  EmaState<float> equator_state_;
};

std::vector<CubeFaces> forward_experts(std::span<const CubeFaces> video, const WeightStore& weights,
                                       std::size_t width_divisor = 1,
                                       double alpha = default_ema_alpha);

// Y = Y1 * Y2 elementwise.
Tensor fuse(const Tensor& y1, const Tensor& y2);

NetworkSpec expert_spec(std::size_t width_divisor = 1);

// He-uniform weights for both experts.
WeightStore init_expert_weights(std::uint64_t seed, std::size_t width_divisor = 1);

struct PipelineOutput {
  Tensor attention; // Y1
  Tensor experts;   // Y2, expert faces projected back to ERP
  Tensor fused;     // Y1 * Y2
};

// Full two-stream pipeline over consecutive frames of one video.
class AtsalPipeline {
public:
  struct Options {
    std::size_t width_divisor = 1;
    std::size_t face_size = default_face_size;
    double alpha = default_ema_alpha;
  };

  AtsalPipeline(const WeightStore& weights, Options options);

  PipelineOutput step(const Tensor& frame);
  void reset();

private:
  const WeightStore* weights_;
  Options options_;
  ExpertStream experts_;
};

// Weight-key prefixes the full pipeline needs.
std::vector<std::string> pipeline_prefixes();

} // namespace atsal
