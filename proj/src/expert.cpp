#include <atsal/expert.hpp>
#include <atsal/ops.hpp>
#include <atsal/tape.hpp>

#include <string>

namespace atsal {

template <typename T>
BasicTensor<T> ema_step(const BasicTensor<T>& s, EmaState<T>& state) {
  if (!(state.alpha > 0.0 && state.alpha <= 1.0))
    throw ArgumentError("ema_step: alpha must lie in (0, 1], got " + std::to_string(state.alpha));
  if (!state.initialized) {
    state.e = s;
    state.initialized = true;
    return s;
  }
  if (s.shape() != state.e.shape())
    throw DimensionError("ema_step: state shape " + state.e.shape().str() + " but input " +
                         s.shape().str());
  const T a = static_cast<T>(state.alpha);
  const T b = static_cast<T>(1.0 - state.alpha);
  for (std::size_t i = 0; i < s.size(); ++i)
    state.e[i] = a * s[i] + b * state.e[i];
  return state.e;
}

template BasicTensor<float> ema_step<float>(const BasicTensor<float>&, EmaState<float>&);
template BasicTensor<double> ema_step<double>(const BasicTensor<double>&, EmaState<double>&);

NetworkSpec build_expert_spec() {
  NetworkBuilder b("expert", 3);
  b.conv("down1", 32, 3, 1).relu().maxpool(2, 2);
  b.conv("down2", 64, 3, 1).relu().maxpool(2, 2);
  b.conv("down3", 128, 3, 1).relu().maxpool(2, 2);
  b.conv("bottleneck", 128, 3, 1).temporal().relu();
  b.upsample(2).conv("up3", 64, 3, 1).relu();
  b.upsample(2).conv("up2", 32, 3, 1).relu();
  b.upsample(2).conv("up1", 16, 3, 1).relu();
  b.conv("out", 1, 1, 0).sigmoid();
  return b.build();
}

NetworkSpec expert_spec(std::size_t width_divisor) {
  NetworkSpec spec = build_expert_spec();
  if (width_divisor != 1)
    spec = scale_width(spec, width_divisor, true, true);
  return spec;
}

RoutedFaces route_faces(std::span<const Tensor> faces) {
  if (faces.size() != cube_face_count)
    throw ArgumentError("route_faces: expected 6 faces, got " + std::to_string(faces.size()));
  for (std::size_t i = 0; i < faces.size(); ++i)
    if (faces[i].shape().n != 1)
      throw DimensionError("route_faces: face " + std::to_string(i) +
                           " must hold a single image, got " + faces[i].shape().str());
  const Tensor poles[] = {faces[pole_faces[0]], faces[pole_faces[1]]};
  std::vector<Tensor> equator;
  for (const std::size_t i : equator_faces)
    equator.push_back(faces[i]);
  return {stack_batch<float>(poles), stack_batch<float>(equator)};
}

std::array<Tensor, cube_face_count> merge_faces(const RoutedFaces& routed) {
  if (routed.poles.shape().n != pole_faces.size() ||
      routed.equator.shape().n != equator_faces.size())
    throw DimensionError("merge_faces: expected batches of 2 and 4, got " +
                         routed.poles.shape().str() + " and " + routed.equator.shape().str());
  std::array<Tensor, cube_face_count> out;
  for (std::size_t i = 0; i < pole_faces.size(); ++i)
    out[pole_faces[i]] = batch_item(routed.poles, i);
  for (std::size_t i = 0; i < equator_faces.size(); ++i)
    out[equator_faces[i]] = batch_item(routed.equator, i);
  return out;
}

ExpertStream::ExpertStream(const WeightStore& weights, std::size_t width_divisor, double alpha)
    : weights_(&weights), spec_(expert_spec(width_divisor)), alpha_(alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw ArgumentError("ExpertStream: alpha must lie in (0, 1], got " + std::to_string(alpha));
  reset();
}

void ExpertStream::reset() {
  poles_state_ = EmaState<float>{Tensor{}, alpha_, false};
  equator_state_ = EmaState<float>{Tensor{}, alpha_, false};
}

Tensor ExpertStream::run_expert(const std::string& prefix, const Tensor& batch,
                                EmaState<float>& state) const {
  Eager<float> ops(*weights_);
  RunHooks<Tensor> hooks;
  hooks.temporal = [&state](Tensor s) { return ema_step(s, state); };
  return run_network(ops, spec_, prefix, batch, hooks);
}

CubeFaces ExpertStream::step(const CubeFaces& faces) {
  faces.validate();
  const RoutedFaces routed = route_faces(faces.faces);
  RoutedFaces out;
  out.poles = run_expert(poles_prefix, routed.poles, poles_state_);
  out.equator = run_expert(equator_prefix, routed.equator, equator_state_);
  CubeFaces result;
  result.faces = merge_faces(out);
  return result;
}

std::vector<CubeFaces> forward_experts(std::span<const CubeFaces> video, const WeightStore& weights,
                                       std::size_t width_divisor, double alpha) {
  ExpertStream stream(weights, width_divisor, alpha);
  std::vector<CubeFaces> out;
  out.reserve(video.size());
  for (const CubeFaces& frame : video) {
    if (!out.empty() && frame.face_size() != video.front().face_size())
      throw DimensionError("forward_experts: face size changed mid-video");
    out.push_back(stream.step(frame));
  }
  return out;
}

Tensor fuse(const Tensor& y1, const Tensor& y2) {
  if (y1.shape() != y2.shape())
    throw DimensionError("fuse: shape " + y1.shape().str() + " vs " + y2.shape().str());
  Tensor out(y1.shape());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = y1[i] * y2[i];
  return out;
}

WeightStore init_expert_weights(std::uint64_t seed, std::size_t width_divisor) {
  std::mt19937_64 rng(seed);
  const NetworkSpec spec = expert_spec(width_divisor);
  WeightStore out;
  init_he_uniform(spec, poles_prefix, rng, out);
  init_he_uniform(spec, equator_prefix, rng, out);
  return out;
}

AtsalPipeline::AtsalPipeline(const WeightStore& weights, Options options)
    : weights_(&weights), options_(options),
      experts_(weights, options.width_divisor, options.alpha) {}

void AtsalPipeline::reset() { experts_.reset(); }

PipelineOutput AtsalPipeline::step(const Tensor& frame) {
  const Shape s = frame.shape();
  if (s.n != 1 || s.c != 3)
    throw DimensionError("AtsalPipeline: expected a 1x3xHxW frame, got " + s.str());
  PipelineOutput out;
  out.attention = forward_attention(frame, *weights_, options_.width_divisor).saliency;
  const CubeFaces faces = erp_to_cmp(frame, options_.face_size);
  out.experts = cmp_to_erp(experts_.step(faces), s.h, s.w);
  out.fused = fuse(out.attention, out.experts);
  return out;
}

std::vector<std::string> pipeline_prefixes() {
  return {attention_prefix, poles_prefix, equator_prefix};
}

} // namespace atsal
