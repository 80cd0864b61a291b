#pragma once

#include <atsal/adam.hpp>
#include <atsal/attention.hpp>
#include <atsal/loss.hpp>
#include <atsal/tensor.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace atsal {

inline constexpr std::size_t toy_height = 80;
inline constexpr std::size_t toy_width = 160;
inline constexpr std::size_t toy_width_divisor = 8;

struct TrainingSample {
  std::string name;
  Tensor frame;     // 1x3xHxW in [0, 1]
  Tensor fixations; // 1x1xHxW binary
  Tensor saliency;  // 1x1xHxW dense target
};

// Frames with a few bright blobs on a dim noisy background; observers fixate
// near the blob centers, and the targets are the blurred fixations.
std::vector<TrainingSample> make_synthetic_dataset(std::size_t count, std::uint64_t seed,
                                                   std::size_t height = toy_height,
                                                   std::size_t width = toy_width);

// Layout: <dir>/frames/<name>.ppm, <dir>/saliency/<name>.pgm,
// <dir>/fixation/<name>.pgm. Saliency and fixation files use the frame's
// stem with a .pgm (or .f32) extension.
std::vector<TrainingSample> load_training_set(const std::filesystem::path& dir);
void save_training_set(const std::filesystem::path& dir, const std::vector<TrainingSample>& samples);

struct TrainConfig {
  double lr = 1e-5;
  std::size_t steps = 200;
  std::size_t width_divisor = toy_width_divisor;
  std::uint64_t seed = 0;
  LossWeights weights;
  double eps = default_eps;
};

// Full-batch Adam on the attention stream. Per-sample tapes run in parallel
// and gradients are summed in sample order, so results are deterministic.
class ToyTrainer {
public:
  ToyTrainer(std::vector<TrainingSample> samples, TrainConfig config);
  ToyTrainer(std::vector<TrainingSample> samples, TrainConfig config, WeightStore initial);

  // One update; returns the mean loss at the weights before the update.
  double step();
  // Mean loss at the current weights.
  double evaluate() const;

  const WeightStore& weights() const noexcept { return weights_; }
  std::size_t steps_taken() const noexcept { return t_; }

private:
  struct Prepared {
    Tensor frame;
    Tensor fixations;
    Tensor saliency;
    Tensor mask_target;
  };

  std::vector<Prepared> samples_;
  TrainConfig config_;
  AttentionNetworks nets_;
  WeightStore weights_;
  Adam adam_;
  std::size_t t_ = 0;
};

struct TrainResult {
  WeightStore weights;
  // losses[i] is the mean loss after i updates; size steps + 1.
  std::vector<double> losses;
};

TrainResult train(std::vector<TrainingSample> samples, const TrainConfig& config,
                  const std::function<void(std::size_t, double)>& log = {});

} // namespace atsal
