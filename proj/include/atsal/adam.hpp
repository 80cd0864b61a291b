#pragma once

#include <atsal/tensor.hpp>

#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace atsal {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction. First and second moments are kept per parameter
// name and persist across step() calls.
class Adam {
public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  // t is the 1-based step index used for bias correction.
  void step(WeightStore& params, const WeightStore& grads, double lr, std::size_t t);

  const AdamConfig& config() const noexcept { return config_; }

private:
  struct Moments {
    std::vector<float> m;
    std::vector<float> v;
  };

  AdamConfig config_;
  std::map<std::string, Moments> moments_;
};

} // namespace atsal
