#pragma once

#include <atsal/attention.hpp>
#include <atsal/loss.hpp>
#include <atsal/tape.hpp>
#include <atsal/training.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace testing {

struct GradientCheck {
  std::size_t sampled = 0;
  double max_rel_error = 0.0;
  // Loss difference between the free and the branch-pinned evaluation at the
  // base point; zero when pinning reproduces the network exactly.
  double pinned_offset = 0.0;
  std::string worst_key;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

// Fourth-order central differences of the full attention-stream objective on
// the reduced network, in double precision, at uniformly sampled parameter
// entries. Relu masks and max-pool winners are pinned to the ones taken at the
// base point, so the stencil sees the smooth piece that the gradient belongs to.
inline GradientCheck attention_gradient_check(std::size_t samples, std::uint64_t seed,
                                              std::size_t rows = atsal::toy_height,
                                              std::size_t cols = atsal::toy_width,
                                              std::size_t divisor = atsal::toy_width_divisor,
                                              double h = 1e-3) {
  using namespace atsal;
  using DTensor = BasicTensor<double>;
  const AttentionNetworks nets = attention_networks(divisor);
  ParamMap<double> params = cast_params<double>(init_attention_weights(seed, divisor));
  const TrainingSample sample = make_synthetic_dataset(1, seed, rows, cols).front();
  const DTensor frame = sample.frame.cast<double>();
  const DTensor fix = sample.fixations.cast<double>();
  const DTensor q1 = sample.saliency.cast<double>();
  const DTensor q2 = mask_target(sample.saliency, rows / 16, cols / 16).cast<double>();

  BranchTrace trace;
  ParamMap<double> grads;
  auto evaluate = [&](bool record, bool pin) {
    Tape<double> tape(params);
    if (record)
      tape.record_branches(&trace);
    if (pin)
      tape.pin_branches(&trace);
    const auto out = forward_attention(tape, nets, tape.constant(frame));
    const Var total = total_loss(tape, out.saliency, out.mask, fix, q1, q2).total;
    if (record) {
      tape.backward(total);
      grads = tape.param_grads();
    }
    return tape.value(total)[0];
  };

  GradientCheck result;
  const double base = evaluate(true, false);
  result.pinned_offset = std::abs(evaluate(false, true) - base);

  std::size_t entries = 0;
  for (const auto& [key, value] : params)
    entries += value.size();
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> seen;

  while (result.sampled < samples && seen.size() < entries) {
    const std::size_t pick = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(entries));
    if (std::find(seen.begin(), seen.end(), pick) != seen.end())
      continue;
    seen.push_back(pick);
    std::size_t k = pick;
    auto it = params.begin();
    while (k >= it->second.size()) {
      k -= it->second.size();
      ++it;
    }
    double& w = it->second[k];
    const double orig = w;
    double f[4];
    const double offsets[4] = {-2 * h, -h, h, 2 * h};
    for (int i = 0; i < 4; ++i) {
      w = orig + offsets[i];
      f[i] = evaluate(false, true);
    }
    w = orig;
    const double numeric = (f[0] - 8 * f[1] + 8 * f[2] - f[3]) / (12 * h);
    const double analytic = grads.at(it->first)[k];
    const double rel =
        std::abs(numeric - analytic) / std::max({std::abs(numeric), std::abs(analytic), 1e-8});
    ++result.sampled;
    if (rel > result.max_rel_error) {
      result.max_rel_error = rel;
      result.worst_key = it->first;
      result.worst_index = k;
      result.worst_analytic = analytic;
      result.worst_numeric = numeric;
    }
  }
  return result;
}

} // namespace testing
