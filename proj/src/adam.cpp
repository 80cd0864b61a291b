#include <atsal/adam.hpp>

#include <cmath>

namespace atsal {

void Adam::step(WeightStore& params, const WeightStore& grads, double lr, std::size_t t) {
  if (t == 0)
    throw ArgumentError("adam: step index t must be >= 1");
  for (const auto& [key, value] : params) {
    auto it = grads.find(key);
    if (it == grads.end())
      throw ArgumentError("adam: no gradient for parameter '" + key + "'");
    if (it->second.shape() != value.shape())
      throw DimensionError("adam: gradient shape " + it->second.shape().str() +
                           " does not match parameter '" + key + "' " + value.shape().str());
  }

  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
  for (auto& [key, value] : params) {
    const Tensor& g = grads.at(key);
    Moments& mo = moments_[key];
    if (mo.m.size() != value.size()) {
      mo.m.assign(value.size(), 0.0f);
      mo.v.assign(value.size(), 0.0f);
    }
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double gi = g[i];
      const double m = b1 * mo.m[i] + (1.0 - b1) * gi;
      const double v = b2 * mo.v[i] + (1.0 - b2) * gi * gi;
      mo.m[i] = static_cast<float>(m);
      mo.v[i] = static_cast<float>(v);
      const double update = lr * (m / c1) / (std::sqrt(v / c2) + config_.eps);
      value[i] = static_cast<float>(value[i] - update);
    }
  }
}

} // namespace atsal
