#include <atsal/loss.hpp>

#include <cmath>
#include <string>

namespace atsal {
namespace {

template <typename T>
void require_same_length(std::span<const T> a, std::span<const T> b, const char* what) {
  if (a.size() != b.size())
    throw DimensionError(std::string(what) + ": length " + std::to_string(a.size()) +
                         " does not match " + std::to_string(b.size()));
}

template <typename T>
void require_nonnegative(std::span<const T> x, const char* what) {
  for (const T v : x)
    if (!(v >= T{}))
      throw DomainError(std::string(what) + ": negative or NaN value");
}

struct ZScore {
  double mean = 0.0;
  double stddev = 0.0;
  double fixation_mass = 0.0;
};

template <typename T>
ZScore zscore_stats(std::span<const T> y, std::span<const T> fixations) {
  require_same_length(y, fixations, "nss");
  ZScore s;
  for (const T f : fixations)
    s.fixation_mass += static_cast<double>(f);
  if (!(s.fixation_mass > 0.0))
    throw NoFixationsError("nss: fixation map has no fixations");
  const double n = static_cast<double>(y.size());
  for (const T v : y)
    s.mean += static_cast<double>(v);
  s.mean /= n;
  double var = 0.0;
  for (const T v : y) {
    const double d = static_cast<double>(v) - s.mean;
    var += d * d;
  }
  s.stddev = std::sqrt(var / n);
  if (!(s.stddev > 0.0))
    throw DegenerateMapError("nss: saliency map is constant (zero standard deviation)");
  return s;
}

} // namespace

template <typename T>
std::vector<T> sum_normalized(std::span<const T> x) {
  require_nonnegative(x, "sum_normalized");
  double total = 0.0;
  for (const T v : x)
    total += static_cast<double>(v);
  if (!(total > 0.0))
    throw DomainError("sum_normalized: total mass must be positive");
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    out[i] = static_cast<T>(static_cast<double>(x[i]) / total);
  return out;
}

template <typename T>
double kl_loss(std::span<const T> p, std::span<const T> q, double eps) {
  require_same_length(p, q, "kl_loss");
  if (!(eps > 0.0))
    throw ArgumentError("kl_loss: eps must be positive");
  require_nonnegative(p, "kl_loss prediction");
  require_nonnegative(q, "kl_loss target");
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double qi = static_cast<double>(q[i]);
    const double pi = static_cast<double>(p[i]);
    acc += qi * std::log(eps + qi / (eps + pi));
  }
  return acc;
}

template <typename T>
std::vector<double> kl_loss_gradient(std::span<const T> p, std::span<const T> q, double eps) {
  require_same_length(p, q, "kl_loss_gradient");
  if (!(eps > 0.0))
    throw ArgumentError("kl_loss: eps must be positive");
  std::vector<double> g(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double qi = static_cast<double>(q[i]);
    const double a = eps + static_cast<double>(p[i]);
    g[i] = -qi * qi / (a * (eps * a + qi));
  }
  return g;
}

template <typename T>
double nss_loss(std::span<const T> y, std::span<const T> fixations) {
  const ZScore s = zscore_stats(y, fixations);
  double acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i)
    acc += (static_cast<double>(y[i]) - s.mean) / s.stddev * static_cast<double>(fixations[i]);
  return -acc / s.fixation_mass;
}

template <typename T>
std::vector<double> nss_loss_gradient(std::span<const T> y, std::span<const T> fixations) {
  // dz_i/dy_j = (delta_ij - 1/n)/sigma - z_i z_j / (n sigma)
  const ZScore s = zscore_stats(y, fixations);
  const double n = static_cast<double>(y.size());
  double fz = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i)
    fz += static_cast<double>(fixations[i]) * (static_cast<double>(y[i]) - s.mean) / s.stddev;
  std::vector<double> g(y.size());
  const double scale = -1.0 / (s.fixation_mass * s.stddev);
  for (std::size_t j = 0; j < y.size(); ++j) {
    const double zj = (static_cast<double>(y[j]) - s.mean) / s.stddev;
    g[j] = scale * (static_cast<double>(fixations[j]) - s.fixation_mass / n - zj * fz / n);
  }
  return g;
}

double kl_loss(const Tensor& p, const Tensor& q, double eps) {
  if (p.shape() != q.shape())
    throw DimensionError("kl_loss: shape " + p.shape().str() + " vs " + q.shape().str());
  return kl_loss<float>(p.data(), q.data(), eps);
}

double nss_loss(const Tensor& saliency, const Tensor& fixations) {
  if (saliency.shape() != fixations.shape())
    throw DimensionError("nss_loss: shape " + saliency.shape().str() + " vs " +
                         fixations.shape().str());
  return nss_loss<float>(saliency.data(), fixations.data());
}

Tensor mask_target(const Tensor& target, std::size_t rows, std::size_t cols) {
  const Shape& s = target.shape();
  if (rows == 0 || cols == 0 || s.h % rows != 0 || s.w % cols != 0)
    throw ArgumentError("mask_target: " + std::to_string(s.h) + "x" + std::to_string(s.w) +
                        " is not an integer multiple of " + std::to_string(rows) + "x" +
                        std::to_string(cols));
  const std::size_t fy = s.h / rows;
  const std::size_t fx = s.w / cols;
  std::vector<double> acc(s.n * s.c * rows * cols, 0.0);
  for (std::size_t n = 0; n < s.n; ++n)
    for (std::size_t c = 0; c < s.c; ++c)
      for (std::size_t y = 0; y < s.h; ++y)
        for (std::size_t x = 0; x < s.w; ++x)
          acc[((n * s.c + c) * rows + y / fy) * cols + x / fx] += target(n, c, y, x);
  std::vector<float> out(acc.size());
  for (std::size_t i = 0; i < acc.size(); ++i)
    out[i] = static_cast<float>(acc[i] / static_cast<double>(fy * fx));
  out = sum_normalized<float>(out);
  return Tensor(Shape{s.n, s.c, rows, cols}, std::move(out));
}

LossTerms total_loss(const SupervisionPack& pack, const LossWeights& weights, double eps) {
  if (pack.mask.shape() != pack.mask_target.shape())
    throw DimensionError("total_loss: mask " + pack.mask.shape().str() + " vs mask target " +
                         pack.mask_target.shape().str());
  if (pack.saliency.shape() != pack.target.shape())
    throw DimensionError("total_loss: saliency " + pack.saliency.shape().str() + " vs target " +
                         pack.target.shape().str());
  LossTerms t;
  const auto p = sum_normalized<float>(pack.saliency.data());
  const auto q = sum_normalized<float>(pack.target.data());
  t.kl_saliency = kl_loss<float>(p, q, eps);
  t.nss = nss_loss(pack.saliency, pack.fixations);
  const auto m = sum_normalized<float>(pack.mask.data());
  const auto q2 = sum_normalized<float>(pack.mask_target.data());
  t.kl_mask = kl_loss<float>(m, q2, eps);
  t.total = weights.alpha1 * t.kl_saliency + weights.alpha2 * t.nss + weights.beta * t.kl_mask;
  return t;
}

template <typename T>
Var kl_loss(Tape<T>& tape, Var p, const BasicTensor<T>& q, double eps) {
  const BasicTensor<T>& pv = tape.value(p);
  if (pv.shape() != q.shape())
    throw DimensionError("kl_loss: shape " + pv.shape().str() + " vs " + q.shape().str());
  const double value = kl_loss<T>(pv.data(), q.data(), eps);
  const std::vector<double> g = kl_loss_gradient<T>(pv.data(), q.data(), eps);
  return tape.scalar_function(p, static_cast<T>(value),
                              BasicTensor<T>(pv.shape(), std::vector<T>(g.begin(), g.end())));
}

template <typename T>
Var nss_loss(Tape<T>& tape, Var saliency, const BasicTensor<T>& fixations) {
  const BasicTensor<T>& y = tape.value(saliency);
  if (y.shape() != fixations.shape())
    throw DimensionError("nss_loss: shape " + y.shape().str() + " vs " + fixations.shape().str());
  const double value = nss_loss<T>(y.data(), fixations.data());
  const std::vector<double> g = nss_loss_gradient<T>(y.data(), fixations.data());
  return tape.scalar_function(saliency, static_cast<T>(value),
                              BasicTensor<T>(y.shape(), std::vector<T>(g.begin(), g.end())));
}

template <typename T>
LossVars total_loss(Tape<T>& tape, Var saliency, Var mask, const BasicTensor<T>& fixations,
                    const BasicTensor<T>& target, const BasicTensor<T>& mask_target,
                    const LossWeights& weights, double eps) {
  const BasicTensor<T> q1(target.shape(), sum_normalized<T>(target.data()));
  const BasicTensor<T> q2(mask_target.shape(), sum_normalized<T>(mask_target.data()));
  LossVars v;
  v.kl_saliency = kl_loss(tape, tape.sum_normalize(saliency), q1, eps);
  v.nss = nss_loss(tape, saliency, fixations);
  v.kl_mask = kl_loss(tape, tape.sum_normalize(mask), q2, eps);
  const Var terms[3] = {v.kl_saliency, v.nss, v.kl_mask};
  const T w[3] = {static_cast<T>(weights.alpha1), static_cast<T>(weights.alpha2),
                  static_cast<T>(weights.beta)};
  v.total = tape.weighted_sum(terms, w);
  return v;
}

#define ATSAL_INSTANTIATE_LOSS(T)                                                                 \
  template std::vector<T> sum_normalized<T>(std::span<const T>);                                  \
  template double kl_loss<T>(std::span<const T>, std::span<const T>, double);                     \
  template std::vector<double> kl_loss_gradient<T>(std::span<const T>, std::span<const T>,        \
                                                   double);                                       \
  template double nss_loss<T>(std::span<const T>, std::span<const T>);                            \
  template std::vector<double> nss_loss_gradient<T>(std::span<const T>, std::span<const T>);      \
  template Var kl_loss<T>(Tape<T>&, Var, const BasicTensor<T>&, double);                          \
  template Var nss_loss<T>(Tape<T>&, Var, const BasicTensor<T>&);                                 \
  template LossVars total_loss<T>(Tape<T>&, Var, Var, const BasicTensor<T>&,                      \
                                  const BasicTensor<T>&, const BasicTensor<T>&,                   \
                                  const LossWeights&, double);

ATSAL_INSTANTIATE_LOSS(float)
ATSAL_INSTANTIATE_LOSS(double)

#undef ATSAL_INSTANTIATE_LOSS

} // namespace atsal
