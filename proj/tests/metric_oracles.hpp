#pragma once

#include <atsal/tensor.hpp>

#include <cmath>
#include <functional>
#include <set>
#include <utility>
#include <vector>

// Brute-force references for the saliency metrics. An optional weight per
// pixel turns every average into a weighted one.
namespace testing {

using atsal::Tensor;

// Threshold sweep over every distinct fixation saliency value, counting with
// plain loops.
inline double auc_oracle(const Tensor& s, const Tensor& f) {
  std::set<float, std::greater<>> thresholds;
  double nf = 0, nn = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (f[i] > 0.5f) {
      thresholds.insert(s[i]);
      nf += 1;
    } else {
      nn += 1;
    }
  }
  std::vector<std::pair<double, double>> roc{{0.0, 0.0}};
  for (float t : thresholds) {
    double tp = 0, fp = 0;
    for (std::size_t i = 0; i < s.size(); ++i)
      if (s[i] >= t)
        (f[i] > 0.5f ? tp : fp) += 1;
    roc.push_back({fp / nn, tp / nf});
  }
  roc.push_back({1.0, 1.0});
  double area = 0;
  for (std::size_t k = 1; k < roc.size(); ++k)
    area += (roc[k].first - roc[k - 1].first) * (roc[k].second + roc[k - 1].second) / 2;
  return area;
}

inline double weight(const std::vector<double>* w, std::size_t i) { return w ? (*w)[i] : 1.0; }

inline double nss_oracle(const Tensor& s, const Tensor& f, const std::vector<double>* w = nullptr) {
  double sw = 0, mu = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    sw += weight(w, i);
    mu += weight(w, i) * s[i];
  }
  mu /= sw;
  double var = 0;
  for (std::size_t i = 0; i < s.size(); ++i)
    var += weight(w, i) * (s[i] - mu) * (s[i] - mu);
  const double sd = std::sqrt(var / sw);
  double acc = 0, n = 0;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (f[i] > 0.5f) {
      acc += weight(w, i) * (s[i] - mu) / sd;
      n += weight(w, i);
    }
  return acc / n;
}

inline double cc_oracle(const Tensor& a, const Tensor& b, const std::vector<double>* w = nullptr) {
  double sw = 0, ea = 0, eb = 0, eab = 0, eaa = 0, ebb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double wi = weight(w, i);
    sw += wi;
    ea += wi * a[i];
    eb += wi * b[i];
    eab += wi * double(a[i]) * b[i];
    eaa += wi * double(a[i]) * a[i];
    ebb += wi * double(b[i]) * b[i];
  }
  ea /= sw;
  eb /= sw;
  const double cov = eab / sw - ea * eb;
  return cov / std::sqrt((eaa / sw - ea * ea) * (ebb / sw - eb * eb));
}

inline std::vector<double> distribution(const Tensor& x, const std::vector<double>* w) {
  std::vector<double> out(x.size());
  double t = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    t += out[i] = weight(w, i) * x[i];
  for (double& v : out)
    v /= t;
  return out;
}

inline double sim_oracle(const Tensor& a, const Tensor& b, const std::vector<double>* w = nullptr) {
  const auto p = distribution(a, w), q = distribution(b, w);
  double s = 0;
  for (std::size_t i = 0; i < p.size(); ++i)
    s += std::min(p[i], q[i]);
  return s;
}

inline double kld_oracle(const Tensor& a, const Tensor& b, const std::vector<double>* w = nullptr) {
  const double eps = 1e-7;
  const auto p = distribution(a, w), q = distribution(b, w);
  double s = 0;
  for (std::size_t i = 0; i < p.size(); ++i)
    s += q[i] * std::log(eps + q[i] / (eps + p[i]));
  return s;
}

} // namespace testing
