#include <atsal/image_io.hpp>
#include <atsal/metrics.hpp>
#include <atsal/ops.hpp>
#include <atsal/parallel.hpp>
#include <atsal/sphere.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <set>

namespace atsal {
namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape())
    throw DimensionError(std::string(what) + ": shape " + a.shape().str() + " vs " +
                         b.shape().str());
}

void require_weights(const Tensor& a, std::span<const double> w, const char* what) {
  if (w.size() != a.size())
    throw DimensionError(std::string(what) + ": " + std::to_string(w.size()) +
                         " weights for " + std::to_string(a.size()) + " pixels");
  for (const double v : w)
    if (!(v >= 0.0))
      throw DomainError(std::string(what) + ": weights must be nonnegative");
}

// Normalizes w * x to unit sum; w empty means uniform.
std::vector<double> weighted_distribution(const Tensor& x, std::span<const double> w,
                                          const char* what) {
  std::vector<double> out(x.size());
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = static_cast<double>(x[i]);
    if (!(v >= 0.0))
      throw DomainError(std::string(what) + ": negative or NaN value");
    out[i] = w.empty() ? v : w[i] * v;
    total += out[i];
  }
  if (!(total > 0.0))
    throw ArgumentError(std::string(what) + ": map has zero total mass");
  for (double& v : out)
    v /= total;
  return out;
}

double cc_impl(const Tensor& a, const Tensor& b, std::span<const double> w) {
  require_same_shape(a, b, "cc");
  double sw = 0.0, ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double wi = w.empty() ? 1.0 : w[i];
    sw += wi;
    ma += wi * a[i];
    mb += wi * b[i];
  }
  ma /= sw;
  mb /= sw;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double wi = w.empty() ? 1.0 : w[i];
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += wi * da * db;
    saa += wi * da * da;
    sbb += wi * db * db;
  }
  if (!(saa > 0.0) || !(sbb > 0.0))
    throw DegenerateMapError("cc: map has zero variance");
  return sab / std::sqrt(saa * sbb);
}

double sim_impl(const Tensor& a, const Tensor& b, std::span<const double> w) {
  require_same_shape(a, b, "sim");
  const auto p = weighted_distribution(a, w, "sim");
  const auto q = weighted_distribution(b, w, "sim");
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    acc += std::min(p[i], q[i]);
  return acc;
}

double kld_impl(const Tensor& sal, const Tensor& gt, std::span<const double> w, double eps) {
  require_same_shape(sal, gt, "kld");
  const auto p = weighted_distribution(sal, w, "kld");
  const auto q = weighted_distribution(gt, w, "kld");
  return kl_loss<double>(p, q, eps);
}

double weighted_nss(const Tensor& y, const Tensor& f, std::span<const double> w) {
  double sw = 0.0, mean = 0.0, fix_w = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    sw += w[i];
    mean += w[i] * y[i];
    fix_w += w[i] * f[i];
  }
  if (!(fix_w > 0.0))
    throw NoFixationsError("nss: fixation map has no (weighted) fixations");
  mean /= sw;
  double var = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i)
    var += w[i] * (y[i] - mean) * (y[i] - mean);
  const double sd = std::sqrt(var / sw);
  if (!(sd > 0.0))
    throw DegenerateMapError("nss: saliency map is constant (zero standard deviation)");
  double acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i)
    acc += w[i] * f[i] * (y[i] - mean) / sd;
  return acc / fix_w;
}

std::string format_value(const std::optional<double>& v) {
  if (!v)
    return "NA";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", *v);
  return buf;
}

std::set<std::string> list_files(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir))
    throw InputError("not a directory: '" + dir.string() + "'");
  std::set<std::string> names;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file())
      names.insert(entry.path().filename().string());
  return names;
}

} // namespace

double auc_judd(const Tensor& saliency, const Tensor& fixations) {
  require_same_shape(saliency, fixations, "auc_judd");
  std::vector<float> fix_values;
  std::vector<float> other_values;
  for (std::size_t i = 0; i < saliency.size(); ++i)
    (fixations[i] > 0.5f ? fix_values : other_values).push_back(saliency[i]);
  if (fix_values.empty())
    throw ArgumentError("auc_judd: fixation map has no fixations");
  if (other_values.empty())
    throw ArgumentError("auc_judd: every pixel is fixated");
  std::sort(fix_values.begin(), fix_values.end(), std::greater<>());
  std::sort(other_values.begin(), other_values.end());
  const double nf = static_cast<double>(fix_values.size());
  const double nn = static_cast<double>(other_values.size());
  double area = 0.0, tp_prev = 0.0, fp_prev = 0.0;
  for (std::size_t i = 0; i < fix_values.size();) {
    const float t = fix_values[i];
    while (i < fix_values.size() && fix_values[i] == t)
      ++i;
    const double tp = static_cast<double>(i) / nf;
    const auto above = other_values.end() - std::lower_bound(other_values.begin(), other_values.end(), t);
    const double fp = static_cast<double>(above) / nn;
    area += (fp - fp_prev) * (tp + tp_prev) / 2.0;
    tp_prev = tp;
    fp_prev = fp;
  }
  area += (1.0 - fp_prev) * (1.0 + tp_prev) / 2.0;
  return area;
}

double nss_metric(const Tensor& saliency, const Tensor& fixations) {
  return -nss_loss(saliency, fixations);
}

double cc(const Tensor& saliency, const Tensor& ground_truth) {
  return cc_impl(saliency, ground_truth, {});
}

double sim(const Tensor& saliency, const Tensor& ground_truth) {
  return sim_impl(saliency, ground_truth, {});
}

double kld_metric(const Tensor& saliency, const Tensor& ground_truth, double eps) {
  return kld_impl(saliency, ground_truth, {}, eps);
}

double nss_metric(const Tensor& saliency, const Tensor& fixations, std::span<const double> weights) {
  require_same_shape(saliency, fixations, "nss");
  require_weights(saliency, weights, "nss");
  return weighted_nss(saliency, fixations, weights);
}

double cc(const Tensor& saliency, const Tensor& ground_truth, std::span<const double> weights) {
  require_weights(saliency, weights, "cc");
  return cc_impl(saliency, ground_truth, weights);
}

double sim(const Tensor& saliency, const Tensor& ground_truth, std::span<const double> weights) {
  require_weights(saliency, weights, "sim");
  return sim_impl(saliency, ground_truth, weights);
}

double kld_metric(const Tensor& saliency, const Tensor& ground_truth,
                  std::span<const double> weights, double eps) {
  require_weights(saliency, weights, "kld");
  return kld_impl(saliency, ground_truth, weights, eps);
}

std::size_t MetricReport::valid_frames() const {
  std::size_t n = 0;
  for (const FrameMetrics& f : frames)
    if (f.readable && std::any_of(f.values.begin(), f.values.end(),
                                  [](const auto& v) { return v.has_value(); }))
      ++n;
  return n;
}

MetricReport evaluate_run(const std::filesystem::path& pred_dir,
                          const std::filesystem::path& gt_sal_dir,
                          const std::filesystem::path& gt_fix_dir, const EvalOptions& options) {
  const auto preds = list_files(pred_dir);
  const auto sals = list_files(gt_sal_dir);
  const auto fixes = list_files(gt_fix_dir);
  std::vector<std::string> names;
  for (const std::string& name : preds)
    if (sals.count(name) && fixes.count(name))
      names.push_back(name);
  if (names.empty())
    throw InputError("evaluate_run: no frame filenames shared by '" + pred_dir.string() + "', '" +
                     gt_sal_dir.string() + "' and '" + gt_fix_dir.string() + "'");

  MetricReport report;
  report.video_id = pred_dir.filename().string();
  report.frames.resize(names.size());
  parallel_for(names.size(), [&](std::size_t k) {
    FrameMetrics& fm = report.frames[k];
    fm.frame = names[k];
    Tensor pred, gt, fix;
    try {
      pred = load_salmap(pred_dir / names[k]);
      gt = load_salmap(gt_sal_dir / names[k]);
      fix = load_salmap(gt_fix_dir / names[k]);
      if (gt.shape() != fix.shape())
        throw DimensionError("ground-truth saliency and fixation grids differ");
    } catch (const Error&) {
      fm.readable = false;
      return;
    }
    if (pred.shape() != gt.shape())
      pred = resize_bilinear<float>(pred, gt.shape().h, gt.shape().w);
    BasicTensor<double> weights;
    const bool weighted = options.spherical_weights;
    if (weighted)
      weights = solid_angle_weights(gt.shape().h, gt.shape().w);
    auto attempt = [&](Metric m, auto&& fn) {
      try {
        fm.values[static_cast<std::size_t>(m)] = fn();
      } catch (const Error&) {
      }
    };
    attempt(Metric::auc_j, [&] { return auc_judd(pred, fix); });
    attempt(Metric::nss, [&] {
      return weighted ? nss_metric(pred, fix, weights.data()) : nss_metric(pred, fix);
    });
    attempt(Metric::cc, [&] { return weighted ? cc(pred, gt, weights.data()) : cc(pred, gt); });
    attempt(Metric::sim, [&] { return weighted ? sim(pred, gt, weights.data()) : sim(pred, gt); });
    attempt(Metric::kld, [&] {
      return weighted ? kld_metric(pred, gt, weights.data(), options.eps)
                      : kld_metric(pred, gt, options.eps);
    });
  });

  std::array<double, metric_count> sums{};
  for (const FrameMetrics& fm : report.frames) {
    if (!fm.readable) {
      ++report.unreadable;
      continue;
    }
    for (std::size_t m = 0; m < metric_count; ++m) {
      if (fm.values[m]) {
        sums[m] += *fm.values[m];
        ++report.valid[m];
      } else {
        ++report.skipped[m];
      }
    }
  }
  for (std::size_t m = 0; m < metric_count; ++m)
    if (report.valid[m] > 0)
      report.mean[m] = sums[m] / static_cast<double>(report.valid[m]);
  return report;
}

void write_csv(std::ostream& out, const MetricReport& report) {
  out << "frame";
  for (const char* name : metric_names)
    out << ',' << name;
  out << '\n';
  for (const FrameMetrics& fm : report.frames) {
    if (!fm.readable)
      continue;
    out << fm.frame;
    for (const auto& v : fm.values)
      out << ',' << format_value(v);
    out << '\n';
  }
  out << "MEAN";
  for (const auto& v : report.mean)
    out << ',' << format_value(v);
  out << '\n';
}

} // namespace atsal
