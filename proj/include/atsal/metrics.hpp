#pragma once

#include <atsal/loss.hpp>
#include <atsal/tensor.hpp>

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace atsal {

// Pixels with F > 0.5 count as fixated.
double auc_judd(const Tensor& saliency, const Tensor& fixations);
double nss_metric(const Tensor& saliency, const Tensor& fixations);
double cc(const Tensor& saliency, const Tensor& ground_truth);
double sim(const Tensor& saliency, const Tensor& ground_truth);
double kld_metric(const Tensor& saliency, const Tensor& ground_truth, double eps = default_eps);

// Per-pixel weighted variants (e.g. cos-latitude solid-angle weights). The
// weight span covers every element of the maps.
double nss_metric(const Tensor& saliency, const Tensor& fixations, std::span<const double> weights);
double cc(const Tensor& saliency, const Tensor& ground_truth, std::span<const double> weights);
double sim(const Tensor& saliency, const Tensor& ground_truth, std::span<const double> weights);
double kld_metric(const Tensor& saliency, const Tensor& ground_truth,
                  std::span<const double> weights, double eps = default_eps);

enum class Metric : std::size_t { auc_j = 0, nss = 1, cc = 2, sim = 3, kld = 4 };
inline constexpr std::size_t metric_count = 5;
inline constexpr std::array<const char*, metric_count> metric_names{"auc_j", "nss", "cc", "sim",
                                                                    "kld"};

struct EvalOptions {
  bool spherical_weights = false;
  double eps = default_eps;
};

struct FrameMetrics {
  std::string frame;
  bool readable = true;
  // Empty when the metric was undefined for this frame.
  std::array<std::optional<double>, metric_count> values;
};

struct MetricReport {
  std::string video_id;
  std::vector<FrameMetrics> frames;
  std::array<std::optional<double>, metric_count> mean;
  std::array<std::size_t, metric_count> valid{};
  std::array<std::size_t, metric_count> skipped{};
  std::size_t unreadable = 0;

  // Frames that were readable and produced at least one metric.
  std::size_t valid_frames() const;
};

// Evaluates every filename present in all three directories. The prediction
// is bilinearly resized to the ground-truth grid when the sizes differ.
// Throws InputError when the directories share no filenames.
MetricReport evaluate_run(const std::filesystem::path& pred_dir,
                          const std::filesystem::path& gt_sal_dir,
                          const std::filesystem::path& gt_fix_dir, const EvalOptions& options = {});

// Header frame,auc_j,nss,cc,sim,kld; one row per frame; a final MEAN row.
void write_csv(std::ostream& out, const MetricReport& report);

} // namespace atsal
