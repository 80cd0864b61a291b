#pragma once

#include <atsal/tensor.hpp>

#include <cstddef>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace atsal {

inline constexpr double default_sigma_deg = 9.35;
inline constexpr std::size_t dataset_height = 1024;
inline constexpr std::size_t dataset_width = 2048;

struct FixationRecord {
  std::string video_id;
  std::size_t frame_index = 0;
  std::string observer_id;
  double lon_deg = 0.0; // [-180, 180)
  double lat_deg = 0.0; // [-90, 90]

  friend bool operator==(const FixationRecord&, const FixationRecord&) = default;
};

struct ParseIssue {
  std::size_t line = 0;
  std::string message;
};

struct ParsedFixations {
  std::vector<FixationRecord> records;
  // Lines that were rejected, with 1-based line numbers.
  std::vector<ParseIssue> issues;
};

// CSV with header video_id,frame_index,observer_id,lon_deg,lat_deg. A missing
// or different header raises FormatError; bad lines are skipped and reported.
ParsedFixations parse_fixations(std::istream& in);

using FrameKey = std::pair<std::string, std::size_t>;

// Records grouped by (video_id, frame_index), in sorted order.
std::map<FrameKey, std::vector<FixationRecord>>
group_by_frame(std::span<const FixationRecord> records);

struct FixMap {
  Tensor grid; // 1x1xHxW, values in {0, 1}
  std::size_t count = 0;
};

// Nearest ERP pixel per record; repeated hits set a pixel once.
FixMap rasterize_fixations(std::span<const FixationRecord> records,
                           std::size_t height = dataset_height, std::size_t width = dataset_width);

// Sum over fixated pixels of exp(-d^2 / (2 sigma^2)) with d the geodesic
// distance between pixel centers, truncated at 3 sigma and max-normalized.
Tensor blur_fixations(const Tensor& fixations, double sigma_deg = default_sigma_deg);
Tensor blur_fixations(const FixMap& fixations, double sigma_deg = default_sigma_deg);

// Longitudinal rotation as a circular column shift: content at longitude l
// moves to l + degrees.
Tensor rotate_longitude(const Tensor& erp, double degrees);
Tensor flip_horizontal(const Tensor& erp);
Tensor flip_vertical(const Tensor& erp);

struct AugmentTransform {
  std::string name;
  bool hflip = false;
  bool vflip = false;
  std::size_t rotation_steps = 0; // multiples of 45 degrees
};

// 8 rotations (including the identity), 8 horizontally flipped rotations and
// 7 vertically mirrored rotations: 23 transforms.
std::vector<AugmentTransform> augmentation_transforms();

Tensor apply_transform(const Tensor& erp, const AugmentTransform& t);

struct NamedImage {
  std::string name;
  Tensor image;
};

// Every transform of every input, named <stem>_<transform>.pgm.
std::vector<NamedImage> augment(std::span<const NamedImage> images);

} // namespace atsal
