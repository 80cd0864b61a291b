#include <atsal/dataset.hpp>
#include <atsal/sphere.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <istream>
#include <sstream>

namespace atsal {
namespace {

constexpr const char* fixation_header = "video_id,frame_index,observer_id,lon_deg,lat_deg";

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ','))
    fields.push_back(trim(field));
  if (!line.empty() && line.back() == ',')
    fields.emplace_back();
  return fields;
}

double parse_double(const std::string& s, const char* field) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
    throw FormatError(std::string(field) + " '" + s + "' is not a number");
  return v;
}

std::size_t parse_index(const std::string& s) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw FormatError("frame_index '" + s + "' is not a nonnegative integer");
  return v;
}

double deg2rad(double d) { return d * pi / 180.0; }

} // namespace

ParsedFixations parse_fixations(std::istream& in) {
  ParsedFixations out;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (trim(line).empty())
      continue;
    if (!have_header) {
      if (trim(line) != fixation_header)
        throw FormatError("fixation CSV: line " + std::to_string(line_no) + ": expected header '" +
                          fixation_header + "'");
      have_header = true;
      continue;
    }
    try {
      const auto fields = split_csv(line);
      if (fields.size() != 5)
        throw FormatError("expected 5 fields, got " + std::to_string(fields.size()));
      FixationRecord r;
      r.video_id = fields[0];
      r.frame_index = parse_index(fields[1]);
      r.observer_id = fields[2];
      r.lon_deg = parse_double(fields[3], "lon_deg");
      r.lat_deg = parse_double(fields[4], "lat_deg");
      if (r.video_id.empty())
        throw FormatError("empty video_id");
      if (r.lon_deg < -180.0 || r.lon_deg >= 180.0)
        throw DomainError("lon_deg " + fields[3] + " outside [-180, 180)");
      if (r.lat_deg < -90.0 || r.lat_deg > 90.0)
        throw DomainError("lat_deg " + fields[4] + " outside [-90, 90]");
      out.records.push_back(std::move(r));
    } catch (const Error& e) {
      out.issues.push_back({line_no, e.what()});
    }
  }
  if (!have_header)
    throw FormatError(std::string("fixation CSV: missing header '") + fixation_header + "'");
  return out;
}

std::map<FrameKey, std::vector<FixationRecord>>
group_by_frame(std::span<const FixationRecord> records) {
  std::map<FrameKey, std::vector<FixationRecord>> out;
  for (const FixationRecord& r : records)
    out[{r.video_id, r.frame_index}].push_back(r);
  return out;
}

FixMap rasterize_fixations(std::span<const FixationRecord> records, std::size_t height,
                           std::size_t width) {
  if (height == 0 || width == 0)
    throw ArgumentError("rasterize_fixations: zero grid extent");
  FixMap out{Tensor(Shape{1, 1, height, width}), 0};
  for (const FixationRecord& r : records) {
    const double u = (deg2rad(r.lon_deg) + pi) / (2.0 * pi);
    const double v = (pi / 2 - deg2rad(r.lat_deg)) / pi;
    const auto col = std::min(static_cast<std::size_t>(std::max(0.0, std::floor(u * static_cast<double>(width)))), width - 1);
    const auto row = std::min(static_cast<std::size_t>(std::max(0.0, std::floor(v * static_cast<double>(height)))), height - 1);
    float& px = out.grid(0, 0, row, col);
    if (px == 0.0f) {
      px = 1.0f;
      ++out.count;
    }
  }
  return out;
}

Tensor blur_fixations(const Tensor& fixations, double sigma_deg) {
  const Shape s = fixations.shape();
  if (s.n != 1 || s.c != 1)
    throw DimensionError("blur_fixations: expected a 1x1xHxW grid, got " + s.str());
  if (!(sigma_deg > 0.0))
    throw ArgumentError("blur_fixations: sigma must be positive");
  const std::size_t h = s.h;
  const std::size_t w = s.w;
  const double sigma = deg2rad(sigma_deg);
  const double cutoff = 3.0 * sigma;
  const double cos_cutoff = std::cos(cutoff);

  std::vector<double> lat(h), lon(w);
  for (std::size_t r = 0; r < h; ++r)
    lat[r] = pi / 2 - (static_cast<double>(r) + 0.5) / static_cast<double>(h) * pi;
  for (std::size_t c = 0; c < w; ++c)
    lon[c] = (static_cast<double>(c) + 0.5) / static_cast<double>(w) * 2.0 * pi - pi;
  const double dlon_step = 2.0 * pi / static_cast<double>(w);

  std::vector<double> acc(h * w, 0.0);
  bool any = false;
  for (std::size_t fr = 0; fr < h; ++fr)
    for (std::size_t fc = 0; fc < w; ++fc) {
      if (!(fixations(0, 0, fr, fc) > 0.5f))
        continue;
      any = true;
      const SphericalPoint f(lon[fc], lat[fr]);
      for (std::size_t r = 0; r < h; ++r) {
        if (std::abs(lat[r] - lat[fr]) > cutoff)
          continue;
        // Largest longitude offset still inside the cutoff on this row.
        const double denom = std::cos(lat[r]) * std::cos(lat[fr]);
        const double bound = denom > 0.0
                                 ? (cos_cutoff - std::sin(lat[r]) * std::sin(lat[fr])) / denom
                                 : -2.0;
        std::size_t reach = w;
        if (bound > -1.0)
          reach = static_cast<std::size_t>(std::acos(std::min(bound, 1.0)) / dlon_step) + 1;
        const bool full_row = 2 * reach + 1 >= w;
        const std::size_t span = full_row ? w : 2 * reach + 1;
        for (std::size_t k = 0; k < span; ++k) {
          const std::size_t c = full_row ? k : (fc + w - reach + k) % w;
          const double d = geodesic_distance(f, SphericalPoint(lon[c], lat[r]));
          if (d <= cutoff)
            acc[r * w + c] += std::exp(-d * d / (2.0 * sigma * sigma));
        }
      }
    }
  if (!any)
    throw ArgumentError("blur_fixations: fixation map is empty");
  const double peak = *std::max_element(acc.begin(), acc.end());
  Tensor out(s);
  for (std::size_t i = 0; i < acc.size(); ++i)
    out[i] = static_cast<float>(acc[i] / peak);
  return out;
}

Tensor blur_fixations(const FixMap& fixations, double sigma_deg) {
  return blur_fixations(fixations.grid, sigma_deg);
}

Tensor rotate_longitude(const Tensor& erp, double degrees) {
  const Shape s = erp.shape();
  if (s.w == 0)
    return erp;
  const double turns = degrees / 360.0 - std::floor(degrees / 360.0);
  const auto shift =
      static_cast<std::size_t>(std::llround(turns * static_cast<double>(s.w))) % s.w;
  Tensor out(s);
  for (std::size_t n = 0; n < s.n; ++n)
    for (std::size_t c = 0; c < s.c; ++c)
      for (std::size_t y = 0; y < s.h; ++y) {
        const float* src = erp.plane(n, c) + y * s.w;
        float* dst = out.plane(n, c) + y * s.w;
        for (std::size_t x = 0; x < s.w; ++x)
          dst[(x + shift) % s.w] = src[x];
      }
  return out;
}

Tensor flip_horizontal(const Tensor& erp) {
  const Shape s = erp.shape();
  Tensor out(s);
  for (std::size_t n = 0; n < s.n; ++n)
    for (std::size_t c = 0; c < s.c; ++c)
      for (std::size_t y = 0; y < s.h; ++y)
        for (std::size_t x = 0; x < s.w; ++x)
          out(n, c, y, x) = erp(n, c, y, s.w - 1 - x);
  return out;
}

Tensor flip_vertical(const Tensor& erp) {
  const Shape s = erp.shape();
  Tensor out(s);
  for (std::size_t n = 0; n < s.n; ++n)
    for (std::size_t c = 0; c < s.c; ++c)
      for (std::size_t y = 0; y < s.h; ++y)
        std::copy_n(erp.plane(n, c) + (s.h - 1 - y) * s.w, s.w, out.plane(n, c) + y * s.w);
  return out;
}

std::vector<AugmentTransform> augmentation_transforms() {
  std::vector<AugmentTransform> out;
  auto rot_name = [](std::size_t k) { return "rot" + std::to_string(45 * k); };
  for (std::size_t k = 0; k < 8; ++k)
    out.push_back({k == 0 ? "orig" : rot_name(k), false, false, k});
  for (std::size_t k = 0; k < 8; ++k)
    out.push_back({k == 0 ? "hflip" : "hflip_" + rot_name(k), true, false, k});
  for (std::size_t k = 0; k < 7; ++k)
    out.push_back({k == 0 ? "vflip" : "vflip_" + rot_name(k), false, true, k});
  return out;
}

Tensor apply_transform(const Tensor& erp, const AugmentTransform& t) {
  const Shape s = erp.shape();
  if (s.h == 0 || s.w != 2 * s.h)
    throw ArgumentError("augment: ERP grid must be 2:1, got " + std::to_string(s.h) + "x" +
                        std::to_string(s.w) + " (rows x cols)");
  Tensor out = t.rotation_steps ? rotate_longitude(erp, 45.0 * static_cast<double>(t.rotation_steps))
                                : erp;
  if (t.hflip)
    out = flip_horizontal(out);
  if (t.vflip)
    out = flip_vertical(out);
  return out;
}

std::vector<NamedImage> augment(std::span<const NamedImage> images) {
  const auto transforms = augmentation_transforms();
  std::vector<NamedImage> out;
  out.reserve(images.size() * transforms.size());
  for (const NamedImage& img : images) {
    const std::string stem = std::filesystem::path(img.name).stem().string();
    for (const AugmentTransform& t : transforms)
      out.push_back({stem + "_" + t.name + ".pgm", apply_transform(img.image, t)});
  }
  return out;
}

} // namespace atsal
