#include <atsal/sphere.hpp>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace atsal {
namespace {

struct FaceBasis {
  Vec3 c; // outward center
  Vec3 r; // image right
  Vec3 u; // image up
};

constexpr std::array<FaceBasis, cube_face_count> face_bases{{
    {{0, 0, 1}, {1, 0, 0}, {0, 1, 0}},   // front
    {{-1, 0, 0}, {0, 0, 1}, {0, 1, 0}},  // left
    {{1, 0, 0}, {0, 0, -1}, {0, 1, 0}},  // right
    {{0, 0, -1}, {-1, 0, 0}, {0, 1, 0}}, // back
    {{0, 1, 0}, {1, 0, 0}, {0, 0, -1}},  // zenith
    {{0, -1, 0}, {1, 0, 0}, {0, 0, 1}},  // nadir
}};

double dot(const Vec3& a, const Vec3& b) noexcept { return a.x * b.x + a.y * b.y + a.z * b.z; }

void require_erp_aspect(std::size_t height, std::size_t width, const char* what) {
  if (height == 0 || width != 2 * height)
    throw ArgumentError(std::string(what) + ": ERP grid must be 2:1, got " +
                        std::to_string(height) + "x" + std::to_string(width) + " (rows x cols)");
}

// Bilinear lookup with clamped borders at continuous pixel coordinates
// (x, y), where integer values are pixel centers.
double sample_clamped(const float* plane, std::size_t rows, std::size_t cols, double y,
                      double x) noexcept {
  y = std::clamp(y, 0.0, static_cast<double>(rows - 1));
  x = std::clamp(x, 0.0, static_cast<double>(cols - 1));
  const std::size_t y0 = static_cast<std::size_t>(y);
  const std::size_t x0 = static_cast<std::size_t>(x);
  const std::size_t y1 = std::min(y0 + 1, rows - 1);
  const std::size_t x1 = std::min(x0 + 1, cols - 1);
  const double fy = y - static_cast<double>(y0);
  const double fx = x - static_cast<double>(x0);
  const double top = (1.0 - fx) * plane[y0 * cols + x0] + fx * plane[y0 * cols + x1];
  const double bottom = (1.0 - fx) * plane[y1 * cols + x0] + fx * plane[y1 * cols + x1];
  return (1.0 - fy) * top + fy * bottom;
}

} // namespace

SphericalPoint::SphericalPoint(double lon, double lat) {
  if (!std::isfinite(lon) || !std::isfinite(lat))
    throw ArgumentError("SphericalPoint: coordinates must be finite");
  if (lat < -pi / 2 || lat > pi / 2)
    throw ArgumentError("SphericalPoint: latitude " + std::to_string(lat) +
                        " outside [-pi/2, pi/2]");
  lon -= 2.0 * pi * std::floor((lon + pi) / (2.0 * pi));
  if (lon >= pi)
    lon -= 2.0 * pi;
  if (lon < -pi)
    lon = -pi;
  lon_ = lon;
  lat_ = lat;
}

Vec3 to_direction(const SphericalPoint& p) noexcept {
  const double cl = std::cos(p.lat());
  return {cl * std::sin(p.lon()), std::sin(p.lat()), cl * std::cos(p.lon())};
}

SphericalPoint from_direction(const Vec3& d) {
  const double norm = std::sqrt(dot(d, d));
  if (!(norm > 0.0))
    throw ArgumentError("from_direction: zero-length direction");
  const double lat = std::asin(std::clamp(d.y / norm, -1.0, 1.0));
  return SphericalPoint(std::atan2(d.x, d.z), lat);
}

const char* to_string(CubeFace face) noexcept {
  switch (face) {
  case CubeFace::front:
    return "front";
  case CubeFace::left:
    return "left";
  case CubeFace::right:
    return "right";
  case CubeFace::back:
    return "back";
  case CubeFace::zenith:
    return "zenith";
  case CubeFace::nadir:
    return "nadir";
  }
  return "?";
}

CubeFace cube_face_index(const Vec3& d) noexcept {
  const double ax = std::abs(d.x);
  const double ay = std::abs(d.y);
  const double az = std::abs(d.z);
  if (ay >= ax && ay >= az)
    return d.y > 0 ? CubeFace::zenith : CubeFace::nadir;
  if (ax >= az)
    return d.x > 0 ? CubeFace::right : CubeFace::left;
  return d.z > 0 ? CubeFace::front : CubeFace::back;
}

Vec3 face_direction(CubeFace face, double a, double b) noexcept {
  const FaceBasis& f = face_bases[static_cast<std::size_t>(face)];
  return {f.c.x + a * f.r.x - b * f.u.x, f.c.y + a * f.r.y - b * f.u.y,
          f.c.z + a * f.r.z - b * f.u.z};
}

FaceCoordinate to_face_coordinate(const Vec3& d) noexcept {
  FaceCoordinate fc;
  fc.face = cube_face_index(d);
  const FaceBasis& f = face_bases[static_cast<std::size_t>(fc.face)];
  const double dc = dot(d, f.c);
  fc.a = dot(d, f.r) / dc;
  fc.b = -dot(d, f.u) / dc;
  return fc;
}

SphericalPoint erp_pixel_to_sphere(std::size_t row, std::size_t col, std::size_t height,
                                   std::size_t width) {
  require_erp_aspect(height, width, "erp_pixel_to_sphere");
  if (row >= height || col >= width)
    throw ArgumentError("erp_pixel_to_sphere: pixel (" + std::to_string(row) + ", " +
                        std::to_string(col) + ") outside the grid");
  const double lon = (static_cast<double>(col) + 0.5) / static_cast<double>(width) * 2.0 * pi - pi;
  const double lat = pi / 2 - (static_cast<double>(row) + 0.5) / static_cast<double>(height) * pi;
  return SphericalPoint(lon, lat);
}

ErpCoordinate sphere_to_erp(const SphericalPoint& p, std::size_t height,
                            std::size_t width) noexcept {
  return {(pi / 2 - p.lat()) / pi * static_cast<double>(height),
          (p.lon() + pi) / (2.0 * pi) * static_cast<double>(width)};
}

double sample_erp(const float* plane, std::size_t height, std::size_t width,
                  const SphericalPoint& p) noexcept {
  const ErpCoordinate e = sphere_to_erp(p, height, width);
  const double y = std::clamp(e.row - 0.5, 0.0, static_cast<double>(height - 1));
  const double x = e.col - 0.5;
  const double xf = std::floor(x);
  const double fx = x - xf;
  const auto w = static_cast<long long>(width);
  const auto x0 = static_cast<std::size_t>(((static_cast<long long>(xf) % w) + w) % w);
  const std::size_t x1 = (x0 + 1) % width;
  const std::size_t y0 = static_cast<std::size_t>(y);
  const std::size_t y1 = std::min(y0 + 1, height - 1);
  const double fy = y - static_cast<double>(y0);
  const double top = (1.0 - fx) * plane[y0 * width + x0] + fx * plane[y0 * width + x1];
  const double bottom = (1.0 - fx) * plane[y1 * width + x0] + fx * plane[y1 * width + x1];
  return (1.0 - fy) * top + fy * bottom;
}

void CubeFaces::validate() const {
  const Shape s = faces[0].shape();
  if (s.h != s.w || s.h == 0)
    throw DimensionError("CubeFaces: faces must be square, got " + s.str());
  for (std::size_t i = 1; i < cube_face_count; ++i)
    if (faces[i].shape() != s)
      throw DimensionError("CubeFaces: face " + std::to_string(i) + " has shape " +
                           faces[i].shape().str() + ", expected " + s.str());
}

CubeFaces erp_to_cmp(const Tensor& erp, std::size_t face_size) {
  const Shape s = erp.shape();
  require_erp_aspect(s.h, s.w, "erp_to_cmp");
  if (face_size < 2)
    throw ArgumentError("erp_to_cmp: face_size must be at least 2, got " +
                        std::to_string(face_size));
  CubeFaces out;
  std::vector<SphericalPoint> rays(face_size * face_size);
  const double fs = static_cast<double>(face_size);
  for (std::size_t f = 0; f < cube_face_count; ++f) {
    for (std::size_t i = 0; i < face_size; ++i)
      for (std::size_t j = 0; j < face_size; ++j) {
        const double a = 2.0 * (static_cast<double>(j) + 0.5) / fs - 1.0;
        const double b = 2.0 * (static_cast<double>(i) + 0.5) / fs - 1.0;
        rays[i * face_size + j] = from_direction(face_direction(static_cast<CubeFace>(f), a, b));
      }
    Tensor face(Shape{s.n, s.c, face_size, face_size});
    for (std::size_t n = 0; n < s.n; ++n)
      for (std::size_t c = 0; c < s.c; ++c) {
        const float* src = erp.plane(n, c);
        float* dst = face.plane(n, c);
        for (std::size_t k = 0; k < rays.size(); ++k)
          dst[k] = static_cast<float>(sample_erp(src, s.h, s.w, rays[k]));
      }
    out.faces[f] = std::move(face);
  }
  return out;
}

Tensor cmp_to_erp(const CubeFaces& faces, std::size_t height, std::size_t width) {
  faces.validate();
  require_erp_aspect(height, width, "cmp_to_erp");
  const Shape fs = faces.faces[0].shape();
  const std::size_t size = fs.h;
  Tensor out(Shape{fs.n, fs.c, height, width});
  for (std::size_t row = 0; row < height; ++row)
    for (std::size_t col = 0; col < width; ++col) {
      const FaceCoordinate fc =
          to_face_coordinate(to_direction(erp_pixel_to_sphere(row, col, height, width)));
      const double x = (fc.a + 1.0) / 2.0 * static_cast<double>(size) - 0.5;
      const double y = (fc.b + 1.0) / 2.0 * static_cast<double>(size) - 0.5;
      const Tensor& face = faces[fc.face];
      for (std::size_t n = 0; n < fs.n; ++n)
        for (std::size_t c = 0; c < fs.c; ++c)
          out(n, c, row, col) = static_cast<float>(sample_clamped(face.plane(n, c), size, size, y, x));
    }
  return out;
}

double geodesic_distance(const SphericalPoint& a, const SphericalPoint& b) noexcept {
  const double dlat = b.lat() - a.lat();
  const double dlon = b.lon() - a.lon();
  const double s1 = std::sin(dlat / 2);
  const double s2 = std::sin(dlon / 2);
  const double h = s1 * s1 + std::cos(a.lat()) * std::cos(b.lat()) * s2 * s2;
  return 2.0 * std::asin(std::sqrt(std::clamp(h, 0.0, 1.0)));
}

BasicTensor<double> solid_angle_weights(std::size_t height, std::size_t width) {
  require_erp_aspect(height, width, "solid_angle_weights");
  BasicTensor<double> w(Shape{1, 1, height, width});
  double total = 0.0;
  for (std::size_t row = 0; row < height; ++row) {
    const double lat = pi / 2 - (static_cast<double>(row) + 0.5) / static_cast<double>(height) * pi;
    const double v = std::cos(lat);
    for (std::size_t col = 0; col < width; ++col)
      w(0, 0, row, col) = v;
    total += v * static_cast<double>(width);
  }
  for (double& v : w.data())
    v /= total;
  return w;
}

} // namespace atsal
