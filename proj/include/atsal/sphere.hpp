#pragma once

#include <atsal/tensor.hpp>

#include <array>
#include <cstddef>

namespace atsal {

inline constexpr double pi = 3.14159265358979323846;

class SphericalPoint {
public:
  SphericalPoint() = default;
  // lon is wrapped into [-pi, pi); lat outside [-pi/2, pi/2] raises ArgumentError.
  SphericalPoint(double lon, double lat);

  double lon() const noexcept { return lon_; }
  double lat() const noexcept { return lat_; }

private:
  double lon_ = 0.0;
  double lat_ = 0.0;
};

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

// x = cos(lat) sin(lon), y = sin(lat), z = cos(lat) cos(lon).
Vec3 to_direction(const SphericalPoint& p) noexcept;
SphericalPoint from_direction(const Vec3& d);

enum class CubeFace : std::size_t { front = 0, left = 1, right = 2, back = 3, zenith = 4, nadir = 5 };

inline constexpr std::size_t cube_face_count = 6;

const char* to_string(CubeFace face) noexcept;

// Face owning direction d under the max-|component| rule.
CubeFace cube_face_index(const Vec3& d) noexcept;

// Outward ray through face coordinates a (right) and b (down), both in [-1, 1].
Vec3 face_direction(CubeFace face, double a, double b) noexcept;

struct FaceCoordinate {
  CubeFace face = CubeFace::front;
  double a = 0.0;
  double b = 0.0;
};

FaceCoordinate to_face_coordinate(const Vec3& d) noexcept;

SphericalPoint erp_pixel_to_sphere(std::size_t row, std::size_t col, std::size_t height,
                                   std::size_t width);

// Continuous pixel coordinates (pixel centers at integer + 0.5) of a point.
struct ErpCoordinate {
  double row = 0.0;
  double col = 0.0;
};

ErpCoordinate sphere_to_erp(const SphericalPoint& p, std::size_t height, std::size_t width) noexcept;

// Bilinear lookup of one ERP plane at p, wrapping in longitude and clamping
// in latitude.
double sample_erp(const float* plane, std::size_t height, std::size_t width,
                  const SphericalPoint& p) noexcept;

// Faces are ordered front, left, right, back, zenith, nadir. Each face is an
// (n, c, face_size, face_size) tensor.
struct CubeFaces {
  std::array<Tensor, cube_face_count> faces;

  std::size_t face_size() const noexcept { return faces[0].shape().h; }
  // Throws DimensionError if faces are not square and equally shaped.
  void validate() const;

  Tensor& operator[](CubeFace f) noexcept { return faces[static_cast<std::size_t>(f)]; }
  const Tensor& operator[](CubeFace f) const noexcept {
    return faces[static_cast<std::size_t>(f)];
  }
};

CubeFaces erp_to_cmp(const Tensor& erp, std::size_t face_size);
Tensor cmp_to_erp(const CubeFaces& faces, std::size_t height, std::size_t width);

// Great-circle distance by the haversine form, in [0, pi].
double geodesic_distance(const SphericalPoint& a, const SphericalPoint& b) noexcept;

// cos(lat) per ERP row, normalized so the (1, 1, height, width) grid sums to 1.
BasicTensor<double> solid_angle_weights(std::size_t height, std::size_t width);

} // namespace atsal
