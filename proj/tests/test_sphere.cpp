#include <doctest.h>

#include "test_support.hpp"

#include <atsal/sphere.hpp>

#include <array>
#include <cmath>
#include <set>

using namespace atsal;

namespace {

struct Basis {
  std::array<double, 3> c, r, u;
};

// front, left, right, back, zenith, nadir
const std::array<Basis, 6> bases = {{
    {{0, 0, 1}, {1, 0, 0}, {0, 1, 0}},
    {{-1, 0, 0}, {0, 0, 1}, {0, 1, 0}},
    {{1, 0, 0}, {0, 0, -1}, {0, 1, 0}},
    {{0, 0, -1}, {-1, 0, 0}, {0, 1, 0}},
    {{0, 1, 0}, {1, 0, 0}, {0, 0, -1}},
    {{0, -1, 0}, {1, 0, 0}, {0, 0, 1}},
}};

double smooth(double x, double y, double z) { return 0.5 + 0.2 * x + 0.2 * y + 0.1 * z; }

Tensor smooth_erp(std::size_t h, std::size_t w) {
  Tensor t(Shape{1, 1, h, w});
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < w; ++c) {
      const double lon = (c + 0.5) / w * 2 * pi - pi;
      const double lat = pi / 2 - (r + 0.5) / h * pi;
      t(0, 0, r, c) = static_cast<float>(
          smooth(std::cos(lat) * std::sin(lon), std::sin(lat), std::cos(lat) * std::cos(lon)));
    }
  return t;
}

// Bilinear ERP lookup written from the pixel-center convention.
double oracle_sample(const Tensor& erp, double lon, double lat) {
  const std::size_t h = erp.shape().h, w = erp.shape().w;
  const double x = (lon + pi) / (2 * pi) * w - 0.5;
  const double y = std::clamp((pi / 2 - lat) / pi * h - 0.5, 0.0, double(h - 1));
  const double xf = std::floor(x);
  const long x0 = ((long(xf) % long(w)) + long(w)) % long(w);
  const long x1 = (x0 + 1) % long(w);
  const auto y0 = std::size_t(y);
  const std::size_t y1 = std::min(y0 + 1, h - 1);
  const double fx = x - xf, fy = y - double(y0);
  auto at = [&](std::size_t r, long c) { return double(erp(0, 0, r, std::size_t(c))); };
  return (1 - fy) * ((1 - fx) * at(y0, x0) + fx * at(y0, x1)) +
         fy * ((1 - fx) * at(y1, x0) + fx * at(y1, x1));
}

std::size_t oracle_face(double x, double y, double z) {
  const double ax = std::abs(x), ay = std::abs(y), az = std::abs(z);
  if (ay >= ax && ay >= az)
    return y > 0 ? 4 : 5;
  if (ax >= az)
    return x > 0 ? 2 : 1;
  return z > 0 ? 0 : 3;
}

} // namespace

TEST_CASE("erp pixel coordinates") {
  const std::size_t h = 128, w = 256;
  const SphericalPoint centre = erp_pixel_to_sphere(h / 2, w / 2, h, w);
  CHECK(std::abs(centre.lon()) <= pi / w + 1e-12);
  CHECK(std::abs(centre.lat()) <= pi / (2 * h) + 1e-12);
  const SphericalPoint corner = erp_pixel_to_sphere(0, 0, h, w);
  CHECK(corner.lon() == doctest::Approx(-pi + pi / w).epsilon(1e-14));
  CHECK(corner.lat() == doctest::Approx(pi / 2 - pi / (2 * h)).epsilon(1e-14));
  double prev = -10;
  for (std::size_t c = 0; c < w; ++c) {
    const double lon = erp_pixel_to_sphere(5, c, h, w).lon();
    CHECK(lon > prev);
    CHECK(lon >= -pi);
    CHECK(lon < pi);
    prev = lon;
  }
  CHECK_THROWS_AS(erp_pixel_to_sphere(0, 0, 100, 150), ArgumentError);
  CHECK_THROWS_AS(erp_pixel_to_sphere(128, 0, 128, 256), ArgumentError);
}

TEST_CASE("spherical point ranges") {
  CHECK(SphericalPoint(pi, 0).lon() == doctest::Approx(-pi));
  CHECK(SphericalPoint(3 * pi / 2, 0).lon() == doctest::Approx(-pi / 2));
  CHECK_THROWS_AS(SphericalPoint(0, 2.0), ArgumentError);
  CHECK_THROWS_AS(SphericalPoint(0, std::nan("")), ArgumentError);
}

TEST_CASE("erp_to_cmp examples") {
  const Tensor flat(Shape{1, 1, 64, 128}, 0.25f);
  const CubeFaces faces = erp_to_cmp(flat, 16);
  for (const Tensor& f : faces.faces) {
    CHECK(f.shape() == Shape{1, 1, 16, 16});
    for (float v : f.data())
      CHECK(v == doctest::Approx(0.25).epsilon(1e-6));
  }
  CHECK_THROWS_AS(erp_to_cmp(flat, 1), ArgumentError);
  CHECK_THROWS_AS(erp_to_cmp(Tensor(Shape{1, 1, 64, 100}), 8), ArgumentError);

  // Front-face center pixels surround (lon 0, lat 0).
  const Tensor erp = smooth_erp(128, 256);
  const CubeFaces cf = erp_to_cmp(erp, 64);
  const Tensor& front = cf[CubeFace::front];
  const double centre =
      0.25 * (front(0, 0, 31, 31) + front(0, 0, 31, 32) + front(0, 0, 32, 31) + front(0, 0, 32, 32));
  CHECK(centre == doctest::Approx(oracle_sample(erp, 0, 0)).epsilon(1e-3));
}

TEST_CASE("erp_to_cmp matches a direct ray-sampling oracle") {
  const Tensor erp = smooth_erp(128, 256);
  const std::size_t fsz = 64;
  const CubeFaces faces = erp_to_cmp(erp, fsz);
  double worst = 0;
  for (std::size_t f = 0; f < 6; ++f)
    for (std::size_t i = 0; i < fsz; ++i)
      for (std::size_t j = 0; j < fsz; ++j) {
        const double a = 2.0 * (j + 0.5) / fsz - 1, b = 2.0 * (i + 0.5) / fsz - 1;
        const Basis& B = bases[f];
        double d[3];
        for (int k = 0; k < 3; ++k)
          d[k] = B.c[k] + a * B.r[k] - b * B.u[k];
        const double n = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
        const double lon = std::atan2(d[0], d[2]);
        const double lat = std::asin(d[1] / n);
        worst = std::max(worst, std::abs(faces.faces[f](0, 0, i, j) - oracle_sample(erp, lon, lat)));
      }
  CHECK(worst < 1e-6);
}

TEST_CASE("cmp_to_erp face assignment is a partition") {
  for (std::size_t h : {16, 40, 128}) {
    CubeFaces labels;
    for (std::size_t f = 0; f < 6; ++f)
      labels.faces[f] = Tensor(Shape{1, 1, 8, 8}, static_cast<float>(f));
    const Tensor erp = cmp_to_erp(labels, h, 2 * h);
    std::set<float> seen;
    for (std::size_t r = 0; r < h; ++r)
      for (std::size_t c = 0; c < 2 * h; ++c) {
        const SphericalPoint p = erp_pixel_to_sphere(r, c, h, 2 * h);
        const double x = std::cos(p.lat()) * std::sin(p.lon());
        const double y = std::sin(p.lat());
        const double z = std::cos(p.lat()) * std::cos(p.lon());
        const float v = erp(0, 0, r, c);
        REQUIRE(v == static_cast<float>(oracle_face(x, y, z)));
        seen.insert(v);
      }
    CHECK(seen.size() == 6);
  }
  // ERP pixels straddling (lon 0, lat 0) read the front-face center.
  CubeFaces faces;
  for (auto& f : faces.faces)
    f = Tensor(Shape{1, 1, 9, 9}, 0.0f);
  faces[CubeFace::front](0, 0, 4, 4) = 1.0f;
  const Tensor back = cmp_to_erp(faces, 9 * 4, 9 * 8);
  CHECK(back(0, 0, 18, 36) > 0.0f);
  CHECK(back(0, 0, 17, 35) > 0.0f);
}

TEST_CASE("projection round trip on smooth inputs") {
  for (std::size_t h : {64, 128}) {
    const Tensor erp = smooth_erp(h, 2 * h);
    const Tensor back = cmp_to_erp(erp_to_cmp(erp, h / 2), h, 2 * h);
    float lo = 1e9f, hi = -1e9f;
    for (float v : erp.data()) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    double err = 0;
    for (std::size_t i = 0; i < erp.size(); ++i)
      err += std::abs(back[i] - erp[i]);
    CHECK(err / erp.size() < 0.02 * (hi - lo));
  }
}

TEST_CASE("projection is resolution covariant") {
  const Tensor erp = smooth_erp(128, 256);
  const CubeFaces coarse = erp_to_cmp(erp, 32);
  const CubeFaces fine = erp_to_cmp(erp, 64);
  double err = 0;
  for (std::size_t f = 0; f < 6; ++f)
    for (std::size_t i = 0; i < 32; ++i)
      for (std::size_t j = 0; j < 32; ++j) {
        const Tensor& F = fine.faces[f];
        const double down = 0.25 * (F(0, 0, 2 * i, 2 * j) + F(0, 0, 2 * i + 1, 2 * j) +
                                    F(0, 0, 2 * i, 2 * j + 1) + F(0, 0, 2 * i + 1, 2 * j + 1));
        err = std::max(err, std::abs(down - coarse.faces[f](0, 0, i, j)));
      }
  CHECK(err < 5e-3);
}

TEST_CASE("geodesic distance") {
  const SphericalPoint o(0, 0);
  CHECK(geodesic_distance(o, o) == 0.0);
  CHECK(geodesic_distance(o, SphericalPoint(pi / 2, 0)) == doctest::Approx(pi / 2).epsilon(1e-14));
  const SphericalPoint a(0, pi / 4), b(pi, pi / 4);
  const Vec3 da = to_direction(a), db = to_direction(b);
  const double oracle = std::acos(da.x * db.x + da.y * db.y + da.z * db.z);
  CHECK(std::abs(geodesic_distance(a, b) - oracle) < 1e-12);

  std::mt19937_64 rng(3);
  auto random_point = [&] {
    return SphericalPoint(testing::uniform(rng, -pi, pi), std::asin(testing::uniform(rng, -1, 1)));
  };
  for (int i = 0; i < 2000; ++i) {
    const SphericalPoint p = random_point(), q = random_point(), r = random_point();
    const double pq = geodesic_distance(p, q);
    CHECK(pq == doctest::Approx(geodesic_distance(q, p)).epsilon(1e-12));
    CHECK(pq >= 0.0);
    CHECK(pq <= pi);
    CHECK(pq <= geodesic_distance(p, r) + geodesic_distance(r, q) + 1e-9);
  }
}

TEST_CASE("direction conversions invert each other") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 500; ++i) {
    const SphericalPoint p(testing::uniform(rng, -pi, pi), testing::uniform(rng, -1.5, 1.5));
    const SphericalPoint q = from_direction(to_direction(p));
    CHECK(geodesic_distance(p, q) < 1e-12);
    const FaceCoordinate fc = to_face_coordinate(to_direction(p));
    const Vec3 d = face_direction(fc.face, fc.a, fc.b);
    CHECK(geodesic_distance(p, from_direction(d)) < 1e-12);
    CHECK(std::abs(fc.a) <= 1.0 + 1e-12);
    CHECK(std::abs(fc.b) <= 1.0 + 1e-12);
  }
}

TEST_CASE("solid angle weights") {
  const auto w = solid_angle_weights(120, 240);
  double total = 0;
  for (double v : w.data())
    total += v;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  std::size_t best = 0;
  for (std::size_t r = 0; r < 120; ++r)
    if (w(0, 0, r, 0) > w(0, 0, best, 0))
      best = r;
  CHECK((best == 59 || best == 60));
  // Three rows sit at latitudes 60, 0 and -60 degrees.
  const auto w3 = solid_angle_weights(3, 6);
  CHECK(w3(0, 0, 0, 0) / w3(0, 0, 1, 0) == doctest::Approx(0.5).epsilon(1e-6));
  CHECK_THROWS_AS(solid_angle_weights(3, 5), ArgumentError);
}
