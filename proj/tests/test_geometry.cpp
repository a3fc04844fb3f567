#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <vector>

#include "panolayout/geometry.hpp"

using namespace panolayout;

namespace {

RoomLayout square_room(double half_side, double cam_h = 1.6, double room_h = 2.8) {
  return RoomLayout({{-half_side, -half_side},
                     {half_side, -half_side},
                     {half_side, half_side},
                     {-half_side, half_side}},
                    cam_h, room_h);
}

RoomLayout l_room() {
  // 6-vertex room around the origin
  return RoomLayout({{-2.0, -1.5}, {3.0, -1.5}, {3.0, 1.0}, {0.5, 1.0}, {0.5, 2.5}, {-2.0, 2.5}},
                    1.6, 2.9);
}

// Test-side inside test, independent of the production ray intersection.
bool inside(const std::vector<Vec2>& poly, double x, double z) {
  bool in = false;
  const size_t n = poly.size();
  for (size_t i = 0; i < n; ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % n];
    if ((a.z <= z) != (b.z <= z)) {
      const double t = (z - a.z) / (b.z - a.z);
      if (x < a.x + t * (b.x - a.x)) in = !in;
    }
  }
  return in;
}

// Brute-force oracle: march along the ray in 1 mm steps to bracket the wall,
// then bisect the inside/outside predicate.
double ray_march_distance(const std::vector<Vec2>& poly, double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  double t = 0.0;
  while (inside(poly, t * c, t * s)) {
    t += 1e-3;
    REQUIRE(t < 100.0);
  }
  double lo = t - 1e-3, hi = t;
  for (int i = 0; i < 50; ++i) {
    const double mid = 0.5 * (lo + hi);
    (inside(poly, mid * c, mid * s) ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double shoelace(const std::vector<Vec2>& pts) {
  double acc = 0.0;
  for (size_t i = 0; i < pts.size(); ++i) {
    const Vec2& a = pts[i];
    const Vec2& b = pts[(i + 1) % pts.size()];
    acc += a.x * b.z - b.x * a.z;
  }
  return 0.5 * acc;
}

}  // namespace

TEST_CASE("ray distance on an axis-aligned square") {
  const RoomLayout sq = square_room(2.0);
  CHECK(polygon_ray_distance(sq.corners(), 0.0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(polygon_ray_distance(sq.corners(), M_PI / 4.0) ==
        doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("horizon depth matches the ray-marching oracle on an L-shaped room") {
  const RoomLayout room = l_room();
  const int w = 128;
  const std::vector<double> depth = horizon_depth(room, w);
  for (int u = 0; u < w; ++u) {
    const double oracle = ray_march_distance(room.corners(), col_theta(u, w));
    CHECK(std::abs(depth[u] - oracle) < 1e-4);
  }
}

TEST_CASE("boundary latitude pinned values") {
  const std::vector<double> d45{1.6};
  auto lats = boundary_latitudes(d45, 1.6, 1.6 + 1.6);
  CHECK(lats.first[0] == doctest::Approx(-M_PI / 4.0).epsilon(1e-12));
  CHECK(lats.second[0] == doctest::Approx(M_PI / 4.0).epsilon(1e-12));

  // latitudes shrink monotonically toward zero as depth grows
  double prev_f = -10.0, prev_c = 10.0;
  for (double d : {1.0, 2.0, 8.0, 100.0, 1e6}) {
    auto l = boundary_latitudes({d}, 1.6, 2.8);
    CHECK(l.first[0] > prev_f);
    CHECK(l.second[0] < prev_c);
    prev_f = l.first[0];
    prev_c = l.second[0];
  }
  CHECK(std::abs(prev_f) < 1e-5);
  CHECK(prev_c < 1e-5);
}

TEST_CASE("representation consistency across generated rooms") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const RoomLayout room = generate_room(seed);
    const LayoutTarget t = target_from_layout(room, 64);
    for (int u = 0; u < 64; ++u) {
      CHECK(std::abs(std::tan(-t.lat_floor[u]) * t.depth[u] - room.camera_height()) < 1e-9);
      CHECK(std::abs(std::tan(t.lat_ceil[u]) * t.depth[u] -
                     (room.room_height() - room.camera_height())) < 1e-9);
      CHECK(t.depth[u] > 0.0);
      CHECK(t.lat_floor[u] < 0.0);
      CHECK(t.lat_ceil[u] > 0.0);
    }
    CHECK(t.corner_cols.size() == room.corners().size());
  }
}

TEST_CASE("generate_room is deterministic and always valid") {
  const RoomLayout a = generate_room(1234);
  const RoomLayout b = generate_room(1234);
  REQUIRE(a.corners().size() == b.corners().size());
  for (size_t i = 0; i < a.corners().size(); ++i) {
    CHECK(a.corners()[i].x == b.corners()[i].x);
    CHECK(a.corners()[i].z == b.corners()[i].z);
  }
  CHECK(a.room_height() == b.room_height());

  int l_shapes = 0;
  for (std::uint64_t seed = 0; seed < 10000; ++seed) {
    const RoomLayout room = generate_room(seed);
    CHECK(RoomLayout::validate(room.corners(), room.camera_height(), room.room_height()).empty());
    l_shapes += room.corners().size() == 6;
  }
  // shape mix roughly follows the 40% L-shape probability
  CHECK(l_shapes > 3000);
  CHECK(l_shapes < 5000);
}

TEST_CASE("room layout invariants are enforced") {
  // camera outside the polygon
  CHECK_THROWS_AS(RoomLayout({{1, 1}, {2, 1}, {2, 2}, {1, 2}}, 1.6, 2.8), std::invalid_argument);
  // not Manhattan
  CHECK_THROWS_AS(RoomLayout({{-1, -1}, {1, -0.9}, {1, 1}, {-1, 1}}, 1.6, 2.8),
                  std::invalid_argument);
  // camera above the ceiling
  CHECK_THROWS_AS(square_room(2.0, 3.0, 2.8), std::invalid_argument);
  // odd vertex count rejected
  CHECK(!RoomLayout::validate({{-1, -1}, {1, -1}, {1, 1}, {0, 1}, {-1, 1}}, 1.6, 2.8).empty());
  // clockwise orientation rejected
  CHECK(!RoomLayout::validate({{-1, -1}, {-1, 1}, {1, 1}, {1, -1}}, 1.6, 2.8).empty());
}

TEST_CASE("rendered boundaries match the analytic latitudes") {
  const RoomLayout room = l_room();
  const int h = 64, w = 128;
  const LayoutTarget t = target_from_layout(room, w);
  const std::vector<std::uint8_t> cls = classify_panorama(room, h, w);
  for (int u = 0; u < w; ++u) {
    // first floor row from the class map vs the analytic boundary
    int first_floor = h;
    int last_ceil = -1;
    for (int v = 0; v < h; ++v) {
      if (cls[v * w + u] == 2 && first_floor == h) first_floor = v;
      if (cls[v * w + u] == 0) last_ceil = v;
    }
    const double vf = phi_to_row(t.lat_floor[u], h);
    const double vc = phi_to_row(t.lat_ceil[u], h);
    CHECK(std::abs(first_floor - 0.5 - vf) <= 1.0);
    CHECK(std::abs(last_ceil + 0.5 - vc) <= 1.0);
  }
}

TEST_CASE("render determinism and periodicity") {
  const RoomLayout room = generate_room(77);
  Rng style_rng(3);
  SceneStyle style = SceneStyle::random(style_rng, 0.0);
  const Panorama a = render_panorama(room, style, 32, 64, 9);
  const Panorama b = render_panorama(room, style, 32, 64, 9);
  CHECK(a.pixels == b.pixels);

  style.noise_sigma = 0.05;
  const Panorama c = render_panorama(room, style, 32, 64, 9);
  const Panorama d = render_panorama(room, style, 32, 64, 9);
  CHECK(c.pixels == d.pixels);

  // wrapped ray directions classify identically
  const std::vector<std::uint8_t> cls = classify_panorama(room, 32, 64);
  const std::vector<double> depth = horizon_depth(room, 64);
  for (int u : {0, 63}) {
    const double wrapped = col_theta(u, 64) + (u == 0 ? 2.0 * M_PI : -2.0 * M_PI);
    CHECK(polygon_ray_distance(room.corners(), wrapped) ==
          doctest::Approx(depth[u]).epsilon(1e-9));
  }
  CHECK(cls.size() == 32 * 64);
}

TEST_CASE("stretch scales the floor plan and nothing else") {
  const RoomLayout sq = square_room(2.0);
  const RoomLayout same = stretch_layout(sq, 1.0, 1.0);
  for (size_t i = 0; i < sq.corners().size(); ++i) {
    CHECK(same.corners()[i].x == sq.corners()[i].x);
    CHECK(same.corners()[i].z == sq.corners()[i].z);
  }

  const RoomLayout wide = stretch_layout(sq, 2.0, 1.0);
  CHECK(polygon_ray_distance(wide.corners(), 0.0) == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(polygon_ray_distance(wide.corners(), M_PI / 2.0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(wide.room_height() == sq.room_height());
  CHECK_THROWS_AS(stretch_layout(sq, 0.4, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(stretch_layout(sq, 1.0, 2.5), std::invalid_argument);
}

TEST_CASE("stretched rectangles match the closed-form ray solution") {
  const RoomLayout rect =
      RoomLayout({{-1.5, -2.5}, {2.0, -2.5}, {2.0, 1.0}, {-1.5, 1.0}}, 1.6, 2.8);
  const double kx = 1.7, kz = 0.6;
  const RoomLayout moved = stretch_layout(rect, kx, kz);
  const int w = 256;
  const std::vector<double> depth = horizon_depth(moved, w);
  const double x0 = -1.5 * kx, x1 = 2.0 * kx, z0 = -2.5 * kz, z1 = 1.0 * kz;
  for (int u = 0; u < w; ++u) {
    const double c = std::cos(col_theta(u, w)), s = std::sin(col_theta(u, w));
    double best = 1e300;
    if (c > 0.0) best = std::min(best, x1 / c);
    if (c < 0.0) best = std::min(best, x0 / c);
    if (s > 0.0) best = std::min(best, z1 / s);
    if (s < 0.0) best = std::min(best, z0 / s);
    CHECK(std::abs(depth[u] - best) < 1e-9);
  }
}

TEST_CASE("quarter-turn rotations are exact and shift depth columns") {
  const RoomLayout room = l_room();
  const RoomLayout back = rotate_layout(rotate_layout(room, M_PI / 2.0), 3.0 * M_PI / 2.0);
  for (size_t i = 0; i < room.corners().size(); ++i) {
    CHECK(std::abs(back.corners()[i].x - room.corners()[i].x) < 1e-12);
    CHECK(std::abs(back.corners()[i].z - room.corners()[i].z) < 1e-12);
  }

  const int w = 128;
  const std::vector<double> depth = horizon_depth(room, w);
  const std::vector<double> rotated = horizon_depth(rotate_layout(room, M_PI / 2.0), w);
  const int shift = w / 4;
  for (int u = 0; u < w; ++u) {
    CHECK(rotated[u] == doctest::Approx(depth[(u - shift + w) % w]).epsilon(1e-9));
  }

  CHECK_THROWS_AS(rotate_layout(room, 0.3), std::invalid_argument);
}

TEST_CASE("flip mirrors x and preserves validity") {
  const RoomLayout room = l_room();
  const RoomLayout flipped = flip_layout(room);
  CHECK(RoomLayout::validate(flipped.corners(), flipped.camera_height(), flipped.room_height())
            .empty());
  const int w = 64;
  const std::vector<double> d = horizon_depth(room, w);
  const std::vector<double> f = horizon_depth(flipped, w);
  for (int u = 0; u < w; ++u) {
    CHECK(f[u] == doctest::Approx(d[w - 1 - u]).epsilon(1e-9));
  }
}

TEST_CASE("depth_to_polygon round trips and approximates areas") {
  // constant depth approximates a circle
  const std::vector<double> circle(64, 3.0);
  const std::vector<Vec2> poly = depth_to_polygon(circle);
  for (const Vec2& p : poly) {
    CHECK(std::sqrt(p.x * p.x + p.z * p.z) == doctest::Approx(3.0).epsilon(1e-12));
  }
  CHECK(shoelace(poly) == doctest::Approx(M_PI * 9.0).epsilon(0.01));

  // square at W = 256: area within 0.5%
  const RoomLayout sq = square_room(2.0);
  const std::vector<Vec2> sq_poly = depth_to_polygon(horizon_depth(sq, 256));
  CHECK(std::abs(shoelace(sq_poly) - 16.0) / 16.0 < 0.005);

  // cuboid at W = 1024: area within 0.1%
  const RoomLayout rect =
      RoomLayout({{-1.2, -3.0}, {2.4, -3.0}, {2.4, 0.8}, {-1.2, 0.8}}, 1.6, 2.8);
  const double exact = (2.4 + 1.2) * (3.0 + 0.8);
  const std::vector<Vec2> rect_poly = depth_to_polygon(horizon_depth(rect, 1024));
  CHECK(std::abs(shoelace(rect_poly) - exact) / exact < 0.001);

  // round trip: ray distances of the polygonized square reproduce the depth
  const std::vector<double> depth = horizon_depth(sq, 256);
  for (int u = 0; u < 256; ++u) {
    const double back = polygon_ray_distance(sq_poly, col_theta(u, 256));
    CHECK(std::abs(back - depth[u]) < 1e-3);
  }
}
