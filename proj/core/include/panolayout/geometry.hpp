#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "panolayout/rng.hpp"

namespace panolayout {

struct Vec2 {
  double x = 0.0;
  double z = 0.0;
};

// Equirectangular conventions. Column u covers longitude
// theta = (u + 0.5) / W * 2*pi - pi, row v covers latitude
// phi = pi/2 - (v + 0.5) / H * pi. Pixel centers never touch the poles.
inline double col_theta(double u, int w) { return (u + 0.5) / w * 2.0 * M_PI - M_PI; }
inline double row_phi(double v, int h) { return M_PI / 2.0 - (v + 0.5) / h * M_PI; }
inline double theta_to_col(double theta, int w) { return (theta + M_PI) / (2.0 * M_PI) * w - 0.5; }
inline double phi_to_row(double phi, int h) { return (M_PI / 2.0 - phi) / M_PI * h - 0.5; }

// Manhattan floor-plan polygon with the camera at the origin. Vertices are
// counter-clockwise, every edge is axis-aligned, and the polygon strictly
// contains the origin. Heights are in meters.
class RoomLayout {
 public:
  RoomLayout(std::vector<Vec2> corners_xz, double camera_height, double room_height);

  const std::vector<Vec2>& corners() const { return corners_; }
  double camera_height() const { return camera_height_; }
  double room_height() const { return room_height_; }

  // Empty string when valid, otherwise the first violated invariant.
  static std::string validate(const std::vector<Vec2>& corners_xz, double camera_height,
                              double room_height);

 private:
  std::vector<Vec2> corners_;
  double camera_height_;
  double room_height_;
};

// H x W x 3 equirectangular image, values in [0, 1], row-major interleaved.
struct Panorama {
  int height = 0;
  int width = 0;
  std::vector<double> pixels;

  Panorama() = default;
  Panorama(int h, int w) : height(h), width(w), pixels(static_cast<size_t>(h) * w * 3, 0.0) {}

  double& at(int v, int u, int c) { return pixels[(static_cast<size_t>(v) * width + u) * 3 + c]; }
  double at(int v, int u, int c) const {
    return pixels[(static_cast<size_t>(v) * width + u) * 3 + c];
  }
};

// Per-column supervision signal derived from a RoomLayout.
struct LayoutTarget {
  std::vector<double> depth;      // horizon depth per column, meters
  double height = 0.0;            // room height, meters
  std::vector<double> lat_floor;  // floor boundary latitude per column, < 0
  std::vector<double> lat_ceil;   // ceiling boundary latitude per column, > 0
  std::vector<int> corner_cols;   // sorted columns of wall-wall corners

  // Recovered from the floor boundary: tan(-lat_floor) * depth.
  double camera_height() const { return std::tan(-lat_floor[0]) * depth[0]; }
};

// Appearance knobs for the synthetic renderer.
struct SceneStyle {
  std::array<double, 3> floor_color{0.45, 0.35, 0.25};
  std::array<double, 3> ceil_color{0.85, 0.85, 0.80};
  std::vector<std::array<double, 3>> wall_colors;
  double lighting_gradient = 0.3;  // vertical brightness ramp strength
  double texture_amp = 0.08;       // sinusoidal texture amplitude
  double texture_freq = 2.0;       // spatial frequency, rad/m
  double texture_phase = 0.0;
  double edge_darken = 0.88;    // darkening of the boundary band (near-black line)
  double corner_darken = 0.35;  // darkening of wall-wall corner columns
  double noise_sigma = 0.003;   // additive Gaussian noise

  static SceneStyle random(Rng& rng, double noise_sigma);
};

// Room generator ranges. Extents are full side lengths.
struct GenConfig {
  double min_extent = 2.0;
  double max_extent = 8.0;
  double min_room_height = 2.4;
  double max_room_height = 3.5;
  double camera_height = 1.6;
  double l_shape_prob = 0.4;
  double camera_margin = 0.5;  // polygon erosion for camera placement
};

// --- polygon helpers -------------------------------------------------------

double polygon_area(const std::vector<Vec2>& pts);  // signed, CCW positive
bool point_in_polygon(const std::vector<Vec2>& pts, Vec2 p);
double point_to_polygon_distance(const std::vector<Vec2>& pts, Vec2 p);

struct RayHit {
  double t = 0.0;  // distance from origin, meters
  int edge = -1;   // index of the polygon edge hit
};

// First intersection of the ray from the origin along azimuth theta with the
// polygon boundary. The origin must lie inside the polygon.
RayHit polygon_ray_hit(const std::vector<Vec2>& pts, double theta);
inline double polygon_ray_distance(const std::vector<Vec2>& pts, double theta) {
  return polygon_ray_hit(pts, theta).t;
}

// --- layout operations -----------------------------------------------------

// Horizon depth per column: distance to the first wall in the floor plane.
std::vector<double> horizon_depth(const RoomLayout& layout, int w);

// Through-the-floor and through-the-ceiling boundary latitudes per column.
std::pair<std::vector<double>, std::vector<double>> boundary_latitudes(
    const std::vector<double>& depth, double camera_height, double room_height);

LayoutTarget target_from_layout(const RoomLayout& layout, int w);

// Deterministic per seed. Throws after repeated degenerate draws.
RoomLayout generate_room(std::uint64_t seed, const GenConfig& cfg = {});

// 0 = ceiling, 1 = wall, 2 = floor.
enum class SurfaceClass : std::uint8_t { Ceiling = 0, Wall = 1, Floor = 2 };
std::vector<std::uint8_t> classify_panorama(const RoomLayout& layout, int h, int w);

Panorama render_panorama(const RoomLayout& layout, const SceneStyle& style, int h, int w,
                         std::uint64_t seed);

// Geometric transforms. Stretch scales the floor plan axes, rotation is a
// planar rotation about the vertical axis restricted to quarter turns (the
// only rotations that keep a Manhattan layout Manhattan), flip mirrors x.
RoomLayout stretch_layout(const RoomLayout& layout, double k_x, double k_z);
RoomLayout rotate_layout(const RoomLayout& layout, double r);
RoomLayout flip_layout(const RoomLayout& layout);

std::vector<Vec2> depth_to_polygon(const std::vector<double>& depth);

}  // namespace panolayout
