#include "panolayout/geometry.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace panolayout {

namespace {

constexpr double kQuarterTurnTol = 1e-9;

double seg_point_distance(Vec2 a, Vec2 b, Vec2 p) {
  const double dx = b.x - a.x, dz = b.z - a.z;
  const double len2 = dx * dx + dz * dz;
  double t = len2 > 0.0 ? ((p.x - a.x) * dx + (p.z - a.z) * dz) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double ex = a.x + t * dx - p.x, ez = a.z + t * dz - p.z;
  return std::sqrt(ex * ex + ez * ez);
}

// Proper-crossing test for two axis-aligned segments, ignoring shared
// endpoints of adjacent edges (callers skip adjacency).
bool manhattan_segments_cross(Vec2 a0, Vec2 a1, Vec2 b0, Vec2 b1) {
  const bool a_vert = a0.x == a1.x;
  const bool b_vert = b0.x == b1.x;
  auto lo = [](double u, double v) { return std::min(u, v); };
  auto hi = [](double u, double v) { return std::max(u, v); };
  if (a_vert != b_vert) {
    const Vec2 v0 = a_vert ? a0 : b0, v1 = a_vert ? a1 : b1;
    const Vec2 h0 = a_vert ? b0 : a0, h1 = a_vert ? b1 : a1;
    return v0.x > lo(h0.x, h1.x) && v0.x < hi(h0.x, h1.x) && h0.z > lo(v0.z, v1.z) &&
           h0.z < hi(v0.z, v1.z);
  }
  if (a_vert) {  // both vertical: overlap only if same x and z-ranges overlap
    return a0.x == b0.x && lo(a0.z, a1.z) < hi(b0.z, b1.z) && lo(b0.z, b1.z) < hi(a0.z, a1.z);
  }
  return a0.z == b0.z && lo(a0.x, a1.x) < hi(b0.x, b1.x) && lo(b0.x, b1.x) < hi(a0.x, a1.x);
}

}  // namespace

std::string RoomLayout::validate(const std::vector<Vec2>& corners, double camera_height,
                                 double room_height) {
  const size_t n = corners.size();
  if (n < 4) return "fewer than 4 vertices";
  if (n % 2 != 0) return "odd vertex count";
  if (!(camera_height > 0.0)) return "camera height not positive";
  if (!(camera_height < room_height)) return "camera height not below room height";
  for (const Vec2& c : corners) {
    if (!std::isfinite(c.x) || !std::isfinite(c.z)) return "non-finite vertex";
  }
  for (size_t i = 0; i < n; ++i) {
    const Vec2& a = corners[i];
    const Vec2& b = corners[(i + 1) % n];
    const bool same_x = a.x == b.x;
    const bool same_z = a.z == b.z;
    if (same_x == same_z) return "edge not axis-aligned (or zero length)";
  }
  if (polygon_area(corners) <= 0.0) return "vertices not counter-clockwise";
  // Simplicity: no two non-adjacent edges may touch.
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      if (j == i + 1 || (i == 0 && j == n - 1)) continue;
      if (manhattan_segments_cross(corners[i], corners[(i + 1) % n], corners[j],
                                   corners[(j + 1) % n])) {
        return "self-intersecting polygon";
      }
    }
  }
  if (!point_in_polygon(corners, Vec2{0.0, 0.0})) return "origin outside polygon";
  if (point_to_polygon_distance(corners, Vec2{0.0, 0.0}) <= 1e-9) return "origin on boundary";
  return {};
}

RoomLayout::RoomLayout(std::vector<Vec2> corners_xz, double camera_height, double room_height)
    : corners_(std::move(corners_xz)), camera_height_(camera_height), room_height_(room_height) {
  const std::string err = validate(corners_, camera_height_, room_height_);
  if (!err.empty()) throw std::invalid_argument("invalid room layout: " + err);
}

double polygon_area(const std::vector<Vec2>& pts) {
  double acc = 0.0;
  const size_t n = pts.size();
  for (size_t i = 0; i < n; ++i) {
    const Vec2& a = pts[i];
    const Vec2& b = pts[(i + 1) % n];
    acc += a.x * b.z - b.x * a.z;
  }
  return 0.5 * acc;
}

bool point_in_polygon(const std::vector<Vec2>& pts, Vec2 p) {
  bool inside = false;
  const size_t n = pts.size();
  for (size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2& a = pts[i];
    const Vec2& b = pts[j];
    if ((a.z > p.z) != (b.z > p.z)) {
      const double x_cross = a.x + (p.z - a.z) * (b.x - a.x) / (b.z - a.z);
      if (p.x < x_cross) inside = !inside;
    }
  }
  return inside;
}

double point_to_polygon_distance(const std::vector<Vec2>& pts, Vec2 p) {
  double best = std::numeric_limits<double>::infinity();
  const size_t n = pts.size();
  for (size_t i = 0; i < n; ++i) {
    best = std::min(best, seg_point_distance(pts[i], pts[(i + 1) % n], p));
  }
  return best;
}

RayHit polygon_ray_hit(const std::vector<Vec2>& pts, double theta) {
  const double dx = std::cos(theta);
  const double dz = std::sin(theta);
  RayHit best;
  best.t = std::numeric_limits<double>::infinity();
  const size_t n = pts.size();
  for (size_t i = 0; i < n; ++i) {
    const Vec2& a = pts[i];
    const Vec2& b = pts[(i + 1) % n];
    const double ex = b.x - a.x, ez = b.z - a.z;
    const double denom = dx * ez - dz * ex;
    if (denom == 0.0) continue;  // parallel
    const double t = (a.x * ez - a.z * ex) / denom;
    const double s = (a.x * dz - a.z * dx) / denom;
    // slack on s keeps rays that pass exactly through a vertex from slipping
    // between the two adjacent edges
    if (t > 0.0 && s >= -1e-9 && s <= 1.0 + 1e-9 && t < best.t) {
      best.t = t;
      best.edge = static_cast<int>(i);
    }
  }
  if (!std::isfinite(best.t)) {
    throw std::runtime_error("ray escaped polygon; origin not inside?");
  }
  return best;
}

std::vector<double> horizon_depth(const RoomLayout& layout, int w) {
  std::vector<double> depth(w);
  for (int u = 0; u < w; ++u) {
    depth[u] = polygon_ray_hit(layout.corners(), col_theta(u, w)).t;
  }
  return depth;
}

std::pair<std::vector<double>, std::vector<double>> boundary_latitudes(
    const std::vector<double>& depth, double camera_height, double room_height) {
  std::vector<double> lat_floor(depth.size()), lat_ceil(depth.size());
  for (size_t u = 0; u < depth.size(); ++u) {
    if (!(depth[u] > 0.0)) throw std::invalid_argument("non-positive depth");
    lat_floor[u] = std::atan(-camera_height / depth[u]);
    lat_ceil[u] = std::atan((room_height - camera_height) / depth[u]);
  }
  return {std::move(lat_floor), std::move(lat_ceil)};
}

LayoutTarget target_from_layout(const RoomLayout& layout, int w) {
  LayoutTarget t;
  t.depth = horizon_depth(layout, w);
  t.height = layout.room_height();
  auto lats = boundary_latitudes(t.depth, layout.camera_height(), layout.room_height());
  t.lat_floor = std::move(lats.first);
  t.lat_ceil = std::move(lats.second);
  for (const Vec2& c : layout.corners()) {
    const double theta = std::atan2(c.z, c.x);
    int u = static_cast<int>(std::lround(theta_to_col(theta, w)));
    u = ((u % w) + w) % w;
    t.corner_cols.push_back(u);
  }
  std::sort(t.corner_cols.begin(), t.corner_cols.end());
  return t;
}

namespace {

std::vector<Vec2> make_footprint(Rng& rng, const GenConfig& cfg, bool l_shape) {
  const double w = rng.uniform(cfg.min_extent, cfg.max_extent);
  const double d = rng.uniform(cfg.min_extent, cfg.max_extent);
  if (!l_shape) {
    return {{0, 0}, {w, 0}, {w, d}, {0, d}};
  }
  // Cut the (w, d) corner. Both remaining arms stay wide enough for the
  // eroded camera region.
  const double min_arm = 2.0 * cfg.camera_margin + 0.2;
  const double cut_w = rng.uniform(0.3 * w, std::max(0.3 * w, w - min_arm));
  const double cut_d = rng.uniform(0.3 * d, std::max(0.3 * d, d - min_arm));
  return {{0, 0}, {w, 0}, {w, d - cut_d}, {w - cut_w, d - cut_d}, {w - cut_w, d}, {0, d}};
}

}  // namespace

RoomLayout generate_room(std::uint64_t seed, const GenConfig& cfg) {
  Rng rng(seed);
  int total_attempts = 0;
  while (true) {
    const bool l_shape = rng.bernoulli(cfg.l_shape_prob);
    std::vector<Vec2> poly = make_footprint(rng, cfg, l_shape);
    const double room_h = rng.uniform(cfg.min_room_height, cfg.max_room_height);

    double max_x = 0.0, max_z = 0.0;
    for (const Vec2& p : poly) {
      max_x = std::max(max_x, p.x);
      max_z = std::max(max_z, p.z);
    }
    for (int attempt = 0; attempt < 100; ++attempt) {
      if (++total_attempts > 1000) {
        throw std::runtime_error("generate_room: no valid camera placement after 1000 attempts");
      }
      const Vec2 cam{rng.uniform(cfg.camera_margin, max_x - cfg.camera_margin),
                     rng.uniform(cfg.camera_margin, max_z - cfg.camera_margin)};
      if (!point_in_polygon(poly, cam)) continue;
      if (point_to_polygon_distance(poly, cam) < cfg.camera_margin) continue;
      std::vector<Vec2> centered(poly.size());
      for (size_t i = 0; i < poly.size(); ++i) {
        centered[i] = Vec2{poly[i].x - cam.x, poly[i].z - cam.z};
      }
      if (!RoomLayout::validate(centered, cfg.camera_height, room_h).empty()) continue;
      return RoomLayout(std::move(centered), cfg.camera_height, room_h);
    }
  }
}

SceneStyle SceneStyle::random(Rng& rng, double noise_sigma) {
  // Color/shade/texture ranges keep base*shade*tex below 1, so renders never
  // saturate; a clipped region would turn histogram equalization into a huge
  // noise amplifier there.
  SceneStyle s;
  auto color = [&rng](double lo, double hi) {
    return std::array<double, 3>{rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(lo, hi)};
  };
  // Distinct luminance bands per surface (dark floor, mid walls, bright
  // ceiling) keep the floor/wall/ceiling classes separable in value even
  // after shading and texture.
  s.floor_color = color(0.15, 0.30);
  s.ceil_color = color(0.68, 0.80);
  s.wall_colors.clear();
  const int n_walls = 8;  // cycled by edge index
  for (int i = 0; i < n_walls; ++i) s.wall_colors.push_back(color(0.38, 0.58));
  s.lighting_gradient = rng.uniform(0.1, 0.25);
  s.texture_amp = rng.uniform(0.04, 0.08);
  s.texture_freq = rng.uniform(1.0, 3.0);
  s.texture_phase = rng.uniform(0.0, 2.0 * M_PI);
  s.edge_darken = rng.uniform(0.85, 0.93);
  s.corner_darken = rng.uniform(0.3, 0.4);
  s.noise_sigma = noise_sigma;
  return s;
}

std::vector<std::uint8_t> classify_panorama(const RoomLayout& layout, int h, int w) {
  const std::vector<double> depth = horizon_depth(layout, w);
  auto lats = boundary_latitudes(depth, layout.camera_height(), layout.room_height());
  std::vector<std::uint8_t> cls(static_cast<size_t>(h) * w);
  for (int v = 0; v < h; ++v) {
    const double phi = row_phi(v, h);
    for (int u = 0; u < w; ++u) {
      SurfaceClass c = SurfaceClass::Wall;
      if (phi > lats.second[u]) {
        c = SurfaceClass::Ceiling;
      } else if (phi < lats.first[u]) {
        c = SurfaceClass::Floor;
      }
      cls[static_cast<size_t>(v) * w + u] = static_cast<std::uint8_t>(c);
    }
  }
  return cls;
}

Panorama render_panorama(const RoomLayout& layout, const SceneStyle& style, int h, int w,
                         std::uint64_t seed) {
  if (w % 2 != 0) throw std::invalid_argument("panorama width must be even");
  const double cam_h = layout.camera_height();
  const double ceil_h = layout.room_height() - cam_h;

  std::vector<double> depth(w);
  std::vector<int> wall_id(w);
  for (int u = 0; u < w; ++u) {
    const RayHit hit = polygon_ray_hit(layout.corners(), col_theta(u, w));
    depth[u] = hit.t;
    wall_id[u] = hit.edge;
  }
  auto lats = boundary_latitudes(depth, cam_h, layout.room_height());
  const std::vector<double>& lat_floor = lats.first;
  const std::vector<double>& lat_ceil = lats.second;

  Panorama img(h, w);
  const double f = style.texture_freq;
  for (int v = 0; v < h; ++v) {
    const double phi = row_phi(v, h);
    const double tan_phi = std::tan(phi);
    const double shade = 1.0 + style.lighting_gradient * (0.5 - static_cast<double>(v) / (h - 1));
    for (int u = 0; u < w; ++u) {
      const double theta = col_theta(u, w);
      const std::array<double, 3>* base;
      double hx, hz, hy;  // hit point, meters (y up, floor at -cam_h)
      if (phi > lat_ceil[u]) {
        const double hor = ceil_h / tan_phi;
        base = &style.ceil_color;
        hx = hor * std::cos(theta);
        hz = hor * std::sin(theta);
        hy = ceil_h;
      } else if (phi < lat_floor[u]) {
        const double hor = cam_h / -tan_phi;
        base = &style.floor_color;
        hx = hor * std::cos(theta);
        hz = hor * std::sin(theta);
        hy = -cam_h;
      } else {
        base = &style.wall_colors[wall_id[u] % style.wall_colors.size()];
        hx = depth[u] * std::cos(theta);
        hz = depth[u] * std::sin(theta);
        hy = depth[u] * tan_phi;
      }
      const double tex =
          1.0 + style.texture_amp * std::sin(f * hx + style.texture_phase) *
                    std::sin(f * hz + 0.7 * style.texture_phase + 1.3) * std::cos(0.5 * f * hy);

      // Boundary bands: one pixel around the floor/ceiling curves, and wall
      // pixels at columns where the wall identity changes (room corners).
      // The two compound, so the band stays visible inside a corner stripe.
      double darken = 1.0;
      const double v_floor = phi_to_row(lat_floor[u], h);
      const double v_ceil = phi_to_row(lat_ceil[u], h);
      const double dv = static_cast<double>(v);
      if (std::abs(dv - v_floor) <= 0.5 || std::abs(dv - v_ceil) <= 0.5) {
        darken *= 1.0 - style.edge_darken;
      }
      if (phi <= lat_ceil[u] && phi >= lat_floor[u]) {
        const int next = (u + 1) % w;
        const int prev = (u - 1 + w) % w;
        if (wall_id[u] != wall_id[next] || wall_id[u] != wall_id[prev]) {
          darken *= 1.0 - style.corner_darken;
        }
      }

      for (int c = 0; c < 3; ++c) {
        img.at(v, u, c) = (*base)[c] * shade * tex * darken;
      }
    }
  }

  if (style.noise_sigma > 0.0) {
    Rng noise(seed);
    for (double& p : img.pixels) p += style.noise_sigma * noise.normal();
  }
  for (double& p : img.pixels) p = std::clamp(p, 0.0, 1.0);
  return img;
}

RoomLayout stretch_layout(const RoomLayout& layout, double k_x, double k_z) {
  if (!(k_x >= 0.5 && k_x <= 2.0 && k_z >= 0.5 && k_z <= 2.0)) {
    throw std::invalid_argument("stretch factors must lie in [0.5, 2]");
  }
  std::vector<Vec2> pts(layout.corners().size());
  for (size_t i = 0; i < pts.size(); ++i) {
    pts[i] = Vec2{layout.corners()[i].x * k_x, layout.corners()[i].z * k_z};
  }
  return RoomLayout(std::move(pts), layout.camera_height(), layout.room_height());
}

RoomLayout rotate_layout(const RoomLayout& layout, double r) {
  if (!(r >= 0.0 && r < 2.0 * M_PI)) throw std::invalid_argument("rotation outside [0, 2*pi)");
  const double quarter = r / (M_PI / 2.0);
  const int q = static_cast<int>(std::lround(quarter));
  if (std::abs(quarter - q) > kQuarterTurnTol) {
    throw std::invalid_argument("rotation must be a quarter-turn multiple to stay Manhattan");
  }
  std::vector<Vec2> pts(layout.corners().size());
  for (size_t i = 0; i < pts.size(); ++i) {
    Vec2 p = layout.corners()[i];
    switch (q % 4) {
      case 0: break;
      case 1: p = Vec2{-p.z, p.x}; break;
      case 2: p = Vec2{-p.x, -p.z}; break;
      case 3: p = Vec2{p.z, -p.x}; break;
    }
    pts[i] = p;
  }
  return RoomLayout(std::move(pts), layout.camera_height(), layout.room_height());
}

RoomLayout flip_layout(const RoomLayout& layout) {
  // A left-right image flip maps azimuth theta to -theta, which mirrors the
  // floor plan across the x axis. Vertex order is reversed to stay CCW.
  std::vector<Vec2> pts;
  pts.reserve(layout.corners().size());
  for (auto it = layout.corners().rbegin(); it != layout.corners().rend(); ++it) {
    pts.push_back(Vec2{it->x, -it->z});
  }
  return RoomLayout(std::move(pts), layout.camera_height(), layout.room_height());
}

std::vector<Vec2> depth_to_polygon(const std::vector<double>& depth) {
  const int w = static_cast<int>(depth.size());
  std::vector<Vec2> pts(w);
  for (int u = 0; u < w; ++u) {
    if (!(depth[u] > 0.0)) throw std::invalid_argument("non-positive depth");
    const double theta = col_theta(u, w);
    pts[u] = Vec2{depth[u] * std::cos(theta), depth[u] * std::sin(theta)};
  }
  return pts;
}

}  // namespace panolayout
