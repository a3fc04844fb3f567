#include "panolayout/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace panolayout {

namespace {

struct Box {
  double x0, x1, z0, z1;
};

Box bounding_box(const std::vector<Vec2>& a, const std::vector<Vec2>& b, double expand) {
  Box box{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
          std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const std::vector<Vec2>* poly : {&a, &b}) {
    for (const Vec2& p : *poly) {
      box.x0 = std::min(box.x0, p.x);
      box.x1 = std::max(box.x1, p.x);
      box.z0 = std::min(box.z0, p.z);
      box.z1 = std::max(box.z1, p.z);
    }
  }
  const double mx = 0.5 * expand * (box.x1 - box.x0);
  const double mz = 0.5 * expand * (box.z1 - box.z0);
  box.x0 -= mx;
  box.x1 += mx;
  box.z0 -= mz;
  box.z1 += mz;
  return box;
}

// x-crossings of the polygon boundary with the horizontal line z = zc,
// paired into filled spans (even-odd rule).
void row_spans(const std::vector<Vec2>& poly, double zc, std::vector<double>& spans) {
  spans.clear();
  const size_t n = poly.size();
  for (size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[j];
    if ((a.z > zc) != (b.z > zc)) {
      spans.push_back(a.x + (zc - a.z) * (b.x - a.x) / (b.z - a.z));
    }
  }
  std::sort(spans.begin(), spans.end());
}

// Number of pixel centers x0 + (j + 0.5) dx, j in [0, grid), inside [xa, xb).
std::int64_t centers_in(double xa, double xb, double x0, double dx, int grid) {
  const std::int64_t lo =
      std::max<std::int64_t>(0, static_cast<std::int64_t>(std::ceil((xa - x0) / dx - 0.5)));
  const std::int64_t hi = std::min<std::int64_t>(
      grid - 1, static_cast<std::int64_t>(std::ceil((xb - x0) / dx - 0.5)) - 1);
  return std::max<std::int64_t>(0, hi - lo + 1);
}

struct RasterAreas {
  double a = 0.0, b = 0.0, inter = 0.0;  // m^2
  bool degenerate = false;
};

RasterAreas raster_areas(const std::vector<Vec2>& pa, const std::vector<Vec2>& pb,
                         const RasterConfig& rc) {
  RasterAreas out;
  if (std::abs(polygon_area(pa)) < 1e-6 || std::abs(polygon_area(pb)) < 1e-6) {
    std::fprintf(stderr, "iou: degenerate polygon (area < 1e-6 m^2)\n");
    out.degenerate = true;
    return out;
  }
  const Box box = bounding_box(pa, pb, rc.expand);
  const double dx = (box.x1 - box.x0) / rc.grid;
  const double dz = (box.z1 - box.z0) / rc.grid;
  const double pixel_area = dx * dz;

  std::int64_t count_a = 0, count_b = 0, count_i = 0;
  std::vector<double> sa, sb;
  for (int r = 0; r < rc.grid; ++r) {
    const double zc = box.z0 + (r + 0.5) * dz;
    row_spans(pa, zc, sa);
    row_spans(pb, zc, sb);
    for (size_t i = 0; i + 1 < sa.size(); i += 2) {
      count_a += centers_in(sa[i], sa[i + 1], box.x0, dx, rc.grid);
    }
    for (size_t i = 0; i + 1 < sb.size(); i += 2) {
      count_b += centers_in(sb[i], sb[i + 1], box.x0, dx, rc.grid);
    }
    for (size_t i = 0; i + 1 < sa.size(); i += 2) {
      for (size_t j = 0; j + 1 < sb.size(); j += 2) {
        const double lo = std::max(sa[i], sb[j]);
        const double hi = std::min(sa[i + 1], sb[j + 1]);
        if (lo < hi) count_i += centers_in(lo, hi, box.x0, dx, rc.grid);
      }
    }
  }
  out.a = count_a * pixel_area;
  out.b = count_b * pixel_area;
  out.inter = count_i * pixel_area;
  return out;
}

}  // namespace

double iou2d(const std::vector<double>& pred_depth, const std::vector<double>& gt_depth,
             const RasterConfig& rc) {
  const RasterAreas ar = raster_areas(depth_to_polygon(pred_depth), depth_to_polygon(gt_depth), rc);
  if (ar.degenerate) return 0.0;
  const double uni = ar.a + ar.b - ar.inter;
  return uni > 0.0 ? ar.inter / uni : 0.0;
}

double iou3d(const std::vector<double>& pred_depth, double pred_height,
             const std::vector<double>& gt_depth, double gt_height, const RasterConfig& rc) {
  if (!(pred_height > 0.0 && gt_height > 0.0)) throw std::invalid_argument("heights must be > 0");
  const RasterAreas ar = raster_areas(depth_to_polygon(pred_depth), depth_to_polygon(gt_depth), rc);
  if (ar.degenerate) return 0.0;
  const double v_inter = ar.inter * std::min(pred_height, gt_height);
  const double v_union = ar.a * pred_height + ar.b * gt_height - v_inter;
  return v_union > 0.0 ? v_inter / v_union : 0.0;
}

namespace {

struct ImagePoint {
  double u, v;
};

double point_distance(const ImagePoint& a, const ImagePoint& b, int w) {
  double du = std::abs(a.u - b.u);
  du = std::min(du, w - du);  // columns wrap
  const double dv = a.v - b.v;
  return std::sqrt(du * du + dv * dv);
}

// Top-k peak columns of the corner score under circular non-maximum
// suppression with a 5-column window.
std::vector<int> corner_peaks(const std::vector<double>& score, int k) {
  const int w = static_cast<int>(score.size());
  std::vector<int> order(w);
  for (int u = 0; u < w; ++u) order[u] = u;
  std::stable_sort(order.begin(), order.end(),
                   [&score](int a, int b) { return score[a] > score[b]; });
  std::vector<int> picked;
  for (int u : order) {
    if (static_cast<int>(picked.size()) == k) break;
    bool suppressed = false;
    for (int p : picked) {
      int du = std::abs(u - p);
      du = std::min(du, w - du);
      if (du <= 2) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) picked.push_back(u);
  }
  return picked;
}

}  // namespace

double corner_error(const DecodedPrediction& pred, const LayoutTarget& gt, int h, int w) {
  if (gt.corner_cols.empty()) throw std::invalid_argument("corner_error: no ground-truth corners");
  const int k = static_cast<int>(gt.corner_cols.size());
  const double cam_h = gt.camera_height();
  const double diag = std::sqrt(static_cast<double>(h) * h + static_cast<double>(w) * w);

  std::vector<ImagePoint> gt_pts, pred_pts;
  for (int c : gt.corner_cols) {
    gt_pts.push_back({static_cast<double>(c), phi_to_row(gt.lat_ceil[c], h)});
    gt_pts.push_back({static_cast<double>(c), phi_to_row(gt.lat_floor[c], h)});
  }
  for (int u : corner_peaks(pred.corner_score, k)) {
    const double d = pred.depth[u];
    const double lat_c = std::atan((pred.height - cam_h) / d);
    const double lat_f = std::atan(-cam_h / d);
    pred_pts.push_back({static_cast<double>(u), phi_to_row(lat_c, h)});
    pred_pts.push_back({static_cast<double>(u), phi_to_row(lat_f, h)});
  }

  // Greedy globally-nearest matching; unmatched ground-truth points (when
  // fewer than k peaks exist) count the worst case, one diagonal each.
  std::vector<bool> used_gt(gt_pts.size(), false), used_pred(pred_pts.size(), false);
  double total = 0.0;
  const size_t n_match = std::min(gt_pts.size(), pred_pts.size());
  for (size_t m = 0; m < n_match; ++m) {
    double best = std::numeric_limits<double>::infinity();
    size_t bi = 0, bj = 0;
    for (size_t i = 0; i < gt_pts.size(); ++i) {
      if (used_gt[i]) continue;
      for (size_t j = 0; j < pred_pts.size(); ++j) {
        if (used_pred[j]) continue;
        const double d = point_distance(gt_pts[i], pred_pts[j], w);
        if (d < best) {
          best = d;
          bi = i;
          bj = j;
        }
      }
    }
    used_gt[bi] = true;
    used_pred[bj] = true;
    total += best;
  }
  total += diag * static_cast<double>(gt_pts.size() - n_match);
  return total / static_cast<double>(gt_pts.size()) / diag * 100.0;
}

double pixel_error(const DecodedPrediction& pred, const LayoutTarget& gt, int h, int w) {
  if (static_cast<int>(pred.depth.size()) != w || static_cast<int>(gt.depth.size()) != w) {
    throw std::invalid_argument("pixel_error: width mismatch");
  }
  const double cam_h = gt.camera_height();
  std::vector<double> lat_f(w), lat_c(w);
  for (int u = 0; u < w; ++u) {
    lat_f[u] = std::atan(-cam_h / pred.depth[u]);
    lat_c[u] = std::atan((pred.height - cam_h) / pred.depth[u]);
  }
  std::int64_t wrong = 0;
  for (int v = 0; v < h; ++v) {
    const double phi = row_phi(v, h);
    for (int u = 0; u < w; ++u) {
      const int cp = phi > lat_c[u] ? 0 : (phi < lat_f[u] ? 2 : 1);
      const int cg = phi > gt.lat_ceil[u] ? 0 : (phi < gt.lat_floor[u] ? 2 : 1);
      wrong += cp != cg;
    }
  }
  return 100.0 * static_cast<double>(wrong) / (static_cast<double>(h) * w);
}

std::pair<double, double> rmse_delta1(const std::vector<double>& pred_depth,
                                      const std::vector<double>& gt_depth) {
  if (pred_depth.size() != gt_depth.size() || pred_depth.empty()) {
    throw std::invalid_argument("rmse_delta1: width mismatch");
  }
  double sq = 0.0;
  std::int64_t ok = 0;
  for (size_t u = 0; u < pred_depth.size(); ++u) {
    const double dp = pred_depth[u], dg = gt_depth[u];
    if (!(dp > 0.0 && dg > 0.0)) throw std::invalid_argument("rmse_delta1: non-positive depth");
    const double e = dp - dg;
    sq += e * e;
    const double ratio = std::max(dp / dg, dg / dp);
    ok += ratio < 1.25;
  }
  const double n = static_cast<double>(pred_depth.size());
  return {std::sqrt(sq / n), static_cast<double>(ok) / n};
}

MetricsReport evaluate_sample(const DecodedPrediction& pred, const LayoutTarget& gt, int h, int w,
                              const RasterConfig& rc) {
  MetricsReport r;
  r.iou2d = iou2d(pred.depth, gt.depth, rc);
  r.iou3d = iou3d(pred.depth, pred.height, gt.depth, gt.height, rc);
  r.corner_error_pct = corner_error(pred, gt, h, w);
  r.pixel_error_pct = pixel_error(pred, gt, h, w);
  const auto rd = rmse_delta1(pred.depth, gt.depth);
  r.rmse = rd.first;
  r.delta1 = rd.second;
  r.n_samples = 1;
  return r;
}

MetricsReport mean_report(const std::vector<MetricsReport>& reports) {
  MetricsReport acc;
  if (reports.empty()) return acc;
  for (const MetricsReport& r : reports) {
    acc.iou3d += r.iou3d;
    acc.iou2d += r.iou2d;
    acc.corner_error_pct += r.corner_error_pct;
    acc.pixel_error_pct += r.pixel_error_pct;
    acc.rmse += r.rmse;
    acc.delta1 += r.delta1;
    acc.n_samples += r.n_samples;
  }
  const double n = static_cast<double>(reports.size());
  acc.iou3d /= n;
  acc.iou2d /= n;
  acc.corner_error_pct /= n;
  acc.pixel_error_pct /= n;
  acc.rmse /= n;
  acc.delta1 /= n;
  return acc;
}

}  // namespace panolayout
