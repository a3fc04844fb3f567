#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "panolayout/metrics.hpp"
#include "panolayout/selfcheck.hpp"

using namespace panolayout;

namespace {

std::vector<double> square_depth(double half_side, int w) {
  const RoomLayout sq = RoomLayout({{-half_side, -half_side},
                                    {half_side, -half_side},
                                    {half_side, half_side},
                                    {-half_side, half_side}},
                                   1.6, 2.8);
  return horizon_depth(sq, w);
}

// Synthetic constant-depth target (a cylinder room); valid input for the
// image-space metrics.
LayoutTarget constant_target(double depth, double cam_h, double room_h, int w,
                             std::vector<int> corner_cols) {
  LayoutTarget t;
  t.depth.assign(w, depth);
  t.height = room_h;
  auto lats = boundary_latitudes(t.depth, cam_h, room_h);
  t.lat_floor = std::move(lats.first);
  t.lat_ceil = std::move(lats.second);
  t.corner_cols = std::move(corner_cols);
  return t;
}

}  // namespace

TEST_CASE("floor-plan IoU basics") {
  const std::vector<double> d2 = square_depth(2.0, 256);
  CHECK(iou2d(d2, d2) > 0.999);

  // concentric squares with half-sides 1 and 2: area ratio 4/16
  const std::vector<double> d1 = square_depth(1.0, 256);
  CHECK(iou2d(d1, d2) == doctest::Approx(0.25).epsilon(0.04));

  // symmetry
  CHECK(iou2d(d1, d2) == doctest::Approx(iou2d(d2, d1)).epsilon(1e-12));
}

TEST_CASE("rasterized IoU matches analytic rectangles and tightens with the grid") {
  const CheckResult r = check_metric_oracles(25, 3);
  INFO(r.detail);
  CHECK(r.pass);

  // halving claim: worst error at 2048 is at most the error at 1024 (plus slack)
  Rng rng(5);
  double err1024 = 0.0, err2048 = 0.0;
  for (int i = 0; i < 8; ++i) {
    const double ax0 = -rng.uniform(1.0, 4.0), ax1 = rng.uniform(1.0, 4.0);
    const double az0 = -rng.uniform(1.0, 4.0), az1 = rng.uniform(1.0, 4.0);
    const double bx0 = -rng.uniform(1.0, 4.0), bx1 = rng.uniform(1.0, 4.0);
    const double bz0 = -rng.uniform(1.0, 4.0), bz1 = rng.uniform(1.0, 4.0);
    const RoomLayout ra({{ax0, az0}, {ax1, az0}, {ax1, az1}, {ax0, az1}}, 1.6, 2.8);
    const RoomLayout rb({{bx0, bz0}, {bx1, bz0}, {bx1, bz1}, {bx0, bz1}}, 1.6, 2.8);
    const std::vector<double> da = horizon_depth(ra, 512);
    const std::vector<double> db = horizon_depth(rb, 512);
    const double ix = std::min(ax1, bx1) - std::max(ax0, bx0);
    const double iz = std::min(az1, bz1) - std::max(az0, bz0);
    const double inter = std::max(0.0, ix) * std::max(0.0, iz);
    const double analytic =
        inter / ((ax1 - ax0) * (az1 - az0) + (bx1 - bx0) * (bz1 - bz0) - inter);
    RasterConfig rc1;
    RasterConfig rc2;
    rc2.grid = 2048;
    err1024 = std::max(err1024, std::abs(iou2d(da, db, rc1) - analytic));
    err2048 = std::max(err2048, std::abs(iou2d(da, db, rc2) - analytic));
  }
  CHECK(err2048 <= 0.55 * err1024 + 1e-4);
}

TEST_CASE("prism IoU") {
  const std::vector<double> d = square_depth(2.0, 256);
  CHECK(iou3d(d, 2.8, d, 2.8) > 0.999);
  CHECK(iou3d(d, 2.5, d, 3.0) == doctest::Approx(2.5 / 3.0).epsilon(0.005));

  const std::vector<double> d1 = square_depth(1.3, 256);
  CHECK(std::abs(iou3d(d1, 2.8, d, 2.8) - iou2d(d1, d)) < 1e-6);
}

TEST_CASE("corner error pinned values") {
  const int h = 64, w = 128;
  const double cam = 1.6, room = 2.8, depth = 3.0;
  const LayoutTarget gt = constant_target(depth, cam, room, w, {10, 40, 70, 100});

  DecodedPrediction perfect;
  perfect.depth.assign(w, depth);
  perfect.height = room;
  perfect.corner_score.assign(w, 0.0);
  for (int c : gt.corner_cols) perfect.corner_score[c] = 1.0;
  CHECK(corner_error(perfect, gt, h, w) < 1e-9);

  // move both boundary rows by exactly 5 px at every corner
  const double v_f = phi_to_row(gt.lat_floor[0], h);
  const double v_c = phi_to_row(gt.lat_ceil[0], h);
  const double lat_f2 = row_phi(v_f + 5.0, h);
  const double d2 = cam / std::tan(-lat_f2);
  const double lat_c2 = row_phi(v_c - 5.0, h);
  const double h2 = cam + d2 * std::tan(lat_c2);
  DecodedPrediction moved = perfect;
  moved.depth.assign(w, d2);
  moved.height = h2;
  const double expect = 5.0 / std::sqrt(64.0 * 64.0 + 128.0 * 128.0) * 100.0;
  CHECK(corner_error(moved, gt, h, w) == doctest::Approx(expect).epsilon(1e-6));
  CHECK(expect == doctest::Approx(3.4938).epsilon(1e-3));

  // a random score channel stays bounded by the normalization
  DecodedPrediction noisy = perfect;
  Rng rng(9);
  for (double& s : noisy.corner_score) s = rng.uniform();
  const double ce = corner_error(noisy, gt, h, w);
  CHECK(ce >= 0.0);
  CHECK(ce <= 100.0);
}

TEST_CASE("pixel error pinned values") {
  const int h = 64, w = 128;
  const double cam = 1.6;
  // floor boundary exactly between rows 40 and 41
  const double lat_f = row_phi(40.5, h);
  const double d_g = cam / std::tan(-lat_f);
  const double lat_c = row_phi(20.5, h);
  const double h_g = cam + d_g * std::tan(lat_c);
  const LayoutTarget gt = constant_target(d_g, cam, h_g, w, {0});

  DecodedPrediction perfect;
  perfect.depth.assign(w, d_g);
  perfect.height = h_g;
  perfect.corner_score.assign(w, 0.5);
  CHECK(pixel_error(perfect, gt, h, w) == 0.0);

  // push the floor boundary one full row down; the ceiling stays put
  const double lat_f2 = row_phi(41.5, h);
  const double d_p = cam / std::tan(-lat_f2);
  DecodedPrediction off;
  off.depth.assign(w, d_p);
  off.height = cam + d_p * std::tan(lat_c);
  off.corner_score.assign(w, 0.5);
  CHECK(pixel_error(off, gt, h, w) == doctest::Approx(100.0 / 64.0).epsilon(1e-9));
}

TEST_CASE("rmse and the strict delta1 threshold") {
  const std::vector<double> gt(32, 2.0);
  const auto same = rmse_delta1(gt, gt);
  CHECK(same.first == 0.0);
  CHECK(same.second == 1.0);

  std::vector<double> scaled(32, 2.6);
  const auto over = rmse_delta1(scaled, gt);  // ratio 1.3 >= 1.25
  CHECK(over.second == 0.0);

  const std::vector<double> exact(32, 2.5);  // ratio exactly 1.25 is excluded
  const auto edge = rmse_delta1(exact, gt);
  CHECK(edge.first == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(edge.second == 0.0);

  const std::vector<double> inside(32, 2.49);
  CHECK(rmse_delta1(inside, gt).second == 1.0);
}

TEST_CASE("metrics are invariant under simultaneous column rotation") {
  const int h = 64, w = 128;
  const RoomLayout room = generate_room(55);
  const LayoutTarget gt = target_from_layout(room, w);
  DecodedPrediction pred;
  Rng rng(3);
  pred.depth.resize(w);
  pred.corner_score.resize(w);
  for (int u = 0; u < w; ++u) {
    pred.depth[u] = gt.depth[u] * rng.uniform(0.9, 1.1);
    pred.corner_score[u] = rng.uniform();
  }
  pred.height = gt.height * 1.03;

  const int n = w / 4;  // quarter turn keeps the raster grid aligned
  LayoutTarget gt_rot = gt;
  DecodedPrediction pred_rot = pred;
  for (int u = 0; u < w; ++u) {
    gt_rot.depth[(u + n) % w] = gt.depth[u];
    gt_rot.lat_floor[(u + n) % w] = gt.lat_floor[u];
    gt_rot.lat_ceil[(u + n) % w] = gt.lat_ceil[u];
    pred_rot.depth[(u + n) % w] = pred.depth[u];
    pred_rot.corner_score[(u + n) % w] = pred.corner_score[u];
  }
  gt_rot.corner_cols.clear();
  for (int c : gt.corner_cols) gt_rot.corner_cols.push_back((c + n) % w);
  std::sort(gt_rot.corner_cols.begin(), gt_rot.corner_cols.end());

  CHECK(pixel_error(pred_rot, gt_rot, h, w) == doctest::Approx(pixel_error(pred, gt, h, w)).epsilon(1e-12));
  const auto a = rmse_delta1(pred.depth, gt.depth);
  const auto b = rmse_delta1(pred_rot.depth, gt_rot.depth);
  CHECK(a.first == doctest::Approx(b.first).epsilon(1e-12));
  CHECK(a.second == b.second);
  CHECK(corner_error(pred_rot, gt_rot, h, w) ==
        doctest::Approx(corner_error(pred, gt, h, w)).epsilon(1e-9));
  CHECK(iou2d(pred_rot.depth, gt_rot.depth) ==
        doctest::Approx(iou2d(pred.depth, gt.depth)).epsilon(1e-3));
}

TEST_CASE("degenerate polygons report zero IoU") {
  std::vector<double> tiny(64, 1e-4);
  std::vector<double> normal = square_depth(2.0, 64);
  CHECK(iou2d(tiny, normal) == 0.0);
}
