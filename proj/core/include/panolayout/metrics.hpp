#pragma once

#include <utility>
#include <vector>

#include "panolayout/geometry.hpp"
#include "panolayout/model.hpp"

namespace panolayout {

struct MetricsReport {
  double iou3d = 0.0;
  double iou2d = 0.0;
  double corner_error_pct = 0.0;
  double pixel_error_pct = 0.0;
  double rmse = 0.0;
  double delta1 = 0.0;
  int n_samples = 0;
};

struct RasterConfig {
  int grid = 1024;      // rasterization grid per axis
  double expand = 0.05;  // bounding-box margin
};

// Floor-plan IoU of the two depth profiles, rasterized on a shared grid over
// the expanded union bounding box.
double iou2d(const std::vector<double>& pred_depth, const std::vector<double>& gt_depth,
             const RasterConfig& rc = {});

// Prism IoU; both rooms share the floor plane.
double iou3d(const std::vector<double>& pred_depth, double pred_height,
             const std::vector<double>& gt_depth, double gt_height, const RasterConfig& rc = {});

// Mean image-space distance between matched corner points (ceiling and floor
// point per corner column), as a percentage of the image diagonal.
double corner_error(const DecodedPrediction& pred, const LayoutTarget& gt, int h, int w);

// Percentage of pixels whose ceiling/wall/floor class differs.
double pixel_error(const DecodedPrediction& pred, const LayoutTarget& gt, int h, int w);

// delta1 counts columns with max(dp/dg, dg/dp) strictly below 1.25.
std::pair<double, double> rmse_delta1(const std::vector<double>& pred_depth,
                                      const std::vector<double>& gt_depth);

MetricsReport evaluate_sample(const DecodedPrediction& pred, const LayoutTarget& gt, int h, int w,
                              const RasterConfig& rc = {});

MetricsReport mean_report(const std::vector<MetricsReport>& reports);

}  // namespace panolayout
