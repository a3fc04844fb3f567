#pragma once

#include <cstdint>
#include <vector>

#include "panolayout/geometry.hpp"
#include "panolayout/model.hpp"
#include "panolayout/tape.hpp"

namespace panolayout {

struct LossWeights {
  double depth = 0.9;
  double height = 0.1;
  double normal_grad = 1.0;  // applied to the normal and gradient terms
};

// Consistency-weight ramp: lambda(i) = exp(-5 (1 - i/I)^2) for i <= I, then 1.
struct RampSchedule {
  std::int64_t ramp_end = 1;  // I
  std::int64_t total_iters = 1;

  static RampSchedule fraction(double frac, std::int64_t total_iters);
};

double ramp_weight(std::int64_t i, const RampSchedule& sched);

// l_sup + lambda * l_con
double total_loss(double l_sup, double l_con, double lambda);

// Differentiable losses against fixed targets. Depth and height are L1;
// the normal term is the cosine distance between floor-plan edge normals;
// the gradient term is L1 on circular first differences of depth.
nn::Value loss_depth(nn::Tape& t, nn::Value pred_depth, const std::vector<double>& target);
nn::Value loss_height(nn::Tape& t, nn::Value pred_height, double target);
nn::Value loss_normal(nn::Tape& t, nn::Value pred_depth, const std::vector<double>& target);
nn::Value loss_gradient(nn::Tape& t, nn::Value pred_depth, const std::vector<double>& target);

nn::Value composite_loss(nn::Tape& t, const Prediction& pred,
                         const std::vector<double>& target_depth, double target_height,
                         const LossWeights& w);
nn::Value supervised_loss(nn::Tape& t, const Prediction& pred, const LayoutTarget& target,
                          const LossWeights& w);

// Composite loss of both student branches against the teacher's decoded
// outputs. z_tea must carry no gradient graph.
nn::Value consistency_loss(nn::Tape& t, const Prediction& z_tea, const Prediction& z_feat,
                           const Prediction& z_img, const LossWeights& w);

// Plain-number variants, evaluated on a local tape.
double loss_depth(const std::vector<double>& pred, const std::vector<double>& target);
double loss_height(double pred, double target);
double loss_normal(const std::vector<double>& pred, const std::vector<double>& target);
double loss_gradient(const std::vector<double>& pred, const std::vector<double>& target);
double composite_loss(const DecodedPrediction& pred, const std::vector<double>& target_depth,
                      double target_height, const LossWeights& w);

}  // namespace panolayout
