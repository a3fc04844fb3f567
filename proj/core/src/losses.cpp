#include "panolayout/losses.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace panolayout {

RampSchedule RampSchedule::fraction(double frac, std::int64_t total_iters) {
  if (total_iters <= 0) throw std::invalid_argument("total_iters must be positive");
  RampSchedule s;
  s.total_iters = total_iters;
  s.ramp_end = std::max<std::int64_t>(1, std::llround(frac * static_cast<double>(total_iters)));
  if (s.ramp_end > total_iters) throw std::invalid_argument("ramp end beyond total iterations");
  return s;
}

double ramp_weight(std::int64_t i, const RampSchedule& sched) {
  if (i < 0) throw std::invalid_argument("iteration must be non-negative");
  if (sched.ramp_end <= 0) throw std::invalid_argument("ramp_end must be positive");
  if (i >= sched.ramp_end) return 1.0;
  const double x = 1.0 - static_cast<double>(i) / static_cast<double>(sched.ramp_end);
  return std::exp(-5.0 * x * x);
}

double total_loss(double l_sup, double l_con, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("lambda outside [0, 1]");
  return l_sup + lambda * l_con;
}

namespace {

struct EdgeNormals {
  std::vector<double> nx, nz;
  std::vector<double> valid;  // 1 where the edge has positive length
  int n_valid = 0;
};

// Unit normals of the closed floor-plan polyline p_u = d_u (cos t_u, sin t_u).
EdgeNormals target_normals(const std::vector<double>& depth) {
  const int w = static_cast<int>(depth.size());
  EdgeNormals e;
  e.nx.assign(w, 0.0);
  e.nz.assign(w, 0.0);
  e.valid.assign(w, 0.0);
  for (int u = 0; u < w; ++u) {
    const int un = (u + 1) % w;
    const double t0 = col_theta(u, w), t1 = col_theta(un, w);
    const double ex = depth[un] * std::cos(t1) - depth[u] * std::cos(t0);
    const double ez = depth[un] * std::sin(t1) - depth[u] * std::sin(t0);
    const double len = std::sqrt(ex * ex + ez * ez);
    if (len > 0.0) {
      e.nx[u] = ez / len;
      e.nz[u] = -ex / len;
      e.valid[u] = 1.0;
      ++e.n_valid;
    }
  }
  return e;
}

std::vector<double> angle_table(int w, double (*fn)(double)) {
  std::vector<double> out(w);
  for (int u = 0; u < w; ++u) out[u] = fn(col_theta(u, w));
  return out;
}

void check_width(const nn::Tensor& pred, const std::vector<double>& target) {
  if (pred.ndim() != 1 || pred.numel() != static_cast<int>(target.size())) {
    throw std::invalid_argument("loss: prediction/target width mismatch");
  }
}

}  // namespace

nn::Value loss_depth(nn::Tape& t, nn::Value pred_depth, const std::vector<double>& target) {
  check_width(pred_depth.val(), target);
  nn::Value tgt = t.constant(nn::Tensor::from({static_cast<int>(target.size())},
                                              std::vector<double>(target)));
  return t.mean_all(t.abs(t.sub(pred_depth, tgt)));
}

nn::Value loss_height(nn::Tape& t, nn::Value pred_height, double target) {
  if (pred_height.val().numel() != 1) throw std::invalid_argument("height must be a scalar");
  return t.abs(t.add_scalar(pred_height, -target));
}

nn::Value loss_normal(nn::Tape& t, nn::Value pred_depth, const std::vector<double>& target) {
  check_width(pred_depth.val(), target);
  const int w = static_cast<int>(target.size());
  if (w < 3) throw std::invalid_argument("loss_normal needs at least 3 columns");

  const EdgeNormals tgt = target_normals(target);

  nn::Value px = t.mul_const(pred_depth, nn::Tensor::from({w}, angle_table(w, std::cos)));
  nn::Value pz = t.mul_const(pred_depth, nn::Tensor::from({w}, angle_table(w, std::sin)));
  nn::Value ex = t.sub(t.roll(px, -1), px);
  nn::Value ez = t.sub(t.roll(pz, -1), pz);
  nn::Value len = t.sqrt(t.add(t.mul(ex, ex), t.mul(ez, ez)));

  // Mask out degenerate edges on either side; zero-length predicted edges
  // additionally get their length patched to 1 so the division stays defined
  // (those lanes are masked out of the loss).
  std::vector<double> valid = tgt.valid;
  std::vector<double> patch(w, 0.0);
  int n_valid = 0;
  for (int u = 0; u < w; ++u) {
    if (len.val()[u] <= 0.0) {
      valid[u] = 0.0;
      patch[u] = 1.0;
    }
    if (valid[u] > 0.0) ++n_valid;
  }
  if (n_valid == 0) {
    std::fprintf(stderr, "loss_normal: all edges degenerate, returning 0\n");
    return t.constant(nn::Tensor::scalar(0.0));
  }
  nn::Value safe_len = t.add(len, t.constant(nn::Tensor::from({w}, std::move(patch))));
  nn::Value nx = t.div(ez, safe_len);
  nn::Value nz = t.div(t.mul_scalar(ex, -1.0), safe_len);
  nn::Value cosim = t.add(t.mul_const(nx, nn::Tensor::from({w}, std::vector<double>(tgt.nx))),
                          t.mul_const(nz, nn::Tensor::from({w}, std::vector<double>(tgt.nz))));
  // max(0, 1 - n.n_hat), masked to valid edges
  nn::Value term = t.relu(t.add_scalar(t.mul_scalar(cosim, -1.0), 1.0));
  nn::Value masked = t.mul_const(term, nn::Tensor::from({w}, std::move(valid)));
  return t.mul_scalar(t.sum_all(masked), 1.0 / n_valid);
}

nn::Value loss_gradient(nn::Tape& t, nn::Value pred_depth, const std::vector<double>& target) {
  check_width(pred_depth.val(), target);
  const int w = static_cast<int>(target.size());
  if (w < 2) throw std::invalid_argument("loss_gradient needs at least 2 columns");
  std::vector<double> tgt_diff(w);
  for (int u = 0; u < w; ++u) tgt_diff[u] = target[(u + 1) % w] - target[u];
  nn::Value g = t.sub(t.roll(pred_depth, -1), pred_depth);
  nn::Value tg = t.constant(nn::Tensor::from({w}, std::move(tgt_diff)));
  return t.mean_all(t.abs(t.sub(g, tg)));
}

nn::Value composite_loss(nn::Tape& t, const Prediction& pred,
                         const std::vector<double>& target_depth, double target_height,
                         const LossWeights& w) {
  if (!(w.depth >= 0.0 && w.height >= 0.0 && w.normal_grad >= 0.0)) {
    throw std::invalid_argument("loss weights must be non-negative");
  }
  nn::Value ld = loss_depth(t, pred.depth, target_depth);
  nn::Value lh = loss_height(t, pred.height, target_height);
  nn::Value ln = loss_normal(t, pred.depth, target_depth);
  nn::Value lg = loss_gradient(t, pred.depth, target_depth);
  nn::Value acc = t.add(t.mul_scalar(ld, w.depth), t.mul_scalar(lh, w.height));
  return t.add(acc, t.mul_scalar(t.add(ln, lg), w.normal_grad));
}

nn::Value supervised_loss(nn::Tape& t, const Prediction& pred, const LayoutTarget& target,
                          const LossWeights& w) {
  return composite_loss(t, pred, target.depth, target.height, w);
}

nn::Value consistency_loss(nn::Tape& t, const Prediction& z_tea, const Prediction& z_feat,
                           const Prediction& z_img, const LossWeights& w) {
  if (z_tea.requires_grad()) {
    throw std::invalid_argument("consistency_loss: teacher prediction carries a gradient graph");
  }
  // copied out: building the losses below grows the tape and may move nodes
  const std::vector<double> tgt_depth = z_tea.depth.val().data;
  const double tgt_height = z_tea.height.val()[0];
  return t.add(composite_loss(t, z_feat, tgt_depth, tgt_height, w),
               composite_loss(t, z_img, tgt_depth, tgt_height, w));
}

// --- plain-number variants --------------------------------------------------

namespace {

nn::Value as_value(nn::Tape& t, const std::vector<double>& v) {
  return t.constant(nn::Tensor::from({static_cast<int>(v.size())}, std::vector<double>(v)));
}

}  // namespace

double loss_depth(const std::vector<double>& pred, const std::vector<double>& target) {
  nn::Tape t;
  t.set_grad_enabled(false);
  return loss_depth(t, as_value(t, pred), target).val()[0];
}

double loss_height(double pred, double target) { return std::abs(pred - target); }

double loss_normal(const std::vector<double>& pred, const std::vector<double>& target) {
  nn::Tape t;
  t.set_grad_enabled(false);
  return loss_normal(t, as_value(t, pred), target).val()[0];
}

double loss_gradient(const std::vector<double>& pred, const std::vector<double>& target) {
  nn::Tape t;
  t.set_grad_enabled(false);
  return loss_gradient(t, as_value(t, pred), target).val()[0];
}

double composite_loss(const DecodedPrediction& pred, const std::vector<double>& target_depth,
                      double target_height, const LossWeights& w) {
  nn::Tape t;
  t.set_grad_enabled(false);
  Prediction p;
  p.depth = as_value(t, pred.depth);
  p.height = t.constant(nn::Tensor::scalar(pred.height));
  p.corner = as_value(t, pred.corner_score);
  return composite_loss(t, p, target_depth, target_height, w).val()[0];
}

}  // namespace panolayout
