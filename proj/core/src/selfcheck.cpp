#include "panolayout/selfcheck.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <limits>
#include <set>

#include "panolayout/augment.hpp"
#include "panolayout/feature_mask.hpp"
#include "panolayout/losses.hpp"
#include "panolayout/metrics.hpp"
#include "panolayout/model.hpp"
#include "panolayout/trainer.hpp"

namespace panolayout {

namespace {

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof buf, f, args);
  va_end(args);
  return buf;
}

struct LossProbe {
  double value;
  std::uint64_t kinks;  // sign pattern of every relu/abs in the graph
};

LossProbe supervised_loss_probe(const Model& model, const Panorama& img,
                                const LayoutTarget& target, const LossWeights& w) {
  nn::Tape tape;
  tape.set_grad_enabled(false);
  tape.set_kink_tracking(true);
  const ModelBinding b = model.bind(tape);
  const double value = supervised_loss(tape, b.forward(img), target, w).val()[0];
  return {value, tape.kink_signature()};
}

}  // namespace

std::vector<int> locate_boundary_rows(const Panorama& img, int v_lo, int v_hi) {
  // The renderer draws a near-black band along the floor/ceiling boundary, so
  // the boundary is the strongest dark dip of each half-column. The dip score
  // compares each row against rows two above/below; any monotone
  // photometric map keeps the band the window minimum.
  std::vector<int> rows(img.width, v_lo);
  const int lo = std::max(2, v_lo);
  const int hi = std::min(img.height - 2, v_hi);
  for (int u = 0; u < img.width; ++u) {
    double best = std::numeric_limits<double>::infinity();
    for (int v = lo; v < hi; ++v) {
      double s = 0.0;
      for (int c = 0; c < 3; ++c) {
        s += img.at(v, u, c) - 0.5 * (img.at(v - 2, u, c) + img.at(v + 2, u, c));
      }
      if (s < best) {
        best = s;
        rows[u] = v;
      }
    }
  }
  return rows;
}

CheckResult check_gradients(int n_params, double eps, std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  Model model(ModelConfig{}, seed);
  const RoomLayout room = generate_room(seed + 1);
  Rng style_rng(seed + 2);
  const SceneStyle style = SceneStyle::random(style_rng, 0.003);
  const Panorama img = render_panorama(room, style, 64, 128, seed + 3);
  const LayoutTarget target = target_from_layout(room, 128);
  const LossWeights w;

  // analytic gradients
  model.params().zero_grads();
  {
    nn::Tape tape;
    const ModelBinding b = model.bind(tape);
    const nn::Value loss = supervised_loss(tape, b.forward(img), target, w);
    tape.backward(loss);
    b.accumulate_grads(model.params());
  }

  // flat element index -> (slot, offset)
  std::vector<std::pair<int, int>> index;
  for (int s = 0; s < static_cast<int>(model.params().slots().size()); ++s) {
    for (int j = 0; j < model.params().slots()[s].value.numel(); ++j) index.push_back({s, j});
  }
  Rng rng(seed + 4);

  // The loss is piecewise smooth (relu, L1 terms); the finite-difference
  // quotient only estimates the analytic derivative when both probe points
  // lie on the same smooth piece. Draws whose probe window straddles a sign
  // flip are rejected and redrawn.
  std::set<size_t> used;
  int n_fine = 0, accepted = 0, skipped = 0;
  double worst = 0.0;
  const int max_attempts = 50 * n_params;
  for (int attempt = 0; attempt < max_attempts && accepted < n_params; ++attempt) {
    const size_t flat = rng.uniform_int(index.size());
    if (!used.insert(flat).second) continue;
    const auto [s, j] = index[flat];
    ParamSlot& slot = model.params().slots()[s];
    const double analytic = slot.grad.data[j];
    const double keep = slot.value.data[j];
    slot.value.data[j] = keep + eps;
    const LossProbe up = supervised_loss_probe(model, img, target, w);
    slot.value.data[j] = keep - eps;
    const LossProbe down = supervised_loss_probe(model, img, target, w);
    slot.value.data[j] = keep;
    if (up.kinks != down.kinks) {
      ++skipped;
      continue;
    }
    ++accepted;
    const double fd = (up.value - down.value) / (2.0 * eps);
    double rel = 0.0;
    if (std::abs(analytic) > 1e-12 || std::abs(fd) > 1e-12) {
      rel = std::abs(analytic - fd) / std::max(std::abs(analytic), std::abs(fd));
    }
    worst = std::max(worst, rel);
    if (rel < 1e-4) ++n_fine;
  }
  const double fine_frac = accepted > 0 ? static_cast<double>(n_fine) / accepted : 0.0;
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CheckResult r;
  r.name = "gradient_finite_difference";
  r.pass = accepted >= n_params && worst < 1e-3 && fine_frac >= 0.95;
  r.detail = fmt("max rel err %.3g (tol 1e-3), frac below 1e-4 = %.3f (need >= 0.95), "
                 "%d params checked (%d kink-straddling draws redrawn), %.1fs",
                 worst, fine_frac, accepted, skipped, secs);
  return r;
}

CheckResult check_mask_statistics(int draws_per_row, std::uint64_t seed) {
  const int rows = 33, cols = 32;
  MaskConfig cfg;
  cfg.p_channel = 1.0;
  const int n_masks = (draws_per_row + cols - 1) / cols;
  Rng rng(seed);

  const std::vector<int> probe_rows = {0, 8, 16, 24, 32};  // y = -1, -0.5, 0, 0.5, 1
  std::vector<double> expected;
  for (int v : probe_rows) expected.push_back(mask_probability(2.0 * v / (rows - 1) - 1.0, cfg));

  std::vector<std::int64_t> dropped(probe_rows.size(), 0);
  bool scale_exact = true;
  for (int m = 0; m < n_masks; ++m) {
    const FeatureMask mask = build_mask(1, rows, cols, cfg, rng);
    if (mask.scale * mask.kept_fraction() != 1.0) scale_exact = false;
    for (size_t pi = 0; pi < probe_rows.size(); ++pi) {
      const int v = probe_rows[pi];
      for (int u = 0; u < cols; ++u) dropped[pi] += mask.keep[v * cols + u] == 0;
    }
  }

  double worst = 0.0;
  for (size_t pi = 0; pi < probe_rows.size(); ++pi) {
    const double rate = static_cast<double>(dropped[pi]) / (static_cast<double>(n_masks) * cols);
    worst = std::max(worst, std::abs(rate - expected[pi]));
  }
  CheckResult r;
  r.name = "mask_statistics";
  r.pass = worst <= 0.005 && scale_exact;
  r.detail = fmt("max |rate - expected| = %.4f (tol 0.005) over %d draws/row, "
                 "scale*kept_fraction == 1 exactly: %s",
                 worst, n_masks * cols, scale_exact ? "yes" : "NO");
  return r;
}

CheckResult check_ema_closed_form(std::uint64_t seed) {
  const double alpha = 0.999;
  const int steps = 1000;
  ModelConfig tiny;
  tiny.input_height = 16;
  tiny.input_width = 32;
  Model model(tiny, seed);
  ParamStore& student = model.params();
  ParamStore teacher = student;
  Rng rng(seed + 1);
  for (ParamSlot& s : teacher.slots()) {
    for (double& v : s.value.data) v += rng.uniform(-1.0, 1.0);
  }
  const ParamStore initial_teacher = teacher;

  for (int i = 0; i < steps; ++i) ema_update(teacher, student, alpha);

  const double decay = std::pow(alpha, steps);
  double worst = 0.0;
  for (size_t i = 0; i < teacher.slots().size(); ++i) {
    const auto& t = teacher.slots()[i].value.data;
    const auto& s = student.slots()[i].value.data;
    const auto& t0 = initial_teacher.slots()[i].value.data;
    for (size_t j = 0; j < t.size(); ++j) {
      const double expected = s[j] + (t0[j] - s[j]) * decay;
      worst = std::max(worst, std::abs(t[j] - expected));
    }
  }
  CheckResult r;
  r.name = "ema_closed_form";
  r.pass = worst < 1e-9;
  r.detail = fmt("max |teacher - closed form| = %.3g after %d steps at alpha=%.3f (tol 1e-9)",
                 worst, steps, alpha);
  return r;
}

CheckResult check_ramp_values() {
  const std::int64_t total = 10000;
  const RampSchedule sched = RampSchedule::fraction(0.3, total);
  const std::int64_t ramp_end = sched.ramp_end;

  const double l0 = ramp_weight(0, sched);
  const double lh = ramp_weight(ramp_end / 2, sched);
  const double le = ramp_weight(ramp_end, sched);
  const bool v0 = std::abs(l0 - std::exp(-5.0)) <= 1e-12;
  const bool vh = std::abs(lh - std::exp(-1.25)) <= 1e-12;
  const bool ve = le == 1.0;
  bool monotone = true;
  double prev = -1.0;
  for (std::int64_t i = 0; i < total; ++i) {
    const double l = ramp_weight(i, sched);
    if (l < prev) monotone = false;
    prev = l;
  }
  const bool ri = ramp_end == std::llround(0.3 * total);

  CheckResult r;
  r.name = "ramp_up_schedule";
  r.pass = v0 && vh && ve && monotone && ri;
  r.detail = fmt("lambda(0)=%.8g (e^-5=%.8g), lambda(I/2)=%.8g (e^-1.25=%.8g), lambda(I)==1: %s, "
                 "monotone over %lld points: %s, I=%lld",
                 l0, std::exp(-5.0), lh, std::exp(-1.25), ve ? "yes" : "NO",
                 static_cast<long long>(total), monotone ? "yes" : "NO",
                 static_cast<long long>(ramp_end));
  return r;
}

CheckResult check_filter_contracts(std::uint64_t seed) {
  // DC removal on a constant image with zero retention
  Panorama flat(32, 64);
  std::fill(flat.pixels.begin(), flat.pixels.end(), 0.5);
  const Panorama hp = fft_highpass(flat, 0.1, 0.0, 1.0);
  double mean = 0.0;
  for (double v : hp.pixels) mean += v;
  mean /= static_cast<double>(hp.pixels.size());
  const bool dc_ok = std::abs(mean) < 1e-6;

  // all-pass at floor gain 1
  const RoomLayout room = generate_room(seed);
  Rng style_rng(seed + 1);
  const SceneStyle style = SceneStyle::random(style_rng, 0.003);
  const Panorama pano = render_panorama(room, style, 32, 64, seed + 2);
  const Panorama same = fft_highpass(pano, 0.1, 1.0, 1.0);
  double worst = 0.0;
  for (size_t i = 0; i < pano.pixels.size(); ++i) {
    worst = std::max(worst, std::abs(pano.pixels[i] - same.pixels[i]));
  }
  const bool identity_ok = worst < 1e-6;

  // histogram equalization must be a monotone map
  const Panorama eq = hist_equalize(pano);
  bool monotone = true;
  for (int c = 0; c < 3 && monotone; ++c) {
    std::vector<std::pair<double, double>> pairs;
    pairs.reserve(pano.pixels.size() / 3);
    for (size_t i = 0; i < pano.pixels.size() / 3; ++i) {
      pairs.push_back({pano.pixels[i * 3 + c], eq.pixels[i * 3 + c]});
    }
    std::sort(pairs.begin(), pairs.end());
    for (size_t i = 1; i < pairs.size(); ++i) {
      if (pairs[i].second < pairs[i - 1].second) {
        monotone = false;
        break;
      }
    }
  }

  CheckResult r;
  r.name = "filter_contracts";
  r.pass = dc_ok && identity_ok && monotone;
  r.detail = fmt("|DC|=%.3g (tol 1e-6), all-pass max err=%.3g (tol 1e-6), hist-eq monotone: %s",
                 std::abs(mean), worst, monotone ? "yes" : "NO");
  return r;
}

CheckResult check_strong_boundary(int n_panos, std::uint64_t seed) {
  const int h = 64, w = 128;
  StrongAugParams sp;
  Rng rng(seed);
  int worst = 0;
  for (int i = 0; i < n_panos; ++i) {
    const RoomLayout room = generate_room(rng.fork(2 * i).next_u64());
    Rng style_rng(rng.fork(2 * i + 1).next_u64());
    const SceneStyle style = SceneStyle::random(style_rng, 0.003);
    const Panorama pano = render_panorama(room, style, h, w, seed + i);
    const Panorama strong = strong_augment(pano, sp);
    const std::vector<int> before_f = locate_boundary_rows(pano, h / 2 + 1, h - 1);
    const std::vector<int> after_f = locate_boundary_rows(strong, h / 2 + 1, h - 1);
    const std::vector<int> before_c = locate_boundary_rows(pano, 1, h / 2);
    const std::vector<int> after_c = locate_boundary_rows(strong, 1, h / 2);
    for (int u = 0; u < w; ++u) {
      worst = std::max(worst, std::abs(before_f[u] - after_f[u]));
      worst = std::max(worst, std::abs(before_c[u] - after_c[u]));
    }
  }
  CheckResult r;
  r.name = "strong_augment_boundary_shift";
  r.pass = worst <= 1;
  r.detail = fmt("max per-column boundary shift = %d px over %d panoramas (tol 1 px)",
                 worst, n_panos);
  return r;
}

CheckResult check_geometric_consistency(int n_rooms, std::uint64_t seed) {
  const int h = 64, w = 128;
  Rng rng(seed);
  int worst_rows = 0;
  bool rotation_exact = true;
  for (int i = 0; i < n_rooms; ++i) {
    const RoomLayout room = generate_room(rng.fork(3 * i).next_u64());
    Rng style_rng(rng.fork(3 * i + 1).next_u64());
    const SceneStyle style = SceneStyle::random(style_rng, 0.003);
    const Panorama pano = render_panorama(room, style, h, w, seed + i);

    for (const double k : {0.7, 1.5}) {
      const Panorama rendered = render_panorama(stretch_layout(room, k, k), style, h, w, seed + i);
      WeakAugParams p;
      p.k_x = k;
      p.k_z = k;
      const Panorama warped = weak_augment_image(pano, p);
      const std::vector<int> a = locate_boundary_rows(rendered, h / 2 + 1, h - 1);
      const std::vector<int> b = locate_boundary_rows(warped, h / 2 + 1, h - 1);
      for (int u = 0; u < w; ++u) worst_rows = std::max(worst_rows, std::abs(a[u] - b[u]));
    }

    const int n = 1 + static_cast<int>(rng.uniform_int(w - 1));
    WeakAugParams rot;
    rot.rotate_cols = n;
    WeakAugParams back;
    back.rotate_cols = w - n;
    const Panorama round = weak_augment_image(weak_augment_image(pano, rot), back);
    if (round.pixels != pano.pixels) rotation_exact = false;
  }
  CheckResult r;
  r.name = "geometric_consistency";
  r.pass = worst_rows <= 1 && rotation_exact;
  r.detail = fmt("stretch boundary row mismatch max = %d px (tol 1), rotation round-trip "
                 "bit-exact: %s, %d rooms",
                 worst_rows, rotation_exact ? "yes" : "NO", n_rooms);
  return r;
}

CheckResult check_metric_oracles(int n_pairs, std::uint64_t seed) {
  Rng rng(seed);
  const int w = 256;
  double worst_iou = 0.0;
  auto make_rect = [&rng]() {
    const double x0 = -rng.uniform(0.6, 5.0), x1 = rng.uniform(0.6, 5.0);
    const double z0 = -rng.uniform(0.6, 5.0), z1 = rng.uniform(0.6, 5.0);
    return std::array<double, 4>{x0, x1, z0, z1};
  };
  for (int i = 0; i < n_pairs; ++i) {
    const auto a = make_rect();
    const auto b = make_rect();
    const RoomLayout ra({{a[0], a[2]}, {a[1], a[2]}, {a[1], a[3]}, {a[0], a[3]}}, 1.6, 2.8);
    const RoomLayout rb({{b[0], b[2]}, {b[1], b[2]}, {b[1], b[3]}, {b[0], b[3]}}, 1.6, 2.8);
    const std::vector<double> da = horizon_depth(ra, w);
    const std::vector<double> db = horizon_depth(rb, w);

    const double ix = std::max(0.0, std::min(a[1], b[1]) - std::max(a[0], b[0]));
    const double iz = std::max(0.0, std::min(a[3], b[3]) - std::max(a[2], b[2]));
    const double inter = ix * iz;
    const double area_a = (a[1] - a[0]) * (a[3] - a[2]);
    const double area_b = (b[1] - b[0]) * (b[3] - b[2]);
    const double analytic = inter / (area_a + area_b - inter);

    worst_iou = std::max(worst_iou, std::abs(iou2d(da, db) - analytic));
  }

  // equal heights: the prism ratio reduces to the floor-plan ratio
  const auto a = make_rect();
  const auto b = make_rect();
  const RoomLayout ra({{a[0], a[2]}, {a[1], a[2]}, {a[1], a[3]}, {a[0], a[3]}}, 1.6, 2.8);
  const RoomLayout rb({{b[0], b[2]}, {b[1], b[2]}, {b[1], b[3]}, {b[0], b[3]}}, 1.6, 2.8);
  const std::vector<double> da = horizon_depth(ra, w);
  const std::vector<double> db = horizon_depth(rb, w);
  const double d3 = std::abs(iou3d(da, 2.8, db, 2.8) - iou2d(da, db));

  // strict delta1 threshold: ratio exactly 1.25 is excluded
  const std::vector<double> gt(w, 2.0), pred(w, 2.5);
  const auto rd = rmse_delta1(pred, gt);
  const bool strict = rd.second == 0.0 && std::abs(rd.first - 0.5) < 1e-12;

  CheckResult r;
  r.name = "metric_oracles";
  r.pass = worst_iou <= 0.01 && d3 < 1e-6 && strict;
  r.detail = fmt("raster vs analytic rectangle IoU max err = %.4f (tol 0.01, %d pairs), "
                 "|iou3d - iou2d| at equal heights = %.3g (tol 1e-6), delta1 strict at 1.25: %s",
                 worst_iou, n_pairs, d3, strict ? "yes" : "NO");
  return r;
}

std::vector<CheckResult> run_selfchecks(const SelfCheckOptions& opt) {
  std::vector<CheckResult> out;
  out.push_back(check_ramp_values());
  out.push_back(check_ema_closed_form(opt.seed));
  out.push_back(check_mask_statistics(opt.mask_draws_per_row, opt.seed + 1));
  out.push_back(check_filter_contracts(opt.seed + 2));
  out.push_back(check_gradients(opt.grad_params, opt.grad_eps, opt.seed + 3));
  out.push_back(check_strong_boundary(opt.strong_panos, opt.seed + 4));
  out.push_back(check_geometric_consistency(opt.geo_rooms, opt.seed + 5));
  out.push_back(check_metric_oracles(opt.metric_pairs, opt.seed + 6));
  return out;
}

}  // namespace panolayout
