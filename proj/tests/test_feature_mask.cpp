#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "panolayout/feature_mask.hpp"
#include "panolayout/selfcheck.hpp"
#include "panolayout/tape.hpp"

using namespace panolayout;

TEST_CASE("mask probability follows the quadratic schedule") {
  MaskConfig cfg;
  CHECK(mask_probability(0.0, cfg) == 0.2);
  CHECK(mask_probability(1.0, cfg) == 0.8);
  CHECK(mask_probability(-1.0, cfg) == 0.8);
  CHECK(mask_probability(0.5, cfg) == doctest::Approx(0.35).epsilon(1e-15));
  CHECK_THROWS_AS(mask_probability(1.01, cfg), std::invalid_argument);
  MaskConfig bad;
  bad.p_edge = 1.4;
  CHECK_THROWS_AS(mask_probability(0.0, bad), std::invalid_argument);
}

TEST_CASE("channel selection count and determinism") {
  MaskConfig cfg;
  Rng a(5), b(5);
  const FeatureMask ma = build_mask(10, 8, 16, cfg, a);
  const FeatureMask mb = build_mask(10, 8, 16, cfg, b);
  int selected = 0;
  for (int c = 0; c < 10; ++c) selected += ma.channel_selected[c];
  CHECK(selected == 2);  // round(0.2 * 10)
  CHECK(ma.channel_selected == mb.channel_selected);
  CHECK(ma.keep == mb.keep);
  CHECK(ma.scale == mb.scale);

  CHECK_THROWS_AS(build_mask(10, 1, 16, cfg, a), std::invalid_argument);
}

TEST_CASE("scale times kept fraction is exactly one") {
  MaskConfig cfg;
  Rng rng(17);
  for (int i = 0; i < 2000; ++i) {
    const FeatureMask m = build_mask(32, 8, 16, cfg, rng);
    CHECK(m.scale * m.kept_fraction() == 1.0);
  }

  // a half-kept draw must land on scale exactly 2
  MaskConfig half;
  half.p_center = 0.5;
  half.p_edge = 0.5;
  half.p_channel = 1.0;
  bool found = false;
  for (int i = 0; i < 2000 && !found; ++i) {
    const FeatureMask m = build_mask(1, 2, 8, half, rng);
    if (m.kept_count * 2 == m.total_count) {
      CHECK(m.scale == 2.0);
      found = true;
    }
  }
  CHECK(found);
}

TEST_CASE("monte carlo drop rates match the schedule") {
  const CheckResult r = check_mask_statistics(1000000, 23);
  INFO(r.detail);
  CHECK(r.pass);
}

TEST_CASE("identity mask passes features through bit-exactly") {
  MaskConfig cfg;
  cfg.p_channel = 0.0;
  Rng rng(3);
  const FeatureMask m = build_mask(8, 4, 8, cfg, rng);
  CHECK(m.identity());
  CHECK(m.scale == 1.0);

  nn::Tensor x({8, 4, 8});
  for (size_t i = 0; i < x.data.size(); ++i) x.data[i] = std::sin(static_cast<double>(i));
  const nn::Tensor y = apply_mask(x, m);
  CHECK(y.data == x.data);
}

TEST_CASE("masked channels preserve the sum of a constant input") {
  MaskConfig cfg;
  Rng rng(7);
  const FeatureMask m = build_mask(16, 8, 16, cfg, rng);
  nn::Tensor ones({16, 8, 16});
  std::fill(ones.data.begin(), ones.data.end(), 1.0);
  const nn::Tensor out = apply_mask(ones, m);

  double sum_sel = 0.0;
  double expect = 0.0;
  const size_t plane = 8 * 16;
  for (int c = 0; c < 16; ++c) {
    if (!m.channel_selected[c]) continue;
    expect += static_cast<double>(plane);
    for (size_t i = 0; i < plane; ++i) sum_sel += out.data[c * plane + i];
  }
  CHECK(sum_sel == doctest::Approx(expect).epsilon(1e-12));

  // untouched channels are bit-identical
  for (int c = 0; c < 16; ++c) {
    if (m.channel_selected[c]) continue;
    for (size_t i = 0; i < plane; ++i) CHECK(out.data[c * plane + i] == 1.0);
  }

  nn::Tensor wrong({16, 8, 8});
  CHECK_THROWS_AS(apply_mask(wrong, m), std::invalid_argument);
}

TEST_CASE("mask application is linear (superposition)") {
  MaskConfig cfg;
  Rng rng(11);
  const FeatureMask m = build_mask(8, 8, 8, cfg, rng);
  Rng vals(12);
  nn::Tensor a({8, 8, 8}), b({8, 8, 8}), ab({8, 8, 8});
  for (size_t i = 0; i < a.data.size(); ++i) {
    a.data[i] = vals.uniform(-2, 2);
    b.data[i] = vals.uniform(-2, 2);
    ab.data[i] = a.data[i] + b.data[i];
  }
  const nn::Tensor ya = apply_mask(a, m);
  const nn::Tensor yb = apply_mask(b, m);
  const nn::Tensor yab = apply_mask(ab, m);
  for (size_t i = 0; i < a.data.size(); ++i) {
    CHECK(std::abs(yab.data[i] - (ya.data[i] + yb.data[i])) < 1e-12);
  }
}

TEST_CASE("gradient passes through as keep * scale") {
  MaskConfig cfg;
  Rng rng(19);
  const FeatureMask m = build_mask(4, 4, 4, cfg, rng);
  nn::Tape tape;
  nn::Tensor x({4, 4, 4});
  for (size_t i = 0; i < x.data.size(); ++i) x.data[i] = 0.5 + 0.01 * static_cast<double>(i);
  const nn::Value in = tape.leaf(x);
  const nn::Value out = tape.sum_all(tape.mul_const(in, m.multiplier()));
  tape.backward(out);
  const nn::Tensor grad = in.grad();
  const nn::Tensor mult = m.multiplier();
  for (size_t i = 0; i < grad.data.size(); ++i) CHECK(grad.data[i] == mult.data[i]);
}

TEST_CASE("expected sum is preserved over many draws") {
  MaskConfig cfg;
  Rng rng(29);
  Rng vals(30);
  nn::Tensor x({32, 8, 16});
  for (double& v : x.data) v = vals.uniform(0.8, 1.2);

  const size_t plane = 8 * 16;
  double mean_out = 0.0, mean_in = 0.0;
  const int draws = 10000;
  for (int d = 0; d < draws; ++d) {
    const FeatureMask m = build_mask(32, 8, 16, cfg, rng);
    const nn::Tensor y = apply_mask(x, m);
    double so = 0.0, si = 0.0;
    for (int c = 0; c < 32; ++c) {
      if (!m.channel_selected[c]) continue;
      for (size_t i = 0; i < plane; ++i) {
        so += y.data[c * plane + i];
        si += x.data[c * plane + i];
      }
    }
    mean_out += so;
    mean_in += si;
  }
  mean_out /= draws;
  mean_in /= draws;
  CHECK(std::abs(mean_out - mean_in) / mean_in < 0.01);
}
