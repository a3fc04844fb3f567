#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "panolayout/geometry.hpp"

namespace panolayout {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;  // measured value vs tolerance
};

struct SelfCheckOptions {
  int grad_params = 200;
  double grad_eps = 1e-3;
  int mask_draws_per_row = 1000000;
  int geo_rooms = 20;
  int strong_panos = 50;
  int metric_pairs = 50;
  std::uint64_t seed = 7;
};

CheckResult check_gradients(int n_params, double eps, std::uint64_t seed);
CheckResult check_mask_statistics(int draws_per_row, std::uint64_t seed);
CheckResult check_ema_closed_form(std::uint64_t seed);
CheckResult check_ramp_values();
CheckResult check_filter_contracts(std::uint64_t seed);
CheckResult check_strong_boundary(int n_panos, std::uint64_t seed);
CheckResult check_geometric_consistency(int n_rooms, std::uint64_t seed);
CheckResult check_metric_oracles(int n_pairs, std::uint64_t seed);

std::vector<CheckResult> run_selfchecks(const SelfCheckOptions& opt = {});

// Strongest vertical edge per column within [v_lo, v_hi): the row v that
// maximizes |img[v+1] - img[v]| summed over channels. Locates the floor or
// ceiling boundary in rendered panoramas; robust to monotone photometric
// maps, which stretch the boundary's value gap along with everything else.
std::vector<int> locate_boundary_rows(const Panorama& img, int v_lo, int v_hi);

}  // namespace panolayout
