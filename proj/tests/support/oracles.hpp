#pragma once

// Independent reference computations used to freeze expected test values.
// These deliberately avoid the library's implementation paths.

#include <cmath>
#include <cstdint>
#include <vector>

#include "nbdiff/noise_bank.hpp"
#include "nbdiff/schedule.hpp"

namespace nbdiff::oracles {

/// Direct product: abar_t = prod_{l<=t} (1 - beta_l), recomputed from scratch
/// for each t.
inline double alpha_bar_product(const std::vector<double>& betas, int t) {
  double p = 1.0;
  for (int l = 0; l < t; ++l) p *= 1.0 - betas[l];
  return p;
}

inline std::vector<double> linear_betas(int steps, double beta_start, double beta_end) {
  std::vector<double> b(steps);
  if (steps == 1) {
    b[0] = beta_start;
    return b;
  }
  for (int i = 0; i < steps; ++i)
    b[i] = beta_start + (beta_end - beta_start) * i / (steps - 1);
  return b;
}

/// Exact E||z|| for z ~ N(0, I_d): sqrt(2) * Gamma((d+1)/2) / Gamma(d/2).
inline double exact_gaussian_radius_mean(std::int64_t d) {
  return std::sqrt(2.0) *
         std::exp(std::lgamma((d + 1) / 2.0) - std::lgamma(d / 2.0));
}

/// Exhaustive argmin_i |r_i - r_phi| with the smallest index winning ties.
inline std::uint32_t brute_force_best_index(const NoiseBank& bank, const Image& x0,
                                            const NoiseSchedule& schedule) {
  const double a = std::sqrt(schedule.alpha_bars[schedule.steps - 1]);
  const double b = std::sqrt(1.0 - schedule.alpha_bars[schedule.steps - 1]);
  const double d = static_cast<double>(x0.shape.size());
  const double r_phi = std::sqrt(d) * (1.0 - 1.0 / (4.0 * d));

  std::uint32_t best = 0;
  double best_dist = 0.0;
  for (std::uint32_t i = 0; i < bank.n; ++i) {
    double sq = 0.0;
    for (Eigen::Index k = 0; k < x0.data.size(); ++k) {
      double v = a * static_cast<double>(x0.data[k]) +
                 b * static_cast<double>(bank.vectors[i].data[k]);
      sq += v * v;
    }
    double dist = std::abs(std::sqrt(sq) - r_phi);
    if (i == 0 || dist < best_dist) {
      best_dist = dist;
      best = i;
    }
  }
  return best;
}

}  // namespace nbdiff::oracles
