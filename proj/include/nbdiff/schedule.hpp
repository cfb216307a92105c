#pragma once

#include <cmath>

#include "nbdiff/tensor.hpp"

namespace nbdiff {

/// Variance schedule for a T-step diffusion. All coefficient tables are kept
/// in double precision; step indices are 1-based throughout (t in [1, T]).
struct NoiseSchedule {
  int steps = 0;
  ArrayX<double> betas;       // beta_t
  ArrayX<double> alphas;      // 1 - beta_t
  ArrayX<double> alpha_bars;  // running product of alphas

  double beta(int t) const { return betas[check(t)]; }
  double alpha(int t) const { return alphas[check(t)]; }
  double alpha_bar(int t) const { return alpha_bars[check(t)]; }

  double sqrt_alpha_bar(int t) const { return std::sqrt(alpha_bar(t)); }
  double sqrt_one_minus_alpha_bar(int t) const { return std::sqrt(1.0 - alpha_bar(t)); }

 private:
  int check(int t) const {
    if (t < 1 || t > steps)
      throw Error("step index " + std::to_string(t) + " outside [1, " +
                  std::to_string(steps) + "]");
    return t - 1;
  }
};

enum class ScheduleKind { Linear };

/// Linear beta schedule from beta_start to beta_end inclusive.
inline NoiseSchedule build_schedule(int steps, ScheduleKind kind, double beta_start,
                                    double beta_end) {
  (void)kind;  // only Linear exists
  if (steps < 1) throw ConfigError("schedule: step count must be >= 1");
  if (!(beta_start > 0.0) || !(beta_end < 1.0) || !(beta_start <= beta_end))
    throw ConfigError("schedule: need 0 < beta_start <= beta_end < 1");

  NoiseSchedule s;
  s.steps = steps;
  s.betas.resize(steps);
  if (steps == 1) {
    s.betas[0] = beta_start;
  } else {
    double d = (beta_end - beta_start) / (steps - 1);
    for (int i = 0; i < steps; ++i) s.betas[i] = beta_start + d * i;
  }
  s.alphas = 1.0 - s.betas;
  s.alpha_bars.resize(steps);
  double prod = 1.0;
  for (int i = 0; i < steps; ++i) {
    prod *= s.alphas[i];
    s.alpha_bars[i] = prod;
  }
  return s;
}

}  // namespace nbdiff
