#pragma once

#include <utility>

#include "nbdiff/rng.hpp"
#include "nbdiff/schedule.hpp"
#include "nbdiff/tensor.hpp"

namespace nbdiff {

/// x_t = sqrt(abar_t) * x0 + sqrt(1 - abar_t) * eps
template <typename Scalar>
ImageT<Scalar> forward_diffuse(const ImageT<Scalar>& x0, int t,
                               const ImageT<Scalar>& epsilon,
                               const NoiseSchedule& schedule) {
  require_same_shape(x0.shape, epsilon.shape, "forward_diffuse");
  const Scalar a = static_cast<Scalar>(schedule.sqrt_alpha_bar(t));
  const Scalar b = static_cast<Scalar>(schedule.sqrt_one_minus_alpha_bar(t));
  return ImageT<Scalar>(x0.shape, a * x0.data + b * epsilon.data);
}

/// Inversion of the forward step: x0 = (x_t - sqrt(1 - abar_t) * eps) / sqrt(abar_t).
template <typename Scalar>
ImageT<Scalar> invert_forward_diffuse(const ImageT<Scalar>& xt, int t,
                                      const ImageT<Scalar>& epsilon,
                                      const NoiseSchedule& schedule) {
  require_same_shape(xt.shape, epsilon.shape, "invert_forward_diffuse");
  const Scalar a = static_cast<Scalar>(schedule.sqrt_alpha_bar(t));
  const Scalar b = static_cast<Scalar>(schedule.sqrt_one_minus_alpha_bar(t));
  return ImageT<Scalar>(xt.shape, (xt.data - b * epsilon.data) / a);
}

/// One reverse transition. sigma_t^2 = beta_t; the caller passes zero
/// fresh_noise at t = 1 so the final step is deterministic.
template <typename Scalar>
ImageT<Scalar> reverse_step(const ImageT<Scalar>& xt, int t,
                            const ImageT<Scalar>& predicted_noise,
                            const NoiseSchedule& schedule,
                            const ImageT<Scalar>& fresh_noise) {
  if (t < 1) throw Error("reverse_step: t must be >= 1, nothing to reverse at t = 0");
  require_same_shape(xt.shape, predicted_noise.shape, "reverse_step");
  require_same_shape(xt.shape, fresh_noise.shape, "reverse_step");
  const double beta = schedule.beta(t);
  const Scalar inv_sqrt_alpha = static_cast<Scalar>(1.0 / std::sqrt(schedule.alpha(t)));
  const Scalar noise_coef =
      static_cast<Scalar>(beta / schedule.sqrt_one_minus_alpha_bar(t));
  const Scalar sigma = static_cast<Scalar>(std::sqrt(beta));
  return ImageT<Scalar>(xt.shape,
                        inv_sqrt_alpha * (xt.data - noise_coef * predicted_noise.data) +
                            sigma * fresh_noise.data);
}

/// Full reverse pass from x_T down to x_0. `predict` is called as
/// predict(x_t, t) and must return the model's noise estimate; fresh noise is
/// drawn from rng_seed for t > 1 and forced to zero at t = 1. The final image
/// is clamped to [-1, 1].
template <typename Scalar, typename Predictor>
ImageT<Scalar> sample_with(Predictor&& predict, ImageT<Scalar> x,
                           const NoiseSchedule& schedule, std::uint64_t rng_seed) {
  Rng rng(rng_seed);
  ImageT<Scalar> zero(x.shape);
  for (int t = schedule.steps; t >= 1; --t) {
    ImageT<Scalar> eps_hat = predict(x, t);
    if (t > 1) {
      ImageT<Scalar> fresh = rng.normal_image<Scalar>(x.shape);
      x = reverse_step(x, t, eps_hat, schedule, fresh);
    } else {
      x = reverse_step(x, t, eps_hat, schedule, zero);
    }
  }
  x.data = x.data.min(Scalar(1)).max(Scalar(-1));
  return x;
}

}  // namespace nbdiff
