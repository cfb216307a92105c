#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nbdiff/diffusion.hpp"
#include "nbdiff/rng.hpp"
#include "nbdiff/schedule.hpp"
#include "nbdiff/tensor.hpp"

namespace nbdiff {

/// Pre-sampled set of standard-normal noise tensors, shared once between
/// transmitter and receiver. Vectors are reproducible from (seed, N, shape):
/// vector i is drawn with the per-index sub-seed `seed ^ i`.
struct NoiseBank {
  std::uint64_t seed = 0;
  std::uint32_t n = 0;
  TensorShape shape;
  std::vector<Image> vectors;

  const Image& vector(std::uint32_t index) const {
    if (index >= n) throw Error("bank index " + std::to_string(index) +
                                " out of range [0, " + std::to_string(n) + ")");
    return vectors[index];
  }
};

/// Noise-restricted forward diffusion: forward_diffuse with the noise drawn
/// from the bank. For float tensors this is the identical code path, so the
/// result is bitwise equal to forward_diffuse(x0, t, bank[i], schedule).
template <typename Scalar>
ImageT<Scalar> nr_forward_diffuse(const ImageT<Scalar>& x0, int t, const NoiseBank& bank,
                                  std::uint32_t index, const NoiseSchedule& schedule) {
  const Image& eps = bank.vector(index);
  if constexpr (std::is_same_v<Scalar, float>) {
    return forward_diffuse(x0, t, eps, schedule);
  } else {
    return forward_diffuse(x0, t, eps.template cast<Scalar>(), schedule);
  }
}

/// Regenerates a single bank vector without materializing the whole bank.
Image bank_vector(std::uint64_t seed, std::uint32_t index, TensorShape shape);

NoiseBank build_bank(std::uint64_t seed, std::uint32_t n, TensorShape shape);

/// Uniform draw of a training noise vector. Returns (index, vector).
std::pair<std::uint32_t, const Image*> draw_training_noise(const NoiseBank& bank,
                                                           Rng& rng);

/// Euclidean norm of the flattened tensor, accumulated in double.
double gaussian_radius(const Image& x);
double gaussian_radius(const ImageD& x);

/// Large-d expansion of E||z|| for z ~ N(0, I_d): sqrt(d) * (1 - 1/(4d)).
double theoretical_radius(TensorShape shape);

/// Per-index radii of the step-T noised latents and the argmin match against
/// the theoretical radius. Ties break to the smallest index.
struct RadiusReport {
  std::vector<double> per_index_radius;
  double theoretical = 0.0;
  std::uint32_t best_index = 0;
};

RadiusReport select_noise(const NoiseBank& bank, const Image& x0,
                          const NoiseSchedule& schedule);

// Bank file (binary, little-endian): magic "NBK1", version u32, mode u8
// (0 = seed-only, 1 = full vectors), seed u64, N u32, rank u32, dims
// u32 x rank, then (mode 1 only) N*d f32 values, index-major, row-major.

enum class BankFileMode : std::uint8_t { SeedOnly = 0, FullVectors = 1 };

void save_bank(const NoiseBank& bank, const std::string& path,
               BankFileMode mode = BankFileMode::FullVectors);
NoiseBank load_bank(const std::string& path);

}  // namespace nbdiff
