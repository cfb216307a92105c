#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "nbdiff/tensor.hpp"

namespace nbdiff {

/// splitmix64 finalizer; used to derive independent seeds from a base seed.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream,
                                 std::uint64_t index = 0) {
  return mix64(base ^ mix64(stream ^ mix64(index)));
}

// Stream ids for derive_seed. Keeping them in one place avoids collisions.
namespace streams {
constexpr std::uint64_t kTrainDraw = 0x11;
constexpr std::uint64_t kValidation = 0x22;
constexpr std::uint64_t kSample = 0x33;
constexpr std::uint64_t kChannel = 0x44;
constexpr std::uint64_t kModelInit = 0x55;
constexpr std::uint64_t kScene = 0x66;
constexpr std::uint64_t kExperiment = 0x77;
}  // namespace streams

/// Deterministic generator used everywhere: mt19937_64 for the bit stream,
/// Box-Muller for normals, rejection sampling for bounded integers. The
/// distributions are implemented here (not std::*_distribution) so sequences
/// are pinned by this file alone.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform double in [0, 1), 53 random bits.
  double next_double() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; generates pairs, caches the spare.
  double next_normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - next_double();  // (0, 1]
    double u2 = next_double();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  /// Uniform integer in [0, n), unbiased (rejection on the top range).
  std::uint64_t next_below(std::uint64_t n) {
    if (n == 0) throw Error("next_below: n must be positive");
    std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                          std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return x % n;
  }

  bool next_bernoulli(double p) { return next_double() < p; }

  template <typename Scalar>
  void fill_normal(ArrayX<Scalar>& a) {
    for (Eigen::Index i = 0; i < a.size(); ++i)
      a[i] = static_cast<Scalar>(next_normal());
  }

  template <typename Scalar>
  ImageT<Scalar> normal_image(TensorShape shape) {
    ImageT<Scalar> out(shape);
    fill_normal(out.data);
    return out;
  }

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace nbdiff
