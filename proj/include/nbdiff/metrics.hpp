#pragma once

#include <functional>
#include <string>
#include <vector>

#include "nbdiff/noise_bank.hpp"
#include "nbdiff/schedule.hpp"
#include "nbdiff/tensor.hpp"

namespace nbdiff {

/// 10*log10(peak^2 / MSE), capped (identical images report the cap, default
/// 100 dB, so CSVs stay finite).
double psnr(const Image& a, const Image& b, double peak, double cap = 100.0);

/// Histogram mutual information over equal-width bins on [-1, 1], normalized
/// by sqrt(H(a) * H(b)). Entropies in bits. Constant inputs: 1 when both are
/// the same constant, 0 otherwise.
double normalized_mutual_information(const Image& a, const Image& b, int bins);

/// Self-contained perceptual distance in [0, 1]; 0 iff the images are
/// identical, symmetric. 0.5 * (1 - S_struct) + 0.5 * G where S_struct is a
/// luminance/contrast/structure similarity on 8x8 windows (per window the
/// minimum of the three components, windows averaged) and G is the mean
/// normalized gradient-magnitude difference. The sum is clamped to [0, 1].
double perceptual_proxy(const Image& a, const Image& b);

/// Forward-diffusion comparison: per sampled t, PSNR/NMI of x_t against x0
/// under fresh Gaussian noise (FD) and under bank noise (NR-FD), averaged
/// over the input images.
struct FdComparisonRow {
  int t = 0;
  double psnr_fd = 0, psnr_nrfd = 0, nmi_fd = 0, nmi_nrfd = 0;
};

/// Test hook: when set, replaces the fresh-noise draw for image `i` at step
/// `t` (used to pin FD == NR-FD when fed identical noise).
using FreshNoiseHook = std::function<Image(int image_index, int t)>;

std::vector<FdComparisonRow> fd_comparison(const std::vector<Image>& images,
                                           const NoiseBank& bank,
                                           const NoiseSchedule& schedule, int stride,
                                           std::uint64_t seed,
                                           const FreshNoiseHook& fresh_hook = nullptr);

void write_fd_csv(const std::string& path, const std::vector<FdComparisonRow>& rows);
void write_fd_svg(const std::string& path_psnr, const std::string& path_nmi,
                  const std::vector<FdComparisonRow>& rows);

}  // namespace nbdiff
