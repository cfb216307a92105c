#include "nbdiff/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "nbdiff/diffusion.hpp"
#include "nbdiff/io.hpp"

namespace nbdiff {

namespace {

constexpr double kRange = 2.0;  // value range of [-1, 1] images
constexpr double kC1 = (0.01 * kRange) * (0.01 * kRange);
constexpr double kC2 = (0.03 * kRange) * (0.03 * kRange);
constexpr double kC3 = kC2 / 2.0;

ArrayX<double> luminance(const Image& img) {
  const auto plane = img.shape.plane();
  ArrayX<double> lum = ArrayX<double>::Zero(plane);
  for (int c = 0; c < img.shape.c; ++c)
    lum += img.data.segment(c * plane, plane).cast<double>();
  return lum / img.shape.c;
}

/// Gradient magnitude of a luminance plane, central differences with
/// replicated borders.
ArrayX<double> gradient_magnitude(const ArrayX<double>& lum, int h, int w) {
  ArrayX<double> g(static_cast<Eigen::Index>(h) * w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      int xl = std::max(0, x - 1), xr = std::min(w - 1, x + 1);
      int yu = std::max(0, y - 1), yd = std::min(h - 1, y + 1);
      double gx = (lum[y * w + xr] - lum[y * w + xl]) / 2.0;
      double gy = (lum[yd * w + x] - lum[yu * w + x]) / 2.0;
      g[y * w + x] = std::sqrt(gx * gx + gy * gy);
    }
  return g;
}

}  // namespace

double psnr(const Image& a, const Image& b, double peak, double cap) {
  require_same_shape(a.shape, b.shape, "psnr");
  if (!(peak > 0)) throw ConfigError("psnr: peak must be positive");
  double mse = (a.data.cast<double>() - b.data.cast<double>()).square().mean();
  if (mse == 0.0) return cap;
  return std::min(cap, 10.0 * std::log10(peak * peak / mse));
}

double normalized_mutual_information(const Image& a, const Image& b, int bins) {
  require_same_shape(a.shape, b.shape, "normalized_mutual_information");
  if (bins < 2) throw ConfigError("nmi: bins must be >= 2");

  const auto n = a.data.size();
  auto bin_of = [bins](float v) {
    double t = (std::clamp(static_cast<double>(v), -1.0, 1.0) + 1.0) / 2.0;
    return std::min(bins - 1, static_cast<int>(t * bins));
  };

  std::vector<double> joint(static_cast<std::size_t>(bins) * bins, 0.0);
  std::vector<double> pa(bins, 0.0), pb(bins, 0.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    int ia = bin_of(a.data[i]), ib = bin_of(b.data[i]);
    joint[static_cast<std::size_t>(ia) * bins + ib] += 1.0;
    pa[ia] += 1.0;
    pb[ib] += 1.0;
  }
  const double inv = 1.0 / static_cast<double>(n);
  double ha = 0, hb = 0, mi = 0;
  for (int i = 0; i < bins; ++i) {
    if (pa[i] > 0) ha -= pa[i] * inv * std::log2(pa[i] * inv);
    if (pb[i] > 0) hb -= pb[i] * inv * std::log2(pb[i] * inv);
  }
  for (int i = 0; i < bins; ++i)
    for (int j = 0; j < bins; ++j) {
      double pij = joint[static_cast<std::size_t>(i) * bins + j] * inv;
      if (pij > 0) mi += pij * std::log2(pij / (pa[i] * inv * pb[j] * inv));
    }
  if (ha <= 0.0 || hb <= 0.0) {
    // Constant-image convention: 1 for the same constant, 0 otherwise.
    return (a.data == b.data).all() ? 1.0 : 0.0;
  }
  return std::clamp(mi / std::sqrt(ha * hb), 0.0, 1.0);
}

double perceptual_proxy(const Image& a, const Image& b) {
  require_same_shape(a.shape, b.shape, "perceptual_proxy");
  const int h = a.shape.h, w = a.shape.w;
  ArrayX<double> la = luminance(a), lb = luminance(b);

  // S_struct over non-overlapping windows (up to 8x8; edge windows smaller).
  double s_sum = 0.0;
  int windows = 0;
  for (int y0 = 0; y0 < h; y0 += 8)
    for (int x0 = 0; x0 < w; x0 += 8) {
      int ph = std::min(8, h - y0), pw = std::min(8, w - x0);
      double n = static_cast<double>(ph) * pw;
      double ma = 0, mb = 0;
      for (int y = 0; y < ph; ++y)
        for (int x = 0; x < pw; ++x) {
          ma += la[(y0 + y) * w + x0 + x];
          mb += lb[(y0 + y) * w + x0 + x];
        }
      ma /= n;
      mb /= n;
      double va = 0, vb = 0, cov = 0;
      for (int y = 0; y < ph; ++y)
        for (int x = 0; x < pw; ++x) {
          double da = la[(y0 + y) * w + x0 + x] - ma;
          double db = lb[(y0 + y) * w + x0 + x] - mb;
          va += da * da;
          vb += db * db;
          cov += da * db;
        }
      va /= n;
      vb /= n;
      cov /= n;
      double sa = std::sqrt(va), sb = std::sqrt(vb);
      double lux = (2 * ma * mb + kC1) / (ma * ma + mb * mb + kC1);
      double con = (2 * sa * sb + kC2) / (va + vb + kC2);
      double str = (cov + kC3) / (sa * sb + kC3);
      s_sum += std::min({lux, con, str});
      ++windows;
    }
  double s_struct = s_sum / windows;

  ArrayX<double> ga = gradient_magnitude(la, h, w), gb = gradient_magnitude(lb, h, w);
  double num = (ga - gb).abs().sum();
  double den = (ga + gb).sum();
  double g = den > 0 ? num / den : 0.0;

  return std::clamp(0.5 * (1.0 - s_struct) + 0.5 * g, 0.0, 1.0);
}

std::vector<FdComparisonRow> fd_comparison(const std::vector<Image>& images,
                                           const NoiseBank& bank,
                                           const NoiseSchedule& schedule, int stride,
                                           std::uint64_t seed,
                                           const FreshNoiseHook& fresh_hook) {
  if (images.empty()) throw ConfigError("fd_comparison: empty image set");
  if (stride < 1) throw ConfigError("fd_comparison: stride must be >= 1");

  std::vector<FdComparisonRow> rows;
  for (int t = stride; t <= schedule.steps; t += stride) {
    FdComparisonRow row;
    row.t = t;
    for (std::size_t i = 0; i < images.size(); ++i) {
      const Image& x0 = images[i];
      Rng rng(derive_seed(seed, streams::kExperiment, i * 100003ULL + t));
      auto bank_index = static_cast<std::uint32_t>(rng.next_below(bank.n));
      Image fresh = fresh_hook ? fresh_hook(static_cast<int>(i), t)
                               : rng.normal_image<float>(x0.shape);
      Image xt_fd = forward_diffuse(x0, t, fresh, schedule);
      Image xt_nr = nr_forward_diffuse(x0, t, bank, bank_index, schedule);
      row.psnr_fd += psnr(xt_fd, x0, kRange);
      row.psnr_nrfd += psnr(xt_nr, x0, kRange);
      row.nmi_fd += normalized_mutual_information(xt_fd, x0, 32);
      row.nmi_nrfd += normalized_mutual_information(xt_nr, x0, 32);
    }
    const double m = static_cast<double>(images.size());
    row.psnr_fd /= m;
    row.psnr_nrfd /= m;
    row.nmi_fd /= m;
    row.nmi_nrfd /= m;
    rows.push_back(row);
  }
  return rows;
}

void write_fd_csv(const std::string& path, const std::vector<FdComparisonRow>& rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path);
  out << "t,psnr_fd,psnr_nrfd,nmi_fd,nmi_nrfd\n";
  for (const auto& r : rows)
    out << r.t << "," << io::fmt_double(r.psnr_fd) << "," << io::fmt_double(r.psnr_nrfd)
        << "," << io::fmt_double(r.nmi_fd) << "," << io::fmt_double(r.nmi_nrfd) << "\n";
}

void write_fd_svg(const std::string& path_psnr, const std::string& path_nmi,
                  const std::vector<FdComparisonRow>& rows) {
  std::vector<double> x;
  io::SvgSeries p_fd{"psnr_fd", {}}, p_nr{"psnr_nrfd", {}};
  io::SvgSeries n_fd{"nmi_fd", {}}, n_nr{"nmi_nrfd", {}};
  for (const auto& r : rows) {
    x.push_back(r.t);
    p_fd.y.push_back(r.psnr_fd);
    p_nr.y.push_back(r.psnr_nrfd);
    n_fd.y.push_back(r.nmi_fd);
    n_nr.y.push_back(r.nmi_nrfd);
  }
  io::write_line_svg(path_psnr, x, {p_fd, p_nr}, "t", "PSNR (dB)");
  io::write_line_svg(path_nmi, x, {n_fd, n_nr}, "t", "NMI");
}

}  // namespace nbdiff
