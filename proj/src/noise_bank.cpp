#include "nbdiff/noise_bank.hpp"

#include <cmath>
#include <fstream>

#include "nbdiff/io.hpp"

namespace nbdiff {

Image bank_vector(std::uint64_t seed, std::uint32_t index, TensorShape shape) {
  Rng rng(seed ^ static_cast<std::uint64_t>(index));
  return rng.normal_image<float>(shape);
}

NoiseBank build_bank(std::uint64_t seed, std::uint32_t n, TensorShape shape) {
  if (n == 0) throw ConfigError("noise bank: N must be >= 1");
  if (shape.size() <= 0) throw ConfigError("noise bank: empty tensor shape");
  NoiseBank bank;
  bank.seed = seed;
  bank.n = n;
  bank.shape = shape;
  bank.vectors.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i)
    bank.vectors.push_back(bank_vector(seed, i, shape));
  return bank;
}

std::pair<std::uint32_t, const Image*> draw_training_noise(const NoiseBank& bank,
                                                           Rng& rng) {
  if (bank.n == 0) throw Error("draw_training_noise: empty bank");
  auto index = static_cast<std::uint32_t>(rng.next_below(bank.n));
  return {index, &bank.vectors[index]};
}

double gaussian_radius(const Image& x) {
  return std::sqrt(x.data.cast<double>().square().sum());
}

double gaussian_radius(const ImageD& x) {
  return std::sqrt(x.data.square().sum());
}

double theoretical_radius(TensorShape shape) {
  const double d = static_cast<double>(shape.size());
  if (d < 1) throw ConfigError("theoretical_radius: dimension must be >= 1");
  return std::sqrt(d) * (1.0 - 1.0 / (4.0 * d));
}

RadiusReport select_noise(const NoiseBank& bank, const Image& x0,
                          const NoiseSchedule& schedule) {
  require_same_shape(bank.shape, x0.shape, "select_noise");
  const int t_final = schedule.steps;
  const double a = schedule.sqrt_alpha_bar(t_final);
  const double b = schedule.sqrt_one_minus_alpha_bar(t_final);

  RadiusReport report;
  report.theoretical = theoretical_radius(x0.shape);
  report.per_index_radius.resize(bank.n);

  const ArrayX<double> x0d = x0.data.cast<double>();
  double best = 0.0;
  for (std::uint32_t i = 0; i < bank.n; ++i) {
    double r = std::sqrt((a * x0d + b * bank.vectors[i].data.cast<double>()).square().sum());
    report.per_index_radius[i] = r;
    double dist = std::abs(r - report.theoretical);
    if (i == 0 || dist < best) {
      best = dist;
      report.best_index = i;
    }
  }
  return report;
}

void save_bank(const NoiseBank& bank, const std::string& path, BankFileMode mode) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path);
  out.write("NBK1", 4);
  io::write_u32(out, 1);  // format version
  io::write_u8(out, static_cast<std::uint8_t>(mode));
  io::write_u64(out, bank.seed);
  io::write_u32(out, bank.n);
  io::write_u32(out, 3);  // rank
  io::write_u32(out, static_cast<std::uint32_t>(bank.shape.c));
  io::write_u32(out, static_cast<std::uint32_t>(bank.shape.h));
  io::write_u32(out, static_cast<std::uint32_t>(bank.shape.w));
  if (mode == BankFileMode::FullVectors) {
    for (const Image& v : bank.vectors)
      io::write_f32_array(out, v.data.data(), static_cast<std::size_t>(v.data.size()));
  }
  if (!out) throw FormatError("write failed for " + path);
}

NoiseBank load_bank(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  io::expect_magic(in, "NBK1", "bank file");
  std::uint32_t version = io::read_u32(in, "bank version");
  if (version != 1)
    throw FormatError("bank file: unsupported version " + std::to_string(version));
  std::uint8_t mode = io::read_u8(in, "bank mode");
  if (mode > 1) throw FormatError("bank file: unknown mode " + std::to_string(mode));
  std::uint64_t seed = io::read_u64(in, "bank seed");
  std::uint32_t n = io::read_u32(in, "bank N");
  if (n == 0) throw FormatError("bank file: N must be >= 1");
  std::uint32_t rank = io::read_u32(in, "bank rank");
  if (rank != 3)
    throw FormatError("bank file: unsupported rank " + std::to_string(rank));
  TensorShape shape;
  shape.c = static_cast<int>(io::read_u32(in, "bank dims"));
  shape.h = static_cast<int>(io::read_u32(in, "bank dims"));
  shape.w = static_cast<int>(io::read_u32(in, "bank dims"));
  if (shape.size() <= 0) throw FormatError("bank file: degenerate shape " + shape.str());

  if (mode == static_cast<std::uint8_t>(BankFileMode::SeedOnly)) {
    NoiseBank bank = build_bank(seed, n, shape);
    return bank;
  }

  NoiseBank bank;
  bank.seed = seed;
  bank.n = n;
  bank.shape = shape;
  bank.vectors.reserve(n);
  const auto d = static_cast<std::size_t>(shape.size());
  for (std::uint32_t i = 0; i < n; ++i) {
    Image v(shape);
    io::read_f32_array(in, v.data.data(), d, "bank vectors");
    bank.vectors.push_back(std::move(v));
  }
  return bank;
}

}  // namespace nbdiff
