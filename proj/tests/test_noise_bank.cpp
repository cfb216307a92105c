#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "nbdiff/io.hpp"
#include "nbdiff/noise_bank.hpp"
#include "support/oracles.hpp"

using namespace nbdiff;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) : path("/tmp/nbdiff_test_" + name) {}
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("bank construction is deterministic and seed-sensitive") {
  TensorShape shape{2, 3, 3};
  NoiseBank a = build_bank(42, 8, shape);
  NoiseBank b = build_bank(42, 8, shape);
  NoiseBank c = build_bank(43, 8, shape);
  for (std::uint32_t i = 0; i < 8; ++i) {
    CHECK((a.vectors[i].data == b.vectors[i].data).all());
  }
  bool any_diff = false;
  for (std::uint32_t i = 0; i < 8 && !any_diff; ++i)
    any_diff = !(a.vectors[i].data == c.vectors[i].data).all();
  CHECK(any_diff);
  CHECK_THROWS_AS(build_bank(1, 0, shape), ConfigError);
}

TEST_CASE("per-index vectors are regenerable in isolation") {
  TensorShape shape{1, 4, 4};
  NoiseBank bank = build_bank(7, 6, shape);
  for (std::uint32_t i = 0; i < bank.n; ++i) {
    Image v = bank_vector(7, i, shape);
    CHECK((v.data == bank.vectors[i].data).all());
  }
}

TEST_CASE("bank entries look standard normal at N=1000, 3x32x32") {
  NoiseBank bank = build_bank(3, 1000, TensorShape{3, 32, 32});
  double sum = 0, sq = 0;
  std::int64_t count = 0;
  for (const auto& v : bank.vectors) {
    sum += v.data.cast<double>().sum();
    sq += v.data.cast<double>().square().sum();
    count += v.data.size();
  }
  double mean = sum / count;
  double var = sq / count - mean * mean;
  CHECK(std::abs(mean) < 4.0 / std::sqrt(static_cast<double>(count)));
  CHECK(var == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("training draws are uniform and reproducible") {
  TensorShape shape{1, 2, 2};
  NoiseBank single = build_bank(1, 1, shape);
  Rng rng(5);
  for (int i = 0; i < 10; ++i) CHECK(draw_training_noise(single, rng).first == 0);

  NoiseBank bank = build_bank(2, 10, shape);
  const int draws = 100000;
  std::vector<int> hits(10, 0);
  Rng r1(9);
  for (int i = 0; i < draws; ++i) {
    auto [index, vec] = draw_training_noise(bank, r1);
    CHECK(vec == &bank.vectors[index]);
    ++hits[index];
  }
  const double sigma = std::sqrt(draws * 0.1 * 0.9);
  for (int h : hits) CHECK(std::abs(h - draws / 10) < 3.0 * sigma);

  Rng r2(9), r3(9);
  for (int i = 0; i < 100; ++i)
    CHECK(draw_training_noise(bank, r2).first == draw_training_noise(bank, r3).first);
}

TEST_CASE("gaussian radius basics") {
  Image zero(TensorShape{1, 4, 4});
  CHECK(gaussian_radius(zero) == 0.0);
  Image ones(TensorShape{1, 4, 4});
  ones.data.setConstant(1.0f);
  CHECK(gaussian_radius(ones) == doctest::Approx(4.0));
}

TEST_CASE("gaussian radius of a d=10000 draw concentrates near 100") {
  TensorShape shape{1, 100, 100};
  Rng rng(21);
  double sum = 0.0;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) {
    double r = gaussian_radius(rng.normal_image<float>(shape));
    CHECK(r > 95.0);
    CHECK(r < 105.0);
    sum += r;
  }
  CHECK(std::abs(sum / draws - 100.0) < 0.5);
}

TEST_CASE("theoretical radius against the exact gamma-ratio oracle") {
  CHECK(theoretical_radius(TensorShape{1, 1, 1}) == doctest::Approx(0.75));
  // The d=1 approximation error is known and acceptable.
  CHECK(std::abs(0.75 - oracles::exact_gaussian_radius_mean(1)) < 0.06);

  double approx = theoretical_radius(TensorShape{3, 32, 32});
  double exact = oracles::exact_gaussian_radius_mean(3 * 32 * 32);
  CHECK(std::abs(approx - exact) / exact < 1e-3);

  double large = theoretical_radius(TensorShape{16, 64, 64});
  CHECK(large / std::sqrt(16.0 * 64 * 64) == doctest::Approx(1.0).epsilon(1e-4));

  CHECK_THROWS_AS(theoretical_radius(TensorShape{0, 4, 4}), ConfigError);
}

TEST_CASE("select_noise matches the brute-force oracle") {
  NoiseSchedule s = build_schedule(40, ScheduleKind::Linear, 1e-3, 0.2);
  Rng rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    TensorShape shape{2, 5, 5};
    auto n = static_cast<std::uint32_t>(1 + rng.next_below(64));
    NoiseBank bank = build_bank(rng.next_u64(), n, shape);
    Image x0 = rng.normal_image<float>(shape);
    RadiusReport report = select_noise(bank, x0, s);
    CHECK(report.best_index == oracles::brute_force_best_index(bank, x0, s));
    CHECK(report.per_index_radius.size() == n);
    CHECK(report.theoretical == doctest::Approx(theoretical_radius(shape)));
  }
}

TEST_CASE("select_noise single-vector bank and tie-breaking") {
  NoiseSchedule s = build_schedule(10, ScheduleKind::Linear, 0.01, 0.3);
  TensorShape shape{1, 3, 3};
  NoiseBank one = build_bank(5, 1, shape);
  Image x0 = Rng(6).normal_image<float>(shape);
  CHECK(select_noise(one, x0, s).best_index == 0);

  // Identical radii (an exact duplicate vector): the smaller index wins.
  NoiseBank dup = build_bank(7, 3, shape);
  dup.vectors[2] = dup.vectors[0];
  Image zero(shape);
  RadiusReport report = select_noise(dup, zero, s);
  CHECK(report.per_index_radius[0] == report.per_index_radius[2]);
  if (report.per_index_radius[0] <= report.per_index_radius[1])
    CHECK(report.best_index == 0);

  // Sign-flipped copy has the identical radius around x0 = 0 as well.
  NoiseBank flip = build_bank(8, 2, shape);
  flip.vectors[1] = Image(shape, (-flip.vectors[0].data).eval());
  RadiusReport flip_report = select_noise(flip, zero, s);
  CHECK(flip_report.per_index_radius[0] == flip_report.per_index_radius[1]);
  CHECK(flip_report.best_index == 0);

  Image wrong(TensorShape{1, 3, 4});
  CHECK_THROWS_AS(select_noise(dup, wrong, s), Error);
}

TEST_CASE("radius concentration at d=3072 with a terminal schedule") {
  NoiseSchedule s = build_schedule(100, ScheduleKind::Linear, 1e-4, 0.2);
  REQUIRE(s.alpha_bar(100) < 1e-3);
  TensorShape shape{3, 32, 32};
  NoiseBank bank = build_bank(9, 1000, shape);
  Rng rng(10);
  Image x0 = rng.normal_image<float>(shape);
  x0.data = x0.data.min(1.0f).max(-1.0f);
  RadiusReport report = select_noise(bank, x0, s);
  int inside = 0;
  for (double r : report.per_index_radius)
    if (std::abs(r - report.theoretical) <= 0.05 * report.theoretical) ++inside;
  CHECK(inside > 990);
}

TEST_CASE("bank files round-trip bitwise in both modes") {
  TensorShape shape{2, 4, 3};
  NoiseBank bank = build_bank(77, 5, shape);

  TempFile full("bank_full.nbk");
  save_bank(bank, full.path, BankFileMode::FullVectors);
  NoiseBank loaded = load_bank(full.path);
  CHECK(loaded.seed == bank.seed);
  CHECK(loaded.n == bank.n);
  CHECK(loaded.shape == bank.shape);
  for (std::uint32_t i = 0; i < bank.n; ++i)
    CHECK((loaded.vectors[i].data == bank.vectors[i].data).all());

  TempFile seed_only("bank_seed.nbk");
  save_bank(bank, seed_only.path, BankFileMode::SeedOnly);
  NoiseBank regenerated = load_bank(seed_only.path);
  for (std::uint32_t i = 0; i < bank.n; ++i)
    CHECK((regenerated.vectors[i].data == bank.vectors[i].data).all());
}

TEST_CASE("corrupt bank files fail loudly") {
  TensorShape shape{1, 2, 2};
  NoiseBank bank = build_bank(3, 4, shape);
  TempFile file("bank_corrupt.nbk");
  save_bank(bank, file.path);

  // Truncation: drop the tail of the vector data.
  {
    auto bytes = io::read_file_bytes(file.path);
    bytes.resize(bytes.size() - 7);
    io::write_file_bytes(file.path, bytes);
    CHECK_THROWS_WITH_AS(load_bank(file.path),
                         doctest::Contains("truncated"), FormatError);
  }

  // Bad magic.
  {
    save_bank(bank, file.path);
    auto bytes = io::read_file_bytes(file.path);
    bytes[0] = 'X';
    io::write_file_bytes(file.path, bytes);
    CHECK_THROWS_WITH_AS(load_bank(file.path), doctest::Contains("magic"),
                         FormatError);
  }

  // Unsupported version.
  {
    save_bank(bank, file.path);
    auto bytes = io::read_file_bytes(file.path);
    bytes[4] = 9;
    io::write_file_bytes(file.path, bytes);
    CHECK_THROWS_WITH_AS(load_bank(file.path), doctest::Contains("version"),
                         FormatError);
  }
}
