#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "nbdiff/denoiser.hpp"
#include "nbdiff/io.hpp"

using namespace nbdiff;

namespace {

ArchConfig tiny_arch(int levels = 2) {
  ArchConfig arch;
  arch.image_channels = 3;
  arch.cond_channels = 4;
  arch.time_channels = 4;
  arch.base_channels = 6;
  arch.levels = levels;
  return arch;
}

template <typename S>
TrainBatchT<S> make_batch(const ArchConfig& arch, TensorShape shape, int size,
                          std::uint64_t seed, std::uint32_t bank_n, int steps) {
  Rng rng(seed);
  TrainBatchT<S> batch;
  for (int j = 0; j < size; ++j) {
    batch.x0.push_back(rng.normal_image<S>(shape));
    batch.cond.push_back(
        rng.normal_image<S>(TensorShape{arch.cond_channels, shape.h, shape.w}));
    batch.t.push_back(1 + static_cast<int>(rng.next_below(steps)));
    batch.bank_index.push_back(static_cast<std::uint32_t>(rng.next_below(bank_n)));
  }
  return batch;
}

}  // namespace

TEST_CASE("zero-initialized head predicts zero and predictions are pure") {
  for (int levels = 1; levels <= 3; ++levels) {
    ArchConfig arch = tiny_arch(levels);
    Model model = build_model<float>(arch, 5);
    TensorShape shape{3, 8, 8};
    Rng rng(6);
    Image x = rng.normal_image<float>(shape);
    Image cond = rng.normal_image<float>(TensorShape{4, 8, 8});
    Image out = predict_noise(model, x, 3, cond);
    CHECK(out.shape == shape);
    CHECK((out.data == 0.0f).all());

    // Make the head non-trivial; repeated calls must agree bitwise.
    for (auto& v : model.convs.back().weight.reshaped()) v = 0.01f;
    Image a = predict_noise(model, x, 3, cond);
    Image b = predict_noise(model, x, 3, cond);
    CHECK((a.data == b.data).all());
    CHECK(a.all_finite());
  }
}

TEST_CASE("output shape follows the input for several sizes") {
  ArchConfig arch = tiny_arch(3);
  Model model = build_model<float>(arch, 7);
  Rng rng(8);
  for (int hw : {8, 16, 32}) {
    TensorShape shape{3, hw, hw};
    Image x = rng.normal_image<float>(shape);
    Image cond = rng.normal_image<float>(TensorShape{4, hw, hw});
    CHECK(predict_noise(model, x, 1, cond).shape == shape);
  }
  Image bad_cond = rng.normal_image<float>(TensorShape{3, 8, 8});
  Image x = rng.normal_image<float>(TensorShape{3, 8, 8});
  CHECK_THROWS_AS(predict_noise(model, x, 1, bad_cond), Error);
  Image odd = rng.normal_image<float>(TensorShape{3, 10, 10});
  Image odd_cond = rng.normal_image<float>(TensorShape{4, 10, 10});
  CHECK_THROWS_AS(predict_noise(model, odd, 1, odd_cond), Error);
}

TEST_CASE("restricted loss basics") {
  Image a(TensorShape{1, 2, 2});
  CHECK(restricted_loss(a, a) == 0.0);
  Image ones(TensorShape{1, 2, 2});
  ones.data.setConstant(1.0f);
  CHECK(restricted_loss(ones, a) == doctest::Approx(1.0));

  Image t(TensorShape{1, 1, 3});
  t.data << 0.5f, -1.0f, 2.0f;
  Image p(TensorShape{1, 1, 3});
  p.data << 0.0f, 1.0f, 2.0f;
  // Hand sum: (0.25 + 4 + 0) / 3
  CHECK(restricted_loss(t, p) == doctest::Approx((0.25 + 4.0) / 3.0));
  Image wrong(TensorShape{1, 3, 1});
  CHECK_THROWS_AS(restricted_loss(t, wrong), Error);
}

TEST_CASE("zero learning rate leaves parameters bitwise unchanged") {
  ArchConfig arch = tiny_arch();
  Model model = build_model<float>(arch, 9);
  Model before = model;
  TensorShape shape{3, 8, 8};
  NoiseBank bank = build_bank(10, 4, shape);
  NoiseSchedule s = build_schedule(10, ScheduleKind::Linear, 1e-3, 0.2);
  auto batch = make_batch<float>(arch, shape, 2, 11, bank.n, s.steps);
  OptState opt = OptState::sgd();
  double loss = train_step(model, batch, bank, s, opt, 0.0);
  CHECK(std::isfinite(loss));
  for (std::size_t i = 0; i < model.convs.size(); ++i) {
    CHECK((model.convs[i].weight.array() == before.convs[i].weight.array()).all());
    CHECK((model.convs[i].bias == before.convs[i].bias).all());
  }
}

TEST_CASE("one small sgd step decreases the loss on the same batch") {
  ArchConfig arch = tiny_arch();
  Model model = build_model<float>(arch, 12);
  Rng rng(13);
  for (auto& v : model.convs.back().weight.reshaped())
    v = static_cast<float>(rng.next_normal() * 0.05);
  TensorShape shape{3, 8, 8};
  NoiseBank bank = build_bank(14, 4, shape);
  NoiseSchedule s = build_schedule(10, ScheduleKind::Linear, 1e-3, 0.2);
  auto batch = make_batch<float>(arch, shape, 1, 15, bank.n, s.steps);
  OptState opt = OptState::sgd();
  double before = train_step(model, batch, bank, s, opt, 1e-4);
  OptState opt2 = OptState::sgd();
  double after = train_step(model, batch, bank, s, opt2, 0.0);
  CHECK(after < before);
}

TEST_CASE("training trajectories are reproducible") {
  auto run = [] {
    ArchConfig arch = tiny_arch();
    Model model = build_model<float>(arch, 16);
    TensorShape shape{3, 8, 8};
    NoiseBank bank = build_bank(17, 4, shape);
    NoiseSchedule s = build_schedule(10, ScheduleKind::Linear, 1e-3, 0.2);
    OptState opt = OptState::adam();
    std::vector<double> losses;
    for (int step = 0; step < 5; ++step) {
      auto batch = make_batch<float>(arch, shape, 2, 100 + step, bank.n, s.steps);
      losses.push_back(train_step(model, batch, bank, s, opt, 1e-3));
    }
    return losses;
  };
  auto a = run();
  auto b = run();
  CHECK(a == b);
}

TEST_CASE("thread count does not change the result") {
  ArchConfig arch = tiny_arch();
  TensorShape shape{3, 8, 8};
  NoiseBank bank = build_bank(18, 4, shape);
  NoiseSchedule s = build_schedule(10, ScheduleKind::Linear, 1e-3, 0.2);
  auto batch = make_batch<float>(arch, shape, 4, 19, bank.n, s.steps);

  Model m1 = build_model<float>(arch, 20);
  Model m2 = m1;
  OptState o1 = OptState::sgd(), o2 = OptState::sgd();
  double l1 = train_step(m1, batch, bank, s, o1, 1e-3, 1);
  double l2 = train_step(m2, batch, bank, s, o2, 1e-3, 4);
  CHECK(l1 == l2);
  for (std::size_t i = 0; i < m1.convs.size(); ++i)
    CHECK((m1.convs[i].weight.array() == m2.convs[i].weight.array()).all());
}

TEST_CASE("non-finite parameters raise a divergence error") {
  ArchConfig arch = tiny_arch();
  Model model = build_model<float>(arch, 21);
  model.convs[0].weight(0, 0) = std::numeric_limits<float>::quiet_NaN();
  TensorShape shape{3, 8, 8};
  NoiseBank bank = build_bank(22, 4, shape);
  NoiseSchedule s = build_schedule(10, ScheduleKind::Linear, 1e-3, 0.2);
  auto batch = make_batch<float>(arch, shape, 1, 23, bank.n, s.steps);
  OptState opt = OptState::sgd();
  CHECK_THROWS_AS(train_step(model, batch, bank, s, opt, 1e-3), DivergenceError);
}

TEST_CASE("gradient check against central finite differences") {
  ArchConfig arch = tiny_arch();
  ModelT<double> model = build_model<double>(arch, 24);
  Rng rng(25);
  for (auto& v : model.convs.back().weight.reshaped()) v = rng.next_normal() * 0.05;
  TensorShape shape{3, 8, 8};
  NoiseBank bank = build_bank(26, 4, shape);
  NoiseSchedule s = build_schedule(10, ScheduleKind::Linear, 1e-3, 0.2);
  auto batch = make_batch<double>(arch, shape, 2, 27, bank.n, s.steps);
  REQUIRE(model.param_count() <= 50000);

  double err = gradient_check(model, batch, bank, s);
  CHECK(err < 1e-4);

  GradientCheckOptions corrupt;
  corrupt.corrupt_tensor = 0;
  corrupt.num_coords = 200;
  CHECK(gradient_check(model, batch, bank, s, corrupt) > 0.1);
}

TEST_CASE("zero-gradient parameters agree with finite differences at 0") {
  // With the zero-initialized head, nothing flows into the earlier layers.
  ArchConfig arch = tiny_arch();
  ModelT<double> model = build_model<double>(arch, 28);
  TensorShape shape{3, 8, 8};
  NoiseBank bank = build_bank(29, 4, shape);
  NoiseSchedule s = build_schedule(10, ScheduleKind::Linear, 1e-3, 0.2);
  auto batch = make_batch<double>(arch, shape, 1, 30, bank.n, s.steps);
  CHECK(gradient_check(model, batch, bank, s) < 1e-4);
}

TEST_CASE("one-example overfit sanity") {
  ArchConfig arch;
  arch.image_channels = 3;
  arch.cond_channels = 4;
  arch.time_channels = 4;
  arch.base_channels = 8;
  arch.levels = 2;
  Model model = build_model<float>(arch, 31);
  TensorShape shape{3, 16, 16};
  NoiseBank bank = build_bank(32, 1, shape);
  NoiseSchedule s = build_schedule(10, ScheduleKind::Linear, 1e-3, 0.2);

  Rng rng(33);
  TrainBatch batch;
  batch.x0.push_back(rng.normal_image<float>(shape));
  batch.cond.push_back(rng.normal_image<float>(TensorShape{4, 16, 16}));
  batch.t.push_back(s.steps);
  batch.bank_index.push_back(0);

  OptState opt = OptState::adam();
  double min_loss = 1e9;
  int steps_needed = -1;
  for (int step = 0; step < 2000; ++step) {
    double loss = train_step(model, batch, bank, s, opt, 1e-3);
    if (loss < min_loss) min_loss = loss;
    if (min_loss < 1e-2) {
      steps_needed = step + 1;
      break;
    }
  }
  CHECK(min_loss < 1e-2);
  CHECK(steps_needed > 0);
}

TEST_CASE("checkpoints round-trip bitwise") {
  ArchConfig arch = tiny_arch(3);
  Model model = build_model<float>(arch, 34);
  Rng rng(35);
  for (auto& conv : model.convs)
    for (auto& v : conv.bias) v = static_cast<float>(rng.next_normal());
  const std::string path = "/tmp/nbdiff_test_ckpt.dgn";
  save_model(model, path);
  Model loaded = load_model(path);
  CHECK(loaded.cfg.base_channels == arch.base_channels);
  CHECK(loaded.cfg.levels == arch.levels);
  REQUIRE(loaded.convs.size() == model.convs.size());
  for (std::size_t i = 0; i < model.convs.size(); ++i) {
    CHECK((loaded.convs[i].weight.array() == model.convs[i].weight.array()).all());
    CHECK((loaded.convs[i].bias == model.convs[i].bias).all());
  }

  // Save-load-save produces identical bytes.
  const std::string path2 = "/tmp/nbdiff_test_ckpt2.dgn";
  save_model(loaded, path2);
  CHECK(io::read_file_bytes(path) == io::read_file_bytes(path2));

  auto bytes = io::read_file_bytes(path);
  bytes.resize(bytes.size() - 5);
  io::write_file_bytes(path, bytes);
  CHECK_THROWS_AS(load_model(path), FormatError);
  bytes[0] = 'Z';
  io::write_file_bytes(path, bytes);
  CHECK_THROWS_AS(load_model(path), FormatError);
  std::remove(path.c_str());
  std::remove(path2.c_str());
}
