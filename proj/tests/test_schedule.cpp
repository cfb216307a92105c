#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nbdiff/schedule.hpp"
#include "support/oracles.hpp"

using namespace nbdiff;

TEST_CASE("single-step schedule") {
  NoiseSchedule s = build_schedule(1, ScheduleKind::Linear, 0.5, 0.5);
  CHECK(s.steps == 1);
  CHECK(s.betas[0] == doctest::Approx(0.5));
  CHECK(s.alpha_bars[0] == doctest::Approx(0.5));
}

TEST_CASE("two-step running product") {
  NoiseSchedule s = build_schedule(2, ScheduleKind::Linear, 0.1, 0.3);
  CHECK(s.alpha_bars[0] == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(s.alpha_bars[1] == doctest::Approx(0.63).epsilon(1e-12));
}

TEST_CASE("alpha_bar matches the direct product oracle to 1e-12 relative") {
  NoiseSchedule s = build_schedule(100, ScheduleKind::Linear, 1e-4, 0.02);
  auto betas = oracles::linear_betas(100, 1e-4, 0.02);
  for (int t = 1; t <= 100; ++t) {
    double expect = oracles::alpha_bar_product(betas, t);
    CHECK(std::abs(s.alpha_bar(t) - expect) / expect < 1e-12);
  }
}

TEST_CASE("schedule invariants") {
  NoiseSchedule s = build_schedule(50, ScheduleKind::Linear, 1e-3, 0.1);
  for (int t = 1; t <= 50; ++t) {
    CHECK(s.beta(t) > 0.0);
    CHECK(s.beta(t) < 1.0);
    CHECK(s.alpha(t) == 1.0 - s.beta(t));
    CHECK(s.alpha_bar(t) > 0.0);
    CHECK(s.alpha_bar(t) <= 1.0);
    if (t > 1) {
      CHECK(s.alpha_bar(t) < s.alpha_bar(t - 1));
      CHECK(s.alpha_bar(t) == s.alpha_bar(t - 1) * s.alpha(t));
    }
  }
}

TEST_CASE("invalid configurations are rejected") {
  CHECK_THROWS_AS(build_schedule(0, ScheduleKind::Linear, 0.1, 0.2), ConfigError);
  CHECK_THROWS_AS(build_schedule(10, ScheduleKind::Linear, 0.0, 0.2), ConfigError);
  CHECK_THROWS_AS(build_schedule(10, ScheduleKind::Linear, -0.1, 0.2), ConfigError);
  CHECK_THROWS_AS(build_schedule(10, ScheduleKind::Linear, 0.1, 1.0), ConfigError);
  CHECK_THROWS_AS(build_schedule(10, ScheduleKind::Linear, 0.3, 0.2), ConfigError);
}

TEST_CASE("step index bounds") {
  NoiseSchedule s = build_schedule(10, ScheduleKind::Linear, 0.01, 0.2);
  CHECK_THROWS_AS(s.beta(0), Error);
  CHECK_THROWS_AS(s.beta(11), Error);
  CHECK_NOTHROW(s.beta(1));
  CHECK_NOTHROW(s.beta(10));
}
