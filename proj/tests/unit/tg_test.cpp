#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "pmtg/errors.hpp"
#include "pmtg/tg.hpp"

using namespace pmtg;
using std::numbers::pi;

namespace {

constexpr double kTol = 1e-9;

TgConfig bound_cfg() {
  TgConfig c;
  c.swing_center = 0.0;
  c.extension_amplitude = 0.2;
  c.extension_asymmetry = 0.0;
  c.swing_fraction = 0.5;
  c.leg_phase_offsets = {0.0, 0.0, pi, pi};
  return c;
}

}  // namespace

TEST_SUITE("tg") {
  TEST_CASE("advance_phase examples") {
    CHECK(advance_phase({0.0}, 1.0, 0.01).phase == doctest::Approx(0.062831853).epsilon(1e-8));
    CHECK(std::abs(advance_phase({0.0}, 1.0, 0.01).phase - 2.0 * pi * 0.01) < kTol);
    CHECK(std::abs(advance_phase({pi}, 0.0, 0.01).phase - pi) < kTol);
    CHECK(std::abs(advance_phase({6.2}, 2.0, 0.05).phase - (6.2 + 2.0 * pi * 2.0 * 0.05 - 2.0 * pi)) < kTol);
  }

  TEST_CASE("advance_phase rejects bad input") {
    CHECK_THROWS_AS(advance_phase({0.0}, NAN, 0.01), NumericError);
    CHECK_THROWS_AS(advance_phase({INFINITY}, 1.0, 0.01), NumericError);
  }

  TEST_CASE("advance_phase stays wrapped and is additive") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * pi), freq(0.0, 5.0);
    for (int trial = 0; trial < 200; ++trial) {
      const double f = freq(rng);
      const double dt = 0.01;
      TgState s{phase(rng)};
      const TgState start = s;
      const int n = 1 + trial % 50;
      for (int k = 0; k < n; ++k) {
        s = advance_phase(s, f, dt);
        REQUIRE(s.phase >= 0.0);
        REQUIRE(s.phase < 2.0 * pi);
      }
      const TgState once = advance_phase(start, f, n * dt);
      CHECK(std::abs(wrap_angle(s.phase - once.phase + pi) - pi) < 1e-9);
    }
  }

  TEST_CASE("leg_phase examples") {
    CHECK(std::abs(leg_phase(1.0, pi) - 4.141593) < 1e-6);
    CHECK(std::abs(leg_phase(1.0, pi) - (1.0 + pi)) < kTol);
    CHECK(leg_phase(2.5, 0.0) == 2.5);
    CHECK(std::abs(leg_phase(1.5 * pi, pi) - 0.5 * pi) < kTol);
  }

  TEST_CASE("warp_time examples") {
    CHECK(std::abs(warp_time(pi / 2, 0.5) - pi / 2) < kTol);
    CHECK(warp_time(0.0, 0.3) == 0.0);
    CHECK(std::abs(warp_time(1.5 * pi, 0.25) - pi) < kTol);
    CHECK_THROWS_AS(warp_time(1.0, 0.0), ConfigError);
    CHECK_THROWS_AS(warp_time(1.0, 1.0), ConfigError);
  }

  TEST_CASE("warp_time continuity and monotonicity on a fine grid") {
    for (double beta : {0.2, 0.4, 0.5, 0.6, 0.8}) {
      CAPTURE(beta);
      const int n = 10000;
      const double eps = 1e-6;
      const double bound = eps / (2.0 * std::min(beta, 1.0 - beta)) + 1e-9;
      double prev = -1.0;
      for (int i = 0; i < n; ++i) {
        const double phi = 2.0 * pi * i / n;
        const double t = warp_time(phi, beta);
        REQUIRE(t >= prev);
        prev = t;
        if (phi + eps < 2.0 * pi) REQUIRE(std::abs(warp_time(phi + eps, beta) - t) <= bound);
      }
      // branch boundary maps to π
      CHECK(std::abs(warp_time(2.0 * pi * (1.0 - beta), beta) - pi) < kTol);
      // right endpoint approaches 2π
      CHECK(warp_time(std::nextafter(2.0 * pi, 0.0), beta) == doctest::Approx(2.0 * pi));
    }
  }

  TEST_CASE("warp_time is the identity at beta 0.5") {
    for (int i = 0; i < 1000; ++i) {
      const double phi = 2.0 * pi * i / 1000;
      CHECK(warp_time(phi, 0.5) == doctest::Approx(phi).epsilon(1e-15));
    }
  }

  TEST_CASE("tg_leg_targets examples") {
    TgConfig c;
    c.swing_center = 0.1;
    c.extension_amplitude = 0.0;
    c.extension_asymmetry = 0.0;
    for (double phase : {0.0, 1.0, 4.0}) {
      const LegCommand cmd = tg_leg_targets({phase}, {1.0, 0.0, 1.0}, c);
      for (const LegTarget& leg : cmd.legs) {
        CHECK(std::abs(leg.swing - 0.1) < kTol);
        CHECK(std::abs(leg.extension - 1.0) < kTol);
      }
    }

    const TgConfig b = bound_cfg();
    const TgModulation mod{1.0, 0.3, 1.0};
    const LegCommand at0 = tg_leg_targets({0.0}, mod, b);
    for (std::size_t leg : {0u, 1u}) {
      CHECK(std::abs(at0.legs[leg].swing - 0.3) < kTol);
      CHECK(std::abs(at0.legs[leg].extension - 1.0) < kTol);
    }
    for (std::size_t leg : {2u, 3u}) {
      CHECK(std::abs(at0.legs[leg].swing + 0.3) < kTol);
      CHECK(std::abs(at0.legs[leg].extension - 1.0) < kTol);
    }
    const LegCommand quarter = tg_leg_targets({pi / 2}, mod, b);
    for (std::size_t leg : {0u, 1u}) {
      CHECK(std::abs(quarter.legs[leg].swing) < kTol);
      CHECK(std::abs(quarter.legs[leg].extension - 1.2) < kTol);
    }
  }

  TEST_CASE("tg_leg_targets matches a direct evaluation") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 500; ++trial) {
      TgConfig c;
      c.swing_center = u(rng) - 0.5;
      c.extension_amplitude = u(rng);
      c.extension_asymmetry = 0.2 * (u(rng) - 0.5);
      c.swing_fraction = 0.1 + 0.8 * u(rng);
      for (std::size_t i = 1; i < kNumLegs; ++i) c.leg_phase_offsets[i] = 2.0 * pi * u(rng) * 0.999;
      const TgModulation mod{3.0 * u(rng), 0.6 * u(rng), 0.8 + 0.8 * u(rng)};
      const double phase = 2.0 * pi * u(rng) * 0.999;
      const LegCommand cmd = tg_leg_targets({phase}, mod, c);
      for (std::size_t i = 0; i < kNumLegs; ++i) {
        double phi = std::fmod(phase + c.leg_phase_offsets[i], 2.0 * pi);
        const double beta = c.swing_fraction;
        const double t = phi < 2.0 * pi * (1.0 - beta) ? phi / (2.0 * (1.0 - beta))
                                                       : 2.0 * pi - (2.0 * pi - phi) / (2.0 * beta);
        CHECK(cmd.legs[i].swing == doctest::Approx(c.swing_center + mod.swing_amplitude * std::cos(t)).epsilon(1e-12));
        CHECK(cmd.legs[i].extension ==
              doctest::Approx(mod.walking_height + c.extension_amplitude * std::sin(t) +
                              c.extension_asymmetry * std::cos(t))
                  .epsilon(1e-12));
      }
    }
  }

  TEST_CASE("legs with equal offsets get identical commands") {
    const TgConfig b = bound_cfg();
    for (int i = 0; i < 100; ++i) {
      const LegCommand cmd = tg_leg_targets({2.0 * pi * i / 100}, {1.0, 0.4, 1.1}, b);
      CHECK(cmd.legs[0].swing == cmd.legs[1].swing);
      CHECK(cmd.legs[0].extension == cmd.legs[1].extension);
      CHECK(cmd.legs[2].swing == cmd.legs[3].swing);
      CHECK(cmd.legs[2].extension == cmd.legs[3].extension);
    }
  }

  TEST_CASE("figure_eight examples") {
    const Point2 a = figure_eight(0.0, 1.0, 1.0);
    CHECK(std::abs(a.x) < kTol);
    CHECK(std::abs(a.y) < kTol);
    const Point2 b = figure_eight(0.25, 0.8, 0.6);
    CHECK(std::abs(b.x - 0.8) < kTol);
    CHECK(std::abs(b.y) < kTol);
    const Point2 c = figure_eight(0.125, 1.0, 1.0);
    CHECK(std::abs(c.x - std::sqrt(0.5)) < kTol);
    CHECK(std::abs(c.y - 0.25) < kTol);
  }

  TEST_CASE("figure_eight periodicity, symmetry and bounds") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int i = 0; i < 1000; ++i) {
      const double t = u(rng), ax = u(rng), ay = u(rng);
      const Point2 p = figure_eight(t, ax, ay);
      const Point2 period = figure_eight(t + 1.0, ax, ay);
      CHECK(std::abs(period.x - p.x) < 1e-9);
      CHECK(std::abs(period.y - p.y) < 1e-9);
      const Point2 odd = figure_eight(-t, ax, ay);
      CHECK(std::abs(odd.x + p.x) < 1e-12);
      CHECK(std::abs(odd.y + p.y) < 1e-12);
      const Point2 half = figure_eight(t + 0.5, ax, ay);
      CHECK(std::abs(half.x + p.x) < 1e-9);
      CHECK(std::abs(half.y - p.y) < 1e-9);
      CHECK(std::abs(p.x) <= std::abs(ax) + 1e-15);
      CHECK(std::abs(p.y) <= std::abs(ay) / 4.0 + 1e-15);
    }
  }

  TEST_CASE("gait_table") {
    const TgConfig bound = gait_table("bound");
    CHECK(bound.leg_phase_offsets == std::array<double, 4>{0.0, 0.0, pi, pi});
    const TgConfig walk = gait_table("walk");
    CHECK(walk.leg_phase_offsets == std::array<double, 4>{0.0, pi, pi, 0.0});
    CHECK(walk.swing_fraction == 0.5);
    CHECK(bound.swing_fraction == 0.4);
    CHECK(walk.extension_amplitude == 0.35);
    CHECK_THROWS_AS(gait_table("trot"), ConfigError);
  }

  TEST_CASE("TgConfig validation") {
    TgConfig c;
    CHECK_NOTHROW(c.validate());
    c.swing_fraction = 1.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = TgConfig{};
    c.leg_phase_offsets[0] = 0.1;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = TgConfig{};
    c.leg_phase_offsets[2] = 2.0 * pi;
    CHECK_THROWS_AS(c.validate(), ConfigError);
  }
}
