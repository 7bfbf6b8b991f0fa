#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "pmtg/errors.hpp"
#include "pmtg/quadruped.hpp"
#include "pmtg/rollout.hpp"

using namespace pmtg;
using std::numbers::pi;

namespace {

TaskSpec quiet_task() {
  TaskSpec t;
  t.perturbations.enabled = false;
  t.reset_noise = 0.0;
  return t;
}

LegCommand standing(const RobotModel& m) {
  LegCommand c;
  for (auto& leg : c.legs) leg = {0.0, m.extension_reference};
  return c;
}

}  // namespace

TEST_SUITE("quadruped") {
  TEST_CASE("track_reward examples") {
    CHECK(std::abs(track_reward(0.4, 0.4, 0.4) - 0.4) < 1e-9);
    CHECK(std::abs(track_reward(0.0, 0.4, 0.4) - 0.242612) < 1e-6);
    CHECK(std::abs(track_reward(0.0, 0.4, 0.4) - 0.4 * std::exp(-0.5)) < 1e-12);
    CHECK(std::abs(track_reward(0.4, 0.48, 0.4) - 0.392079) < 1e-6);
    CHECK(std::abs(track_reward(0.4, 0.48, 0.4) - 0.4 * std::exp(-0.02)) < 1e-12);
    for (double v_max : {0.4, 0.8}) {
      CHECK(track_reward(v_max, 0.8 * v_max, v_max) >= 0.98 * v_max);
      CHECK(track_reward(0.0, 0.2 * v_max, v_max) >= 0.98 * v_max);
    }
    CHECK_THROWS_AS(track_reward(0.0, 0.0, 0.0), ConfigError);
  }

  TEST_CASE("track_reward is bounded and strictly decreasing in the error") {
    const double v_max = 0.4;
    double prev = track_reward(0.3, 0.3, v_max);
    CHECK(prev == v_max);
    for (int i = 1; i <= 400; ++i) {
      const double err = 0.005 * i;
      const double r = track_reward(0.3 + err, 0.3, v_max);
      CHECK(r > 0.0);
      CHECK(r < prev);
      CHECK(track_reward(0.3 - err, 0.3, v_max) == doctest::Approx(r).epsilon(1e-14));
      prev = r;
    }
  }

  TEST_CASE("speed_profile") {
    TaskSpec t;
    CHECK(speed_profile(0.0, t) == 0.0);
    CHECK(speed_profile(0.5 * (0.2 + 0.45) * t.episode_length, t) == t.v_max);
    CHECK(speed_profile(t.episode_length, t) == 0.0);
    CHECK(speed_profile(0.1 * t.episode_length, t) == doctest::Approx(0.5 * t.v_max));
    CHECK(speed_profile(0.6 * t.episode_length, t) == doctest::Approx(0.5 * t.v_max));
    CHECK(speed_profile(0.9 * t.episode_length, t) == 0.0);
    for (int i = 0; i <= 1000; ++i) {
      const double v = speed_profile(t.episode_length * i / 1000.0, t);
      CHECK(v >= 0.0);
      CHECK(v <= t.v_max);
    }
  }

  TEST_CASE("perturbations respect bounds and are deterministic") {
    PerturbationSchedule s;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      const PerturbationPlan plan = make_perturbation_plan(seed, s, 25.0);
      CHECK(plan.windows.size() == 4);
      for (const auto& w : plan.windows) {
        CHECK(std::abs(w.fz) <= 60.0);
        CHECK(std::abs(w.fx) <= 10.0);
        CHECK(w.end - w.start == doctest::Approx(0.2));
        CHECK(w.start >= 0.0);
        CHECK(w.end <= 25.0 + 1e-12);
      }
      for (int i = 0; i < 2500; ++i) {
        const double t = 0.01 * i;
        const Point2 f = perturbation_force(t, seed, s, 25.0);
        CHECK(std::abs(f.y) <= 60.0);
        CHECK(std::abs(f.x) <= 10.0);
        bool inside = false;
        for (const auto& w : plan.windows) inside = inside || (t >= w.start && t < w.end);
        if (!inside) {
          CHECK(f.x == 0.0);
          CHECK(f.y == 0.0);
        }
      }
      const PerturbationPlan again = make_perturbation_plan(seed, s, 25.0);
      for (std::size_t i = 0; i < plan.windows.size(); ++i) {
        CHECK(again.windows[i].start == plan.windows[i].start);
        CHECK(again.windows[i].fx == plan.windows[i].fx);
        CHECK(again.windows[i].fz == plan.windows[i].fz);
      }
    }
    s.enabled = false;
    CHECK(make_perturbation_plan(1, s, 25.0).windows.empty());
  }

  TEST_CASE("fall_check examples") {
    const RobotModel m;
    BodyState b;
    b.z = m.leg_length;
    CHECK_FALSE(fall_check(b, m));
    b.pitch = pi / 2;
    CHECK(fall_check(b, m));
    b.pitch = 0.0;
    b.z = 0.1 * m.leg_length;
    CHECK(fall_check(b, m));
  }

  TEST_CASE("foot kinematics against a geometric oracle") {
    BodyState b;
    b.z = 0.25;
    const Point2 a = foot_position(b, 0.2, 0.0, 0.25);
    CHECK(std::abs(a.x - 0.2) < 1e-12);
    CHECK(std::abs(a.y) < 1e-12);
    const Point2 c = foot_position(b, 0.2, pi / 6, 0.25);
    CHECK(std::abs(c.x - 0.325) < 1e-9);
    CHECK(std::abs(c.y - 0.033494) < 1e-6);

    // rotating the body by π mirrors the hip-to-foot vector through the hip
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 100; ++i) {
      BodyState body;
      body.x = u(rng);
      body.z = 0.5 + u(rng);
      body.pitch = u(rng);
      const double h = 0.2 * u(rng), s = u(rng), l = 0.2 + 0.1 * u(rng);
      const Point2 hip = hip_position(body, h);
      const Point2 foot = foot_position(body, h, s, l);
      // oracle: hip plus the rotated leg vector, built from polar form
      const double angle = body.pitch + s - pi / 2;
      CHECK(foot.x == doctest::Approx(hip.x + l * std::cos(angle)).epsilon(1e-12));
      CHECK(foot.y == doctest::Approx(hip.y + l * std::sin(angle)).epsilon(1e-12));

      BodyState flipped = body;
      flipped.pitch += pi;
      const Point2 hip_f = hip_position(flipped, h);
      const Point2 foot_f = foot_position(flipped, h, s, l);
      CHECK(foot_f.x - hip_f.x == doctest::Approx(-(foot.x - hip.x)).epsilon(1e-9));
      CHECK(foot_f.y - hip_f.y == doctest::Approx(-(foot.y - hip.y)).epsilon(1e-9));
    }
    CHECK_THROWS_AS(foot_position(b, 0.2, 0.0, 0.0), ConfigError);
  }

  TEST_CASE("leg length grows with extension") {
    const RobotModel m;
    CHECK(leg_length(m.extension_reference, m) == m.leg_length);
    CHECK(leg_length(m.extension_reference + 0.5, m) > m.leg_length);
    BodyState b;
    b.z = 0.25;
    const Point2 f = foot_kinematics(b, 0, 0.0, m.extension_reference, m);
    CHECK(std::abs(f.y) < 1e-12);
  }

  TEST_CASE("reset") {
    QuadrupedSim sim(RobotModel{}, ContactModel{}, quiet_task());
    const BodyState b = sim.reset(3);
    CHECK(b.z == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(b.vx == 0.0);
    CHECK(b.vz == 0.0);
    CHECK(b.pitch == 0.0);

    QuadrupedSim noisy(RobotModel{}, ContactModel{}, TaskSpec{});
    const BodyState n1 = noisy.reset(8);
    const BodyState n2 = noisy.reset(8);
    CHECK(n1.z == n2.z);
    CHECK(n1.z <= 0.25);
  }

  TEST_CASE("airborne body falls freely and conserves energy") {
    QuadrupedSim sim(RobotModel{}, ContactModel{}, quiet_task());
    sim.reset(0);
    BodyState b = sim.body();
    b.z = 10.0;
    b.vx = 0.3;
    b.vz = 1.0;
    b.pitch_rate = 0.5;
    sim.set_body(b);
    const double g = sim.model().gravity;
    const double dt = sim.task().physics_dt;
    const double e0 = sim.mechanical_energy();
    for (int i = 0; i < 1000; ++i) {
      const double vz = sim.body().vz;
      sim.substep();
      CHECK(sim.body().vz == doctest::Approx(vz - g * dt).epsilon(1e-12));
      for (const auto& c : sim.contacts()) CHECK_FALSE(c.active);
    }
    const double drift = std::abs(sim.mechanical_energy() - e0) / std::abs(e0);
    CHECK(drift < 1e-3);
  }

  TEST_CASE("contact forces stay inside the friction cone") {
    QuadrupedEpisodeConfig cfg;
    cfg.task.episode_length = 3.0;
    QuadrupedEpisode ep(cfg);
    std::mt19937_64 rng(23);
    std::normal_distribution<double> g(0.0, 1.5);
    const double mu = ContactModel{}.friction;
    for (int episode = 0; episode < 5; ++episode) {
      ep.reset(episode);
      bool done = false;
      while (!done) {
        std::vector<double> raw(ep.action_dim());
        for (double& r : raw) r = g(rng);
        done = ep.step(raw).done;
        for (const auto& c : ep.sim().contacts()) {
          CHECK(c.force.y >= 0.0);
          CHECK(std::abs(c.force.x) <= mu * c.force.y + 1e-9);
        }
      }
    }
  }

  TEST_CASE("standing robot settles into static equilibrium") {
    QuadrupedSim sim(RobotModel{}, ContactModel{}, quiet_task());
    sim.reset(0);
    const LegCommand stand = standing(sim.model());
    QuadrupedStep last;
    for (int i = 0; i < 500; ++i) last = sim.step(stand);
    CHECK_FALSE(last.fell);
    const Point2 f = sim.net_force();
    CHECK(std::hypot(f.x, f.y) < 1e-6);
    CHECK(std::abs(sim.body().pitch) < 1e-6);
  }

  TEST_CASE("step reports a fall as soon as pitch exceeds the threshold") {
    QuadrupedSim sim(RobotModel{}, ContactModel{}, quiet_task());
    sim.reset(0);
    BodyState b = sim.body();
    b.pitch = 0.9;
    sim.set_body(b);
    const QuadrupedStep s = sim.step(standing(sim.model()));
    CHECK(s.fell);
    CHECK(s.done);
    CHECK(s.imu[0] == 0.0);
    CHECK(s.imu[2] == 0.0);
  }

  TEST_CASE("identical seeds give bit-identical trajectories") {
    QuadrupedEpisodeConfig cfg;
    cfg.task.episode_length = 2.0;
    PolicyParams p = PolicyParams::random_init(PolicyShape{}, 4);
    for (double& v : p.flat) v *= 5.0;
    QuadrupedEpisode a(cfg), b(cfg);
    RolloutOptions o;
    o.record_trace = true;
    const RolloutRecord ra = rollout(p, a, 12, o);
    const RolloutRecord rb = rollout(p, b, 12, o);
    CHECK(ra.trace == rb.trace);
    CHECK(ra.rewards == rb.rewards);
    CHECK(ra.episode_return == rb.episode_return);
    const RolloutRecord rc = rollout(p, a, 13, o);
    CHECK(rc.trace != ra.trace);
  }

  TEST_CASE("episode wiring") {
    QuadrupedEpisodeConfig cfg;
    CHECK(QuadrupedEpisode(cfg).observation_dim() == 7);
    CHECK(QuadrupedEpisode(cfg).action_dim() == 11);
    cfg.wiring = Wiring::kVanilla;
    CHECK(QuadrupedEpisode(cfg).observation_dim() == 5);
    CHECK(QuadrupedEpisode(cfg).action_dim() == 8);
    cfg.wiring = Wiring::kVanillaTime;
    CHECK_THROWS_AS(QuadrupedEpisode{cfg}, ConfigError);
  }

  TEST_CASE("config validation") {
    TaskSpec t;
    t.control_dt = 0.0105;
    CHECK_THROWS_AS(t.validate(), ConfigError);
    RobotModel m;
    m.mass = 0.0;
    CHECK_THROWS_AS(m.validate(), ConfigError);
  }
}
