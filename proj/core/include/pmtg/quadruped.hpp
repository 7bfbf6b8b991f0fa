#pragma once

// Reduced-order sagittal-plane quadruped. The body is a rigid bar with
// x, z and pitch; four massless legs sit on its centerline and are
// position-servoed in swing/extension coordinates. Feet touch a flat
// spring-damper ground with Coulomb-limited stiction. Roll does not exist
// in this model, so roll channels of the IMU read zero.
//
// Conventions: x forward, z up, pitch positive nose-up. A positive swing
// angle places the foot ahead of the hip. Leg length grows with extension:
// l = l0 + c_e (E - E_ref).

#include <array>
#include <cstdint>
#include <vector>

#include "pmtg/episode.hpp"
#include "pmtg/policy.hpp"
#include "pmtg/pointmass.hpp"
#include "pmtg/tg.hpp"

namespace pmtg {

struct BodyState {
  double x = 0.0;
  double z = 0.0;
  double pitch = 0.0;
  double vx = 0.0;
  double vz = 0.0;
  double pitch_rate = 0.0;
  double time = 0.0;
};

struct RobotModel {
  double mass = 6.0;
  double inertia = 0.1;
  std::array<double, kNumLegs> hip_offsets{0.2, 0.2, -0.2, -0.2};
  double leg_length = 0.25;        // l0, m
  double extension_gain = 0.1;     // c_e, m/rad
  double extension_reference = 1.2;  // E_ref, rad
  ActuatorLimits limits{};
  double servo_rate = 20.0;  // rad/s
  double gravity = 9.81;
  double fall_pitch = 0.8;            // rad
  double fall_height_fraction = 0.55;  // of l0

  void validate() const;
};

struct ContactModel {
  double normal_stiffness = 4000.0;
  double normal_damping = 40.0;
  double friction = 0.8;
  double tangential_stiffness = 4000.0;
  double tangential_damping = 40.0;

  void validate() const;
};

struct PerturbationSchedule {
  bool enabled = true;
  int count = 4;
  double duration = 0.2;       // s
  double max_vertical = 60.0;  // N
  double max_horizontal = 10.0;
};

struct TaskSpec {
  double v_max = 0.4;
  double episode_length = 25.0;
  // Ramp up ends, hold ends, ramp down ends (fractions of the episode).
  std::array<double, 3> profile_breakpoints{0.2, 0.45, 0.75};
  PerturbationSchedule perturbations{};
  double physics_dt = 0.001;
  double control_dt = 0.01;
  double reset_noise = 0.002;  // m
  // Window of the trailing average speed used for reward and tracking.
  double speed_window = 0.0;

  void validate() const;
};

// v_max * exp(-(v_R - v_T)^2 / (2 v_max^2))
double track_reward(double v_robot, double v_target, double v_max);

double speed_profile(double t, const TaskSpec& task);

struct PerturbationWindow {
  double start = 0.0;
  double end = 0.0;
  double fx = 0.0;
  double fz = 0.0;
};

struct PerturbationPlan {
  std::vector<PerturbationWindow> windows;
  Point2 force_at(double t) const;  // (Fx, Fz)
};

PerturbationPlan make_perturbation_plan(std::uint64_t seed, const PerturbationSchedule& schedule,
                                        double episode_length);
Point2 perturbation_force(double t, std::uint64_t seed, const PerturbationSchedule& schedule,
                          double episode_length);

bool fall_check(const BodyState& state, const RobotModel& model);

double leg_length(double extension, const RobotModel& model);
Point2 hip_position(const BodyState& body, double hip_offset);
// Throws ConfigError when the leg length would be non-positive.
Point2 foot_position(const BodyState& body, double hip_offset, double swing, double length);
Point2 foot_kinematics(const BodyState& body, std::size_t leg, double swing, double extension,
                       const RobotModel& model);

struct ContactState {
  bool active = false;
  double anchor_x = 0.0;
  Point2 force{};  // on the body, world frame
};

struct QuadrupedStep {
  std::array<double, 4> imu{};  // roll, pitch, roll_rate, pitch_rate
  double reward = 0.0;
  double forward_speed = 0.0;  // v_R used for the reward
  double target_speed = 0.0;
  bool done = false;
  bool fell = false;
};

class QuadrupedSim {
 public:
  QuadrupedSim(RobotModel model, ContactModel contact, TaskSpec task);

  // Standing pose: every joint at (swing_center, E_ref), body at
  // l0 cos(swing_center) minus seeded sinking noise, at rest.
  BodyState reset(std::uint64_t seed, double swing_center = 0.0);

  // One control period of physics substeps toward the given joint targets.
  QuadrupedStep step(const LegCommand& targets);

  // Single physics substep with the current servo targets.
  void substep();

  const BodyState& body() const { return body_; }
  void set_body(const BodyState& body) { body_ = body; }
  const LegCommand& joints() const { return joints_; }
  void set_joints(const LegCommand& joints);
  const std::array<ContactState, kNumLegs>& contacts() const { return contacts_; }
  // Sum of all forces on the body in the last substep, gravity included.
  Point2 net_force() const { return net_force_; }
  double mechanical_energy() const;
  const RobotModel& model() const { return model_; }
  const TaskSpec& task() const { return task_; }
  double current_target_speed() const;

 private:
  RobotModel model_;
  ContactModel contact_;
  TaskSpec task_;
  BodyState body_;
  LegCommand joints_;
  LegCommand targets_;
  std::array<ContactState, kNumLegs> contacts_{};
  PerturbationPlan perturbations_;
  Point2 net_force_{};
  std::vector<double> x_history_;  // body x at each control step
  int substeps_per_control_ = 10;
};

struct QuadrupedEpisodeConfig {
  RobotModel model;
  ContactModel contact;
  TaskSpec task;
  TgConfig tg;
  ActionBounds bounds;
  Wiring wiring = Wiring::kPmtg;  // vanilla_time is not defined for this task
};

// PMTG loop around the simulator. With the pmtg wiring the policy sees the
// 7-dim observation and emits 11 raw values; without the TG it sees 5 values
// (IMU and desired speed) and emits 8 joint positions directly, squashed
// into the range the TG plus feedback could reach.
class QuadrupedEpisode final : public Episode {
 public:
  explicit QuadrupedEpisode(QuadrupedEpisodeConfig cfg);

  std::size_t observation_dim() const override;
  std::size_t action_dim() const override;
  std::vector<double> reset(std::uint64_t seed) override;
  StepResult step(std::span<const double> raw_action) override;
  std::vector<std::string> trace_columns() const override;
  std::vector<double> trace_row() const override;
  EpisodeSummary summary() const override;

  const QuadrupedSim& sim() const { return sim_; }
  const TgState& tg_state() const { return tg_state_; }

 private:
  std::vector<double> observe(const std::array<double, 4>& imu) const;

  QuadrupedEpisodeConfig cfg_;
  QuadrupedSim sim_;
  TgState tg_state_;
  TgModulation last_mod_{};
  LegCommand last_command_{};
  QuadrupedStep last_step_{};
  double abs_error_sum_ = 0.0;
  std::size_t steps_ = 0;
  bool fell_ = false;
};

}  // namespace pmtg
