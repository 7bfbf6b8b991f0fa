#include "pmtg/quadruped.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pmtg/errors.hpp"
#include "pmtg/seeding.hpp"

namespace pmtg {

void RobotModel::validate() const {
  if (!(mass > 0.0)) throw ConfigError("env.quadruped.model.mass must be positive");
  if (!(inertia > 0.0)) throw ConfigError("env.quadruped.model.inertia must be positive");
  if (!(leg_length > 0.0)) throw ConfigError("env.quadruped.model.leg_length must be positive");
  if (!(extension_gain > 0.0)) throw ConfigError("env.quadruped.model.extension_gain must be positive");
  if (!(servo_rate > 0.0)) throw ConfigError("env.quadruped.model.servo_rate must be positive");
  if (!(limits.swing_lo < limits.swing_hi) || !(limits.extension_lo < limits.extension_hi)) {
    throw ConfigError("env.quadruped.model actuator limits need lo < hi");
  }
  if (leg_length + extension_gain * (limits.extension_lo - extension_reference) <= 0.0) {
    throw ConfigError("extension lower limit yields a non-positive leg length");
  }
}

void ContactModel::validate() const {
  if (normal_stiffness < 0.0 || normal_damping < 0.0 || friction < 0.0 || tangential_stiffness <= 0.0 ||
      tangential_damping < 0.0) {
    throw ConfigError("env.quadruped.contact coefficients must be non-negative");
  }
}

void TaskSpec::validate() const {
  if (!(v_max > 0.0)) throw ConfigError("env.quadruped.task.v_max must be positive");
  if (!(episode_length > 0.0)) throw ConfigError("env.quadruped.task.episode_length must be positive");
  const auto& b = profile_breakpoints;
  if (!(0.0 < b[0] && b[0] <= b[1] && b[1] < b[2] && b[2] <= 1.0)) {
    throw ConfigError("env.quadruped.task.profile_breakpoints must be increasing fractions in (0, 1]");
  }
  if (!(physics_dt > 0.0) || !(control_dt >= physics_dt)) {
    throw ConfigError("env.quadruped.task needs 0 < physics_dt <= control_dt");
  }
  const double ratio = control_dt / physics_dt;
  if (std::abs(ratio - std::round(ratio)) > 1e-9) {
    throw ConfigError("env.quadruped.task.control_dt must be a multiple of physics_dt");
  }
  if (perturbations.count < 0 || perturbations.duration < 0.0) {
    throw ConfigError("env.quadruped.task.perturbations needs non-negative count and duration");
  }
}

double track_reward(double v_robot, double v_target, double v_max) {
  if (!(v_max > 0.0)) throw ConfigError("v_max must be positive");
  const double e = v_robot - v_target;
  return v_max * std::exp(-(e * e) / (2.0 * v_max * v_max));
}

double speed_profile(double t, const TaskSpec& task) {
  const double T = task.episode_length;
  const double up = task.profile_breakpoints[0] * T;
  const double hold = task.profile_breakpoints[1] * T;
  const double down = task.profile_breakpoints[2] * T;
  if (t <= 0.0 || t >= down) return 0.0;
  if (t < up) return task.v_max * t / up;
  if (t <= hold) return task.v_max;
  return task.v_max * (down - t) / (down - hold);
}

Point2 PerturbationPlan::force_at(double t) const {
  for (const auto& w : windows) {
    if (t >= w.start && t < w.end) return {w.fx, w.fz};
  }
  return {};
}

PerturbationPlan make_perturbation_plan(std::uint64_t seed, const PerturbationSchedule& schedule,
                                        double episode_length) {
  PerturbationPlan plan;
  if (!schedule.enabled || schedule.count <= 0) return plan;
  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double latest = std::max(0.0, episode_length - schedule.duration);
  for (int i = 0; i < schedule.count; ++i) {
    PerturbationWindow w;
    w.start = latest * unit(rng);
    w.end = w.start + schedule.duration;
    const double fz = schedule.max_vertical * unit(rng);
    const double fx = schedule.max_horizontal * unit(rng);
    w.fz = unit(rng) < 0.5 ? -fz : fz;
    w.fx = unit(rng) < 0.5 ? -fx : fx;
    plan.windows.push_back(w);
  }
  std::sort(plan.windows.begin(), plan.windows.end(),
            [](const PerturbationWindow& a, const PerturbationWindow& b) { return a.start < b.start; });
  return plan;
}

Point2 perturbation_force(double t, std::uint64_t seed, const PerturbationSchedule& schedule,
                          double episode_length) {
  return make_perturbation_plan(seed, schedule, episode_length).force_at(t);
}

bool fall_check(const BodyState& state, const RobotModel& model) {
  return std::abs(state.pitch) > model.fall_pitch ||
         state.z < model.fall_height_fraction * model.leg_length;
}

double leg_length(double extension, const RobotModel& model) {
  return model.leg_length + model.extension_gain * (extension - model.extension_reference);
}

Point2 hip_position(const BodyState& body, double hip_offset) {
  return {body.x + hip_offset * std::cos(body.pitch), body.z + hip_offset * std::sin(body.pitch)};
}

Point2 foot_position(const BodyState& body, double hip_offset, double swing, double length) {
  if (!(length > 0.0)) throw ConfigError("leg length must be positive");
  const double c = std::cos(body.pitch);
  const double s = std::sin(body.pitch);
  const double bx = hip_offset + length * std::sin(swing);
  const double bz = -length * std::cos(swing);
  return {body.x + c * bx - s * bz, body.z + s * bx + c * bz};
}

Point2 foot_kinematics(const BodyState& body, std::size_t leg, double swing, double extension,
                       const RobotModel& model) {
  if (leg >= kNumLegs) throw ConfigError("leg index out of range");
  return foot_position(body, model.hip_offsets[leg], swing, leg_length(extension, model));
}

QuadrupedSim::QuadrupedSim(RobotModel model, ContactModel contact, TaskSpec task)
    : model_(model), contact_(contact), task_(task) {
  model_.validate();
  contact_.validate();
  task_.validate();
  substeps_per_control_ = static_cast<int>(std::lround(task_.control_dt / task_.physics_dt));
}

BodyState QuadrupedSim::reset(std::uint64_t seed, double swing_center) {
  Rng rng = make_rng(derive_seed(seed, "reset"));
  std::normal_distribution<double> noise(0.0, 1.0);
  body_ = BodyState{};
  body_.z = model_.leg_length * std::cos(swing_center);
  if (task_.reset_noise > 0.0) body_.z -= std::abs(task_.reset_noise * noise(rng));
  for (auto& leg : joints_.legs) leg = {swing_center, model_.extension_reference};
  targets_ = joints_;
  contacts_ = {};
  net_force_ = {};
  perturbations_ = make_perturbation_plan(derive_seed(seed, "perturb"), task_.perturbations,
                                          task_.episode_length);
  x_history_.assign(1, body_.x);
  return body_;
}

void QuadrupedSim::set_joints(const LegCommand& joints) {
  joints_ = joints;
  targets_ = joints;
}

double QuadrupedSim::current_target_speed() const { return speed_profile(body_.time, task_); }

double QuadrupedSim::mechanical_energy() const {
  return 0.5 * model_.mass * (body_.vx * body_.vx + body_.vz * body_.vz) +
         0.5 * model_.inertia * body_.pitch_rate * body_.pitch_rate + model_.mass * model_.gravity * body_.z;
}

void QuadrupedSim::substep() {
  const double dt = task_.physics_dt;
  const double max_delta = model_.servo_rate * dt;
  const double c = std::cos(body_.pitch);
  const double s = std::sin(body_.pitch);

  double fx_total = 0.0;
  double fz_total = 0.0;
  double torque = 0.0;
  for (std::size_t i = 0; i < kNumLegs; ++i) {
    LegTarget& joint = joints_.legs[i];
    const LegTarget& target = targets_.legs[i];
    const double d_swing = std::clamp(target.swing - joint.swing, -max_delta, max_delta);
    const double d_ext = std::clamp(target.extension - joint.extension, -max_delta, max_delta);
    joint.swing += d_swing;
    joint.extension += d_ext;

    const double l = leg_length(joint.extension, model_);
    if (!(l > 0.0)) throw SimulationError("leg length became non-positive");
    const double ss = std::sin(joint.swing);
    const double cs = std::cos(joint.swing);
    const double h = model_.hip_offsets[i];
    // Foot relative to the body center, body frame then world frame.
    const double bx = h + l * ss;
    const double bz = -l * cs;
    const double rx = c * bx - s * bz;
    const double rz = s * bx + c * bz;
    const double foot_x = body_.x + rx;
    const double foot_z = body_.z + rz;
    // Leg joint rates contribute in the body frame.
    const double dl = model_.extension_gain * d_ext / dt;
    const double dswing = d_swing / dt;
    const double lbx = dl * ss + l * cs * dswing;
    const double lbz = -dl * cs + l * ss * dswing;
    const double foot_vx = body_.vx - body_.pitch_rate * rz + c * lbx - s * lbz;
    const double foot_vz = body_.vz + body_.pitch_rate * rx + s * lbx + c * lbz;

    ContactState& contact = contacts_[i];
    if (foot_z < 0.0) {
      if (!contact.active) {
        contact.active = true;
        contact.anchor_x = foot_x;
      }
      const double normal =
          std::max(0.0, -contact_.normal_stiffness * foot_z - contact_.normal_damping * foot_vz);
      double tangential = -contact_.tangential_stiffness * (foot_x - contact.anchor_x) -
                          contact_.tangential_damping * foot_vx;
      const double limit = contact_.friction * normal;
      if (std::abs(tangential) > limit) {
        tangential = std::copysign(limit, tangential);
        contact.anchor_x = foot_x + tangential / contact_.tangential_stiffness;
      }
      contact.force = {tangential, normal};
    } else {
      contact = ContactState{};
    }
    fx_total += contact.force.x;
    fz_total += contact.force.y;
    // Forces act on the body at the hip.
    const double hx = c * h;
    const double hz = s * h;
    torque += hx * contact.force.y - hz * contact.force.x;
  }

  const Point2 push = perturbations_.force_at(body_.time);
  fx_total += push.x;
  fz_total += push.y;
  const double weight = model_.mass * model_.gravity;
  net_force_ = {fx_total, fz_total - weight};

  // Semi-implicit Euler; the constant gravity term is integrated exactly.
  body_.vx += fx_total / model_.mass * dt;
  body_.vz += (fz_total - weight) / model_.mass * dt;
  body_.pitch_rate += torque / model_.inertia * dt;
  body_.x += body_.vx * dt;
  body_.z += body_.vz * dt + 0.5 * model_.gravity * dt * dt;
  body_.pitch += body_.pitch_rate * dt;
  body_.time += dt;
}

QuadrupedStep QuadrupedSim::step(const LegCommand& targets) {
  const auto& lim = model_.limits;
  for (std::size_t i = 0; i < kNumLegs; ++i) {
    require_finite(targets.legs[i].swing, "swing target");
    require_finite(targets.legs[i].extension, "extension target");
    targets_.legs[i].swing = std::clamp(targets.legs[i].swing, lim.swing_lo, lim.swing_hi);
    targets_.legs[i].extension = std::clamp(targets.legs[i].extension, lim.extension_lo, lim.extension_hi);
  }
  for (int k = 0; k < substeps_per_control_; ++k) substep();
  const BodyState& b = body_;
  if (!std::isfinite(b.x) || !std::isfinite(b.z) || !std::isfinite(b.pitch) || !std::isfinite(b.vx) ||
      !std::isfinite(b.vz) || !std::isfinite(b.pitch_rate)) {
    throw SimulationError("non-finite body state at t=" + std::to_string(b.time));
  }
  x_history_.push_back(b.x);

  QuadrupedStep out;
  out.imu = {0.0, b.pitch, 0.0, b.pitch_rate};
  const std::size_t n = x_history_.size() - 1;
  const std::size_t window = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround(task_.speed_window / task_.control_dt)));
  const std::size_t span = std::min(window, n);
  out.forward_speed = (x_history_[n] - x_history_[n - span]) / (static_cast<double>(span) * task_.control_dt);
  out.target_speed = speed_profile(b.time, task_);
  out.reward = track_reward(out.forward_speed, out.target_speed, task_.v_max);
  out.fell = fall_check(b, model_);
  out.done = out.fell || b.time >= task_.episode_length - 0.5 * task_.physics_dt;
  return out;
}

QuadrupedEpisode::QuadrupedEpisode(QuadrupedEpisodeConfig cfg)
    : cfg_(std::move(cfg)), sim_(cfg_.model, cfg_.contact, cfg_.task) {
  cfg_.tg.validate();
  cfg_.bounds.validate();
  if (cfg_.wiring == Wiring::kVanillaTime) {
    throw ConfigError("env.wiring vanilla_time is only defined for the point-mass task");
  }
}

std::size_t QuadrupedEpisode::observation_dim() const {
  return cfg_.wiring == Wiring::kPmtg ? kObservationDim : 5;
}

std::size_t QuadrupedEpisode::action_dim() const {
  return cfg_.wiring == Wiring::kPmtg ? kActionDim : LegCommand::kSize;
}

std::vector<double> QuadrupedEpisode::reset(std::uint64_t seed) {
  sim_.reset(seed, cfg_.tg.swing_center);
  tg_state_ = TgState{};
  last_mod_ = {};
  last_command_ = sim_.joints();
  last_step_ = {};
  abs_error_sum_ = 0.0;
  steps_ = 0;
  fell_ = false;
  return observe({0.0, sim_.body().pitch, 0.0, sim_.body().pitch_rate});
}

std::vector<double> QuadrupedEpisode::observe(const std::array<double, 4>& imu) const {
  const double v_des = sim_.current_target_speed();
  if (cfg_.wiring == Wiring::kPmtg) {
    const ObservationVector obs = assemble_observation(imu, v_des, tg_state_.phase);
    return {obs.begin(), obs.end()};
  }
  return {imu[0], imu[1], imu[2], imu[3], v_des};
}

StepResult QuadrupedEpisode::step(std::span<const double> raw) {
  if (raw.size() != action_dim()) throw ConfigError("quadruped action has the wrong length");
  if (cfg_.wiring == Wiring::kPmtg) {
    const ActionBundle bundle = split_and_squash(raw, cfg_.bounds);
    check_modulation(bundle.tg, cfg_.bounds);
    tg_state_ = advance_phase(tg_state_, bundle.tg.frequency, cfg_.task.control_dt);
    const LegCommand u_tg = tg_leg_targets(tg_state_, bundle.tg, cfg_.tg);
    last_command_ = compose_action(u_tg, bundle.feedback, cfg_.model.limits);
    last_mod_ = bundle.tg;
  } else {
    // Same reachable joint range as TG plus feedback, centered on the
    // standing pose.
    const ActionBounds& b = cfg_.bounds;
    const double swing_half = b.amplitude.hi + b.correction;
    const Interval swing{cfg_.tg.swing_center - swing_half, cfg_.tg.swing_center + swing_half};
    const double ext_extra = std::abs(cfg_.tg.extension_amplitude) + std::abs(cfg_.tg.extension_asymmetry) +
                             b.correction;
    const Interval extension{b.height.lo - ext_extra, b.height.hi + ext_extra};
    std::array<double, LegCommand::kSize> u{};
    for (std::size_t i = 0; i < kNumLegs; ++i) {
      require_finite(raw[2 * i], "raw action");
      require_finite(raw[2 * i + 1], "raw action");
      u[2 * i] = squash(raw[2 * i], swing);
      u[2 * i + 1] = squash(raw[2 * i + 1], extension);
    }
    const std::array<double, LegCommand::kSize> zero{};
    last_command_ = compose_action(LegCommand::from_flat(u), zero, cfg_.model.limits);
    last_mod_ = {};
  }
  last_step_ = sim_.step(last_command_);
  ++steps_;
  abs_error_sum_ += std::abs(last_step_.forward_speed - last_step_.target_speed);
  fell_ = fell_ || last_step_.fell;
  return StepResult{observe(last_step_.imu), last_step_.reward, last_step_.done};
}

std::vector<std::string> QuadrupedEpisode::trace_columns() const {
  std::vector<std::string> cols{"t", "v_target", "vx", "pitch", "f_tg", "alpha_tg", "h_tg"};
  const char* names[kNumLegs] = {"FL", "FR", "BL", "BR"};
  for (const char* n : names) {
    cols.push_back(std::string("S_") + n);
    cols.push_back(std::string("E_") + n);
  }
  return cols;
}

std::vector<double> QuadrupedEpisode::trace_row() const {
  const BodyState& b = sim_.body();
  std::vector<double> row{b.time, last_step_.target_speed, last_step_.forward_speed, b.pitch,
                          last_mod_.frequency, last_mod_.swing_amplitude, last_mod_.walking_height};
  for (const auto& leg : sim_.joints().legs) {
    row.push_back(leg.swing);
    row.push_back(leg.extension);
  }
  return row;
}

EpisodeSummary QuadrupedEpisode::summary() const {
  EpisodeSummary s;
  s.steps = steps_;
  s.tracking_error = steps_ > 0 ? abs_error_sum_ / static_cast<double>(steps_) : 0.0;
  s.fell = fell_;
  if (fell_) s.fall_time = sim_.body().time;
  return s;
}

}  // namespace pmtg
