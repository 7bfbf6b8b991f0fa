#include "pmtg/pointmass.hpp"

#include <algorithm>
#include <cmath>

#include "pmtg/errors.hpp"
#include "pmtg/seeding.hpp"

namespace pmtg {

void TargetCurve::validate(double workspace_half_width) const {
  const double det = deformation[0] * deformation[3] - deformation[1] * deformation[2];
  if (std::abs(det) < 1e-12) throw ConfigError("target curve deformation must be invertible");
  if (period <= 0) throw ConfigError("target curve period must be positive");
  for (int k = 0; k < period; ++k) {
    const Point2 p = pm_target(k, *this);
    if (std::abs(p.x) > workspace_half_width || std::abs(p.y) > workspace_half_width) {
      throw ConfigError("target curve leaves the workspace");
    }
  }
}

TargetCurve make_target_curve(double base_amplitude, double rotation_deg, double scale_x,
                              double scale_y, Point2 offset, int period) {
  const double a = rotation_deg * std::numbers::pi / 180.0;
  const double c = std::cos(a);
  const double s = std::sin(a);
  TargetCurve curve;
  curve.deformation = {base_amplitude * c * scale_x, -base_amplitude * s * scale_y,
                       base_amplitude * s * scale_x, base_amplitude * c * scale_y};
  curve.offset = offset;
  curve.period = period;
  return curve;
}

TargetCurve default_target_curve() { return make_target_curve(0.6, 20.0, 1.3, 0.7, {0.2, 0.1}, 100); }

Point2 pm_target(int step_index, const TargetCurve& curve) {
  const Point2 e = figure_eight(static_cast<double>(step_index) / curve.period, 1.0, 1.0);
  const auto& m = curve.deformation;
  return {m[0] * e.x + m[1] * e.y + curve.offset.x, m[2] * e.x + m[3] * e.y + curve.offset.y};
}

namespace {

Point2 clamp_to_workspace(Point2 p, double half) {
  return {std::clamp(p.x, -half, half), std::clamp(p.y, -half, half)};
}

}  // namespace

PointState pm_reset(const PointMassConfig& cfg, std::uint64_t seed) {
  PointState state;
  state.position = pm_target(0, cfg.curve);
  if (cfg.reset_noise > 0.0) {
    Rng rng = make_rng(seed);
    std::normal_distribution<double> noise(0.0, cfg.reset_noise);
    state.position.x += noise(rng);
    state.position.y += noise(rng);
  }
  state.position = clamp_to_workspace(state.position, cfg.workspace_half);
  state.step_index = 0;
  return state;
}

PointStepResult pm_step(const PointMassConfig& cfg, const PointState& state, Point2 u) {
  require_finite(u.x, "u_x");
  require_finite(u.y, "u_y");
  PointStepResult result;
  result.next.position = clamp_to_workspace(u, cfg.workspace_half);
  const Point2 target = pm_target(state.step_index, cfg.curve);
  result.reward = -std::hypot(result.next.position.x - target.x, result.next.position.y - target.y);
  result.next.step_index = state.step_index + 1;
  result.done = result.next.step_index >= cfg.episode_steps;
  return result;
}

std::string_view to_string(Wiring wiring) {
  switch (wiring) {
    case Wiring::kPmtg: return "pmtg";
    case Wiring::kVanilla: return "vanilla";
    case Wiring::kVanillaTime: return "vanilla_time";
  }
  return "?";
}

Wiring parse_wiring(std::string_view name) {
  if (name == "pmtg") return Wiring::kPmtg;
  if (name == "vanilla") return Wiring::kVanilla;
  if (name == "vanilla_time") return Wiring::kVanillaTime;
  throw ConfigError("env.wiring must be pmtg, vanilla or vanilla_time, got '" + std::string(name) + "'");
}

PointMassEpisode::PointMassEpisode(PointMassConfig env, PointMassWiringConfig wiring)
    : env_(env), wiring_(wiring) {
  env_.curve.validate(env_.workspace_half);
  if (env_.episode_steps <= 0) throw ConfigError("env.pointmass.episode_steps must be positive");
  if (!(wiring_.amplitude.lo < wiring_.amplitude.hi)) throw ConfigError("amplitude bounds need lo < hi");
  if (!(wiring_.correction > 0.0)) throw ConfigError("correction range must be positive");
}

std::size_t PointMassEpisode::observation_dim() const { return wiring_.wiring == Wiring::kVanilla ? 2 : 4; }

std::size_t PointMassEpisode::action_dim() const { return wiring_.wiring == Wiring::kPmtg ? 4 : 2; }

std::vector<double> PointMassEpisode::reset(std::uint64_t seed) {
  state_ = pm_reset(env_, seed);
  tg_cycle_ = 0.0;
  return observe();
}

std::vector<double> PointMassEpisode::observe() const {
  std::vector<double> obs{state_.position.x, state_.position.y};
  if (wiring_.wiring == Wiring::kVanilla) return obs;
  // Without a TG the time signal is the step clock; with it, the TG's own
  // state. Both advance by tg_step per step.
  const double cycle = wiring_.wiring == Wiring::kPmtg
                           ? tg_cycle_
                           : static_cast<double>(state_.step_index) * wiring_.tg_step;
  obs.push_back(std::sin(kTwoPi * cycle));
  obs.push_back(std::cos(kTwoPi * cycle));
  return obs;
}

StepResult PointMassEpisode::step(std::span<const double> raw) {
  if (raw.size() != action_dim()) throw ConfigError("point-mass action has the wrong length");
  for (double v : raw) require_finite(v, "raw action");
  const Interval fb{-wiring_.correction, wiring_.correction};
  Point2 u{squash(raw[0], fb), squash(raw[1], fb)};
  last_ax_ = last_ay_ = 0.0;
  if (wiring_.wiring == Wiring::kPmtg) {
    last_ax_ = squash(raw[2], wiring_.amplitude);
    last_ay_ = squash(raw[3], wiring_.amplitude);
    const Point2 tg = figure_eight(tg_cycle_, last_ax_, last_ay_);
    u.x += tg.x;
    u.y += tg.y;
  }
  last_step_ = state_.step_index;
  last_target_ = pm_target(state_.step_index, env_.curve);
  const PointStepResult r = pm_step(env_, state_, u);
  state_ = r.next;
  last_reward_ = r.reward;
  tg_cycle_ = advance_phase(TgState{kTwoPi * tg_cycle_}, wiring_.tg_step, 1.0).phase / kTwoPi;
  return StepResult{observe(), r.reward, r.done};
}

std::vector<std::string> PointMassEpisode::trace_columns() const {
  return {"step", "x", "y", "target_x", "target_y", "reward", "a_x", "a_y"};
}

std::vector<double> PointMassEpisode::trace_row() const {
  return {static_cast<double>(last_step_), state_.position.x, state_.position.y, last_target_.x,
          last_target_.y, last_reward_, last_ax_, last_ay_};
}

EpisodeSummary PointMassEpisode::summary() const {
  EpisodeSummary s;
  s.steps = static_cast<std::size_t>(state_.step_index);
  return s;
}

}  // namespace pmtg
