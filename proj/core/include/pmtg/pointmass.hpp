#pragma once

// Planar tracking task: a point in a 2 m x 2 m workspace is commanded by
// desired-next-position actions and rewarded by its negative distance to a
// deformed, displaced figure-eight.

#include <array>
#include <cstdint>
#include <string_view>

#include "pmtg/episode.hpp"
#include "pmtg/policy.hpp"
#include "pmtg/tg.hpp"

namespace pmtg {

struct TargetCurve {
  std::array<double, 4> deformation{1.0, 0.0, 0.0, 1.0};  // row-major 2x2
  Point2 offset{};
  int period = 100;  // steps per cycle

  void validate(double workspace_half_width) const;
};

// rotation(rotation_deg) * diag(scale_x, scale_y) * base_amplitude.
TargetCurve make_target_curve(double base_amplitude, double rotation_deg, double scale_x,
                              double scale_y, Point2 offset, int period);
TargetCurve default_target_curve();

struct PointMassConfig {
  TargetCurve curve = default_target_curve();
  int episode_steps = 400;
  double reset_noise = 0.05;     // m, std of the reset perturbation
  double workspace_half = 1.0;   // workspace is [-w, w]^2
};

struct PointState {
  Point2 position;
  int step_index = 0;
};

struct PointStepResult {
  PointState next;
  double reward = 0.0;
  bool done = false;
};

Point2 pm_target(int step_index, const TargetCurve& curve);
PointState pm_reset(const PointMassConfig& cfg, std::uint64_t seed);
// Teleports to u clamped to the workspace; rewards -||p - target(step_index)||.
PointStepResult pm_step(const PointMassConfig& cfg, const PointState& state, Point2 u);

enum class Wiring { kPmtg, kVanilla, kVanillaTime };

std::string_view to_string(Wiring wiring);
Wiring parse_wiring(std::string_view name);

struct PointMassWiringConfig {
  Wiring wiring = Wiring::kPmtg;
  Interval amplitude{0.0, 1.2};  // a_x, a_y bounds; midpoint is the base curve amplitude
  double correction = 1.0;       // u_fb range, also the direct-action range without the TG
  double tg_step = 0.01;         // TG cycle fraction advanced per step
};

// Observation / action layout per wiring:
//   pmtg:         obs (x, y, sin 2πt, cos 2πt)  action (u_fb_x, u_fb_y, a_x, a_y)
//   vanilla:      obs (x, y)                    action (u_x, u_y)
//   vanilla_time: obs (x, y, sin 2πt, cos 2πt)  action (u_x, u_y)
class PointMassEpisode final : public Episode {
 public:
  PointMassEpisode(PointMassConfig env, PointMassWiringConfig wiring);

  std::size_t observation_dim() const override;
  std::size_t action_dim() const override;
  std::vector<double> reset(std::uint64_t seed) override;
  StepResult step(std::span<const double> raw_action) override;
  std::vector<std::string> trace_columns() const override;
  std::vector<double> trace_row() const override;
  EpisodeSummary summary() const override;

  const PointState& state() const { return state_; }
  double tg_cycle() const { return tg_cycle_; }

 private:
  std::vector<double> observe() const;

  PointMassConfig env_;
  PointMassWiringConfig wiring_;
  PointState state_;
  double tg_cycle_ = 0.0;
  // last step, for traces
  Point2 last_target_{};
  double last_reward_ = 0.0;
  double last_ax_ = 0.0;
  double last_ay_ = 0.0;
  int last_step_ = 0;
};

}  // namespace pmtg
