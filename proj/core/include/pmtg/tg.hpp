#pragma once

// Trajectory generators: the phase oscillator that gives a feed-forward
// policy its memory, the swing/extension leg generator used for quadruped
// gaits, and the figure-eight generator of the planar tracking task.

#include <array>
#include <cstddef>
#include <numbers>
#include <string_view>

namespace pmtg {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr std::size_t kNumLegs = 4;

// Leg order used everywhere: front-left, front-right, back-left, back-right.
enum class Leg : std::size_t { kFrontLeft = 0, kFrontRight = 1, kBackLeft = 2, kBackRight = 3 };

struct TgState {
  double phase = 0.0;  // radians, [0, 2π)
};

struct TgConfig {
  double swing_center = 0.0;         // C_s, rad
  double extension_amplitude = 0.35; // A_e, rad
  double extension_asymmetry = 0.0;  // θ, rad
  // β. The first warp branch, covering a (1 - β) share of the cycle, maps to
  // t' in [0, π) where the leg is extended and on the ground; the remaining
  // β share is the swing.
  double swing_fraction = 0.5;
  std::array<double, kNumLegs> leg_phase_offsets{0.0, std::numbers::pi, std::numbers::pi, 0.0};
  double dt = 0.01;  // control period, s

  // Throws ConfigError on any invariant violation.
  void validate() const;
};

struct TgModulation {
  double frequency = 0.0;        // Hz
  double swing_amplitude = 0.0;  // α_tg, rad
  double walking_height = 0.0;   // h_tg, rad
};

struct LegTarget {
  double swing = 0.0;
  double extension = 0.0;
};

// Eight joint targets. Flattened order is (S, E) per leg in Leg order.
struct LegCommand {
  std::array<LegTarget, kNumLegs> legs{};

  static constexpr std::size_t kSize = 2 * kNumLegs;
  std::array<double, kSize> flat() const;
  static LegCommand from_flat(const std::array<double, kSize>& values);
};

struct ActuatorLimits {
  double swing_lo = -1.0, swing_hi = 1.0;
  double extension_lo = 0.2, extension_hi = 2.2;
};

// (phase + 2π f dt) mod 2π.
TgState advance_phase(TgState state, double frequency, double dt);

// (phase + offset) mod 2π.
double leg_phase(double phase, double offset);

// Stance/swing time warp. Continuous and monotone on [0, 2π); the branch
// boundary 2π(1 - β) maps to π. Identity for β = 0.5.
double warp_time(double leg_phase, double swing_fraction);

LegCommand tg_leg_targets(const TgState& state, const TgModulation& mod, const TgConfig& cfg);

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

// x = a_x sin(2πt), y = (a_y / 2) sin(2πt) cos(2πt); t in cycles.
Point2 figure_eight(double t, double a_x, double a_y);

// Default constants for a named gait ("walk" or "bound").
TgConfig gait_table(std::string_view name);

// Wraps any finite angle into [0, 2π).
double wrap_angle(double angle);

}  // namespace pmtg
