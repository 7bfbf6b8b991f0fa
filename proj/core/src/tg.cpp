#include "pmtg/tg.hpp"

#include <cmath>
#include <string>

#include "pmtg/errors.hpp"

namespace pmtg {

void require_finite(double value, const char* what) {
  if (!std::isfinite(value)) {
    throw NumericError(std::string("non-finite value for ") + what);
  }
}

double wrap_angle(double angle) {
  require_finite(angle, "angle");
  double wrapped = std::fmod(angle, kTwoPi);
  if (wrapped < 0.0) wrapped += kTwoPi;
  // fmod of a tiny negative number plus 2π can round up to exactly 2π.
  if (wrapped >= kTwoPi) wrapped = 0.0;
  return wrapped;
}

void TgConfig::validate() const {
  if (!(swing_fraction > 0.0 && swing_fraction < 1.0)) {
    throw ConfigError("tg.swing_fraction must lie in (0, 1), got " + std::to_string(swing_fraction));
  }
  for (std::size_t i = 0; i < kNumLegs; ++i) {
    const double offset = leg_phase_offsets[i];
    if (!(offset >= 0.0 && offset < kTwoPi)) {
      throw ConfigError("tg.leg_phase_offsets[" + std::to_string(i) + "] must lie in [0, 2π)");
    }
  }
  if (leg_phase_offsets[0] != 0.0) {
    throw ConfigError("tg.leg_phase_offsets[0] must be 0 (front-left is the reference leg)");
  }
  if (!(dt > 0.0)) throw ConfigError("tg.dt must be positive");
  require_finite(swing_center, "tg.swing_center");
  require_finite(extension_amplitude, "tg.extension_amplitude");
  require_finite(extension_asymmetry, "tg.extension_asymmetry");
}

std::array<double, LegCommand::kSize> LegCommand::flat() const {
  std::array<double, kSize> out{};
  for (std::size_t i = 0; i < kNumLegs; ++i) {
    out[2 * i] = legs[i].swing;
    out[2 * i + 1] = legs[i].extension;
  }
  return out;
}

LegCommand LegCommand::from_flat(const std::array<double, kSize>& values) {
  LegCommand cmd;
  for (std::size_t i = 0; i < kNumLegs; ++i) {
    cmd.legs[i] = {values[2 * i], values[2 * i + 1]};
  }
  return cmd;
}

TgState advance_phase(TgState state, double frequency, double dt) {
  require_finite(state.phase, "phase");
  require_finite(frequency, "frequency");
  require_finite(dt, "dt");
  if (frequency < 0.0) throw NumericError("TG frequency must be non-negative");
  if (!(dt > 0.0)) throw NumericError("TG dt must be positive");
  return TgState{wrap_angle(state.phase + kTwoPi * frequency * dt)};
}

double leg_phase(double phase, double offset) {
  require_finite(offset, "leg phase offset");
  return wrap_angle(phase + offset);
}

double warp_time(double phi, double swing_fraction) {
  if (!(swing_fraction > 0.0 && swing_fraction < 1.0)) {
    throw ConfigError("swing fraction must lie in (0, 1)");
  }
  require_finite(phi, "leg phase");
  const double boundary = kTwoPi * (1.0 - swing_fraction);
  if (phi < boundary) return phi / (2.0 * (1.0 - swing_fraction));
  return kTwoPi - (kTwoPi - phi) / (2.0 * swing_fraction);
}

LegCommand tg_leg_targets(const TgState& state, const TgModulation& mod, const TgConfig& cfg) {
  require_finite(mod.frequency, "f_tg");
  require_finite(mod.swing_amplitude, "alpha_tg");
  require_finite(mod.walking_height, "h_tg");
  LegCommand cmd;
  for (std::size_t i = 0; i < kNumLegs; ++i) {
    const double t = warp_time(leg_phase(state.phase, cfg.leg_phase_offsets[i]), cfg.swing_fraction);
    const double c = std::cos(t);
    const double s = std::sin(t);
    cmd.legs[i].swing = cfg.swing_center + mod.swing_amplitude * c;
    cmd.legs[i].extension = mod.walking_height + cfg.extension_amplitude * s + cfg.extension_asymmetry * c;
  }
  return cmd;
}

Point2 figure_eight(double t, double a_x, double a_y) {
  require_finite(t, "t");
  require_finite(a_x, "a_x");
  require_finite(a_y, "a_y");
  const double s = std::sin(kTwoPi * t);
  const double c = std::cos(kTwoPi * t);
  return {a_x * s, 0.5 * a_y * s * c};
}

TgConfig gait_table(std::string_view name) {
  TgConfig cfg;
  if (name == "bound") {
    cfg.leg_phase_offsets = {0.0, 0.0, std::numbers::pi, std::numbers::pi};
    cfg.swing_fraction = 0.4;
  } else if (name == "walk") {
    cfg.leg_phase_offsets = {0.0, std::numbers::pi, std::numbers::pi, 0.0};
    cfg.swing_fraction = 0.5;
  } else {
    throw ConfigError("unknown gait '" + std::string(name) + "' (expected walk or bound)");
  }
  return cfg;
}

}  // namespace pmtg
