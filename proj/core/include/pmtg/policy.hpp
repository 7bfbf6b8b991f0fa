#pragma once

// Feed-forward policies over a flat parameter vector, observation assembly,
// and the mapping from raw network outputs to bounded TG modulation plus
// per-joint feedback.
//
// Flat layout (row-major weights, output index major):
//   linear: W[out][in], then b[out] when bias is enabled
//   mlp:    W1[h1][in], b1[h1], W2[h2][h1], b2[h2], W3[out][h2], b3[out]

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pmtg/tg.hpp"

namespace pmtg {

inline constexpr std::size_t kObservationDim = 7;
inline constexpr std::size_t kActionDim = 11;
inline constexpr std::size_t kMaxHiddenUnits = 200;

using ObservationVector = std::array<double, kObservationDim>;

// [roll, pitch, roll_rate, pitch_rate, v_des, sin φ, cos φ]
ObservationVector assemble_observation(const std::array<double, 4>& imu, double desired_speed,
                                       double tg_phase);

enum class PolicyKind { kLinear, kMlp };

std::string_view to_string(PolicyKind kind);
PolicyKind parse_policy_kind(std::string_view name);

struct PolicyShape {
  PolicyKind kind = PolicyKind::kLinear;
  std::size_t input_dim = kObservationDim;
  std::size_t output_dim = kActionDim;
  std::vector<std::size_t> hidden;  // exactly two entries for mlp, empty for linear
  bool bias = false;                // linear only; mlp layers always carry biases

  void validate() const;
  bool operator==(const PolicyShape&) const = default;
  std::string describe() const;
};

std::size_t param_count(const PolicyShape& shape);

struct PolicyParams {
  PolicyShape shape;
  std::vector<double> flat;

  static PolicyParams zeros(const PolicyShape& shape);
  // Fan-in scaled uniform weights, zero biases, output layer scaled down.
  static PolicyParams random_init(const PolicyShape& shape, std::uint64_t seed);
};

// Writes shape.output_dim values into out.
void policy_forward(const PolicyParams& params, std::span<const double> obs, std::span<double> out);
std::vector<double> policy_forward(const PolicyParams& params, std::span<const double> obs);

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
  double mid() const { return 0.5 * (lo + hi); }
  double half_width() const { return 0.5 * (hi - lo); }
};

struct ActionBounds {
  Interval frequency{0.0, 3.0};
  Interval amplitude{0.0, 0.6};
  Interval height{0.8, 1.6};
  double correction = 0.3;  // feedback range is [-correction, +correction]

  void validate() const;
};

// mid + half_width * tanh(raw): smooth, strictly monotone, 0 -> midpoint.
double squash(double raw, Interval range);
// Inverse of squash for values strictly inside the interval.
double unsquash(double value, Interval range);

struct ActionBundle {
  TgModulation tg;
  std::array<double, LegCommand::kSize> feedback{};
};

ActionBundle split_and_squash(std::span<const double> raw, const ActionBounds& bounds);

// Throws NumericError when a modulation value falls outside its bounds.
void check_modulation(const TgModulation& mod, const ActionBounds& bounds);

// Elementwise u_tg + u_fb, clamped to the actuator limits.
LegCommand compose_action(const LegCommand& u_tg, std::span<const double> u_fb,
                          const ActuatorLimits& limits);

}  // namespace pmtg
