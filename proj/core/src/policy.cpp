#include "pmtg/policy.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pmtg/errors.hpp"
#include "pmtg/seeding.hpp"

namespace pmtg {

ObservationVector assemble_observation(const std::array<double, 4>& imu, double desired_speed,
                                       double tg_phase) {
  for (double v : imu) require_finite(v, "imu");
  require_finite(desired_speed, "desired speed");
  require_finite(tg_phase, "TG phase");
  return {imu[0], imu[1], imu[2], imu[3], desired_speed, std::sin(tg_phase), std::cos(tg_phase)};
}

std::string_view to_string(PolicyKind kind) {
  return kind == PolicyKind::kLinear ? "linear" : "mlp";
}

PolicyKind parse_policy_kind(std::string_view name) {
  if (name == "linear") return PolicyKind::kLinear;
  if (name == "mlp") return PolicyKind::kMlp;
  throw ConfigError("policy.kind must be linear or mlp, got '" + std::string(name) + "'");
}

void PolicyShape::validate() const {
  if (input_dim == 0 || output_dim == 0) throw ConfigError("policy dimensions must be positive");
  if (kind == PolicyKind::kLinear) {
    if (!hidden.empty()) throw ConfigError("linear policy takes no hidden layers");
    return;
  }
  if (hidden.size() != 2) throw ConfigError("mlp policy needs exactly two hidden layers");
  for (std::size_t h : hidden) {
    if (h == 0 || h > kMaxHiddenUnits) {
      throw ConfigError("mlp hidden layer size must lie in [1, 200], got " + std::to_string(h));
    }
  }
}

std::string PolicyShape::describe() const {
  std::ostringstream os;
  os << to_string(kind) << ' ' << input_dim;
  for (std::size_t h : hidden) os << "->" << h;
  os << "->" << output_dim;
  if (kind == PolicyKind::kLinear && bias) os << " (+bias)";
  return os.str();
}

std::size_t param_count(const PolicyShape& shape) {
  shape.validate();
  if (shape.kind == PolicyKind::kLinear) {
    return shape.output_dim * shape.input_dim + (shape.bias ? shape.output_dim : 0);
  }
  const std::size_t h1 = shape.hidden[0];
  const std::size_t h2 = shape.hidden[1];
  return h1 * shape.input_dim + h1 + h2 * h1 + h2 + shape.output_dim * h2 + shape.output_dim;
}

PolicyParams PolicyParams::zeros(const PolicyShape& shape) {
  return PolicyParams{shape, std::vector<double>(param_count(shape), 0.0)};
}

PolicyParams PolicyParams::random_init(const PolicyShape& shape, std::uint64_t seed) {
  PolicyParams p = zeros(shape);
  if (shape.kind == PolicyKind::kLinear) return p;
  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::size_t k = 0;
  auto fill_layer = [&](std::size_t out, std::size_t in, double scale) {
    const double limit = scale / std::sqrt(static_cast<double>(in));
    for (std::size_t i = 0; i < out * in; ++i) p.flat[k++] = limit * unit(rng);
    k += out;  // biases stay zero
  };
  fill_layer(shape.hidden[0], shape.input_dim, 1.0);
  fill_layer(shape.hidden[1], shape.hidden[0], 1.0);
  fill_layer(shape.output_dim, shape.hidden[1], 0.01);
  return p;
}

namespace {

// out = W x (+ b); W row-major [rows][cols]. Returns offset past the layer.
std::size_t dense(const double* w, std::size_t rows, std::size_t cols, bool bias,
                  std::span<const double> x, std::span<double> out) {
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    const double* row = w + r * cols;
    for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
    out[r] = acc;
  }
  std::size_t used = rows * cols;
  if (bias) {
    for (std::size_t r = 0; r < rows; ++r) out[r] += w[used + r];
    used += rows;
  }
  return used;
}

}  // namespace

void policy_forward(const PolicyParams& params, std::span<const double> obs, std::span<double> out) {
  const PolicyShape& s = params.shape;
  if (obs.size() != s.input_dim) {
    throw ConfigError("observation length " + std::to_string(obs.size()) + " does not match policy " +
                      s.describe());
  }
  if (out.size() != s.output_dim) throw ConfigError("output buffer does not match policy shape");
  if (params.flat.size() != param_count(s)) {
    throw ConfigError("parameter vector length " + std::to_string(params.flat.size()) +
                      " does not match policy " + s.describe());
  }
  const double* w = params.flat.data();
  if (s.kind == PolicyKind::kLinear) {
    dense(w, s.output_dim, s.input_dim, s.bias, obs, out);
    return;
  }
  std::vector<double> h1(s.hidden[0]);
  std::vector<double> h2(s.hidden[1]);
  w += dense(w, h1.size(), s.input_dim, true, obs, h1);
  for (double& v : h1) v = std::max(v, 0.0);
  w += dense(w, h2.size(), h1.size(), true, h1, h2);
  for (double& v : h2) v = std::max(v, 0.0);
  dense(w, s.output_dim, h2.size(), true, h2, out);
}

std::vector<double> policy_forward(const PolicyParams& params, std::span<const double> obs) {
  std::vector<double> out(params.shape.output_dim);
  policy_forward(params, obs, out);
  return out;
}

void ActionBounds::validate() const {
  auto check = [](Interval iv, const char* name) {
    if (!(iv.lo < iv.hi)) throw ConfigError(std::string("policy.bounds.") + name + " needs lo < hi");
  };
  check(frequency, "frequency");
  check(amplitude, "amplitude");
  check(height, "height");
  if (frequency.lo < 0.0) throw ConfigError("policy.bounds.frequency must be non-negative");
  if (!(correction > 0.0)) throw ConfigError("policy.bounds.correction must be positive");
}

double squash(double raw, Interval range) { return range.mid() + range.half_width() * std::tanh(raw); }

double unsquash(double value, Interval range) {
  return std::atanh((value - range.mid()) / range.half_width());
}

ActionBundle split_and_squash(std::span<const double> raw, const ActionBounds& bounds) {
  if (raw.size() != kActionDim) {
    throw ConfigError("raw action must have 11 entries, got " + std::to_string(raw.size()));
  }
  for (double v : raw) require_finite(v, "raw action");
  ActionBundle bundle;
  bundle.tg.frequency = squash(raw[0], bounds.frequency);
  bundle.tg.swing_amplitude = squash(raw[1], bounds.amplitude);
  bundle.tg.walking_height = squash(raw[2], bounds.height);
  const Interval fb{-bounds.correction, bounds.correction};
  for (std::size_t i = 0; i < LegCommand::kSize; ++i) bundle.feedback[i] = squash(raw[3 + i], fb);
  return bundle;
}

void check_modulation(const TgModulation& mod, const ActionBounds& bounds) {
  auto inside = [](double v, Interval iv) { return v >= iv.lo && v <= iv.hi; };
  if (!inside(mod.frequency, bounds.frequency) || !inside(mod.swing_amplitude, bounds.amplitude) ||
      !inside(mod.walking_height, bounds.height)) {
    throw NumericError("TG modulation outside configured bounds");
  }
}

LegCommand compose_action(const LegCommand& u_tg, std::span<const double> u_fb,
                          const ActuatorLimits& limits) {
  if (u_fb.size() != LegCommand::kSize) throw ConfigError("feedback must have 8 entries");
  LegCommand out;
  for (std::size_t i = 0; i < kNumLegs; ++i) {
    out.legs[i].swing =
        std::clamp(u_tg.legs[i].swing + u_fb[2 * i], limits.swing_lo, limits.swing_hi);
    out.legs[i].extension =
        std::clamp(u_tg.legs[i].extension + u_fb[2 * i + 1], limits.extension_lo, limits.extension_hi);
  }
  return out;
}

}  // namespace pmtg
