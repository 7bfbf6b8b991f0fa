#include "pmtg/config.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "pmtg/errors.hpp"
#include "pmtg/seeding.hpp"

namespace pmtg {

using nlohmann::json;

namespace {

constexpr const char* kDefaults = R"json({
  "env": {
    "type": "",
    "wiring": "pmtg",
    "pointmass": {
      "episode_steps": 400,
      "reset_noise": 0.05,
      "workspace_half": 1.0,
      "tg_step": 0.01,
      "amplitude": [0.0, 1.2],
      "correction": 1.0,
      "curve": {
        "base_amplitude": 0.6,
        "rotation_deg": 20.0,
        "scale_x": 1.3,
        "scale_y": 0.7,
        "offset": [0.2, 0.1],
        "period": 100
      }
    },
    "quadruped": {
      "task": {
        "v_max": 0.4,
        "episode_length": 25.0,
        "profile_breakpoints": [0.2, 0.45, 0.75],
        "physics_dt": 0.001,
        "control_dt": 0.01,
        "reset_noise": 0.002,
        "speed_window": 0.0,
        "perturbations": {
          "enabled": true,
          "count": 4,
          "duration": 0.2,
          "max_vertical": 60.0,
          "max_horizontal": 10.0
        }
      },
      "model": {
        "mass": 6.0,
        "inertia": 0.1,
        "hip_offsets": [0.2, 0.2, -0.2, -0.2],
        "leg_length": 0.25,
        "extension_gain": 0.1,
        "extension_reference": 1.2,
        "swing_limits": [-1.0, 1.0],
        "extension_limits": [0.2, 2.2],
        "servo_rate": 20.0,
        "gravity": 9.81,
        "fall_pitch": 0.8,
        "fall_height_fraction": 0.55
      },
      "contact": {
        "normal_stiffness": 4000.0,
        "normal_damping": 40.0,
        "friction": 0.8,
        "tangential_stiffness": 4000.0,
        "tangential_damping": 40.0
      }
    }
  },
  "tg": {
    "gait": "walk",
    "swing_center": 0.0,
    "extension_amplitude": 0.35,
    "extension_asymmetry": 0.0,
    "swing_fraction": null,
    "phase_offsets": null
  },
  "policy": {
    "kind": "linear",
    "hidden": [32, 32],
    "bias": false,
    "bounds": {
      "frequency": [0.0, 3.0],
      "amplitude": [0.0, 0.6],
      "height": [0.8, 1.6],
      "correction": 0.3
    }
  },
  "optim": {
    "algo": "",
    "ars": {
      "step_size": 0.02,
      "noise_std": 0.025,
      "num_directions": 8,
      "top_directions": 4,
      "rollouts_per_direction": 1,
      "normalize_obs": null
    },
    "ppo": {
      "clip": 0.2,
      "gamma": 0.99,
      "lambda": 0.95,
      "learning_rate": 0.0003,
      "epochs": 3,
      "minibatch_size": 256,
      "episodes_per_batch": 8,
      "value_coef": 0.5,
      "entropy_coef": 0.0,
      "init_std": 0.3,
      "value_hidden": [32, 32],
      "normalize_obs": null
    }
  },
  "run": {
    "seed": 0,
    "max_rollouts": 1000,
    "max_env_steps": 0,
    "max_iterations": 0,
    "eval_every": 10,
    "eval_episodes": 4,
    "eval_perturbations": false,
    "checkpoint_every": 10,
    "workers": 1,
    "output_dir": "runs/default",
    "log_wall_time": false
  }
})json";

const std::map<std::string, std::string>& descriptions() {
  static const std::map<std::string, std::string> d = {
      {"env.type", "required: pointmass or quadruped"},
      {"env.wiring", "pmtg (policy modulates the TG and adds corrections), vanilla (direct actions), "
                     "vanilla_time (direct actions plus TG phase in the observation; point-mass only)"},
      {"env.pointmass.episode_steps", "steps per episode"},
      {"env.pointmass.reset_noise", "std of the initial position perturbation, m"},
      {"env.pointmass.workspace_half", "workspace is [-w, w]^2, m"},
      {"env.pointmass.tg_step", "figure-eight cycle fraction advanced per step"},
      {"env.pointmass.amplitude", "[lo, hi] bounds of the TG amplitudes a_x, a_y"},
      {"env.pointmass.correction", "range of the additive correction / direct action, m"},
      {"env.pointmass.curve.base_amplitude", "target curve size before deformation"},
      {"env.pointmass.curve.rotation_deg", "target curve rotation"},
      {"env.pointmass.curve.scale_x", "target curve stretch along x before rotation"},
      {"env.pointmass.curve.scale_y", "target curve stretch along y before rotation"},
      {"env.pointmass.curve.offset", "target curve displacement, m"},
      {"env.pointmass.curve.period", "target curve period in steps"},
      {"env.quadruped.task.v_max", "top speed of the target profile, m/s"},
      {"env.quadruped.task.episode_length", "episode duration, s"},
      {"env.quadruped.task.profile_breakpoints", "episode fractions where ramp-up ends, hold ends, ramp-down ends"},
      {"env.quadruped.task.physics_dt", "integrator step, s"},
      {"env.quadruped.task.control_dt", "policy period, s (multiple of physics_dt)"},
      {"env.quadruped.task.reset_noise", "std of the initial body height perturbation, m"},
      {"env.quadruped.task.speed_window", "trailing window of the measured speed, s (0 = one control period)"},
      {"env.quadruped.task.perturbations.enabled", "random external pushes during training episodes"},
      {"env.quadruped.task.perturbations.count", "pushes drawn per episode"},
      {"env.quadruped.task.perturbations.duration", "push duration, s"},
      {"env.quadruped.task.perturbations.max_vertical", "largest vertical push, N"},
      {"env.quadruped.task.perturbations.max_horizontal", "largest horizontal push, N"},
      {"env.quadruped.model.mass", "body mass, kg"},
      {"env.quadruped.model.inertia", "pitch inertia, kg m^2"},
      {"env.quadruped.model.hip_offsets", "hip x offsets FL, FR, BL, BR, m"},
      {"env.quadruped.model.leg_length", "leg length at the reference extension, m"},
      {"env.quadruped.model.extension_gain", "leg length change per radian of extension, m/rad"},
      {"env.quadruped.model.extension_reference", "extension giving the nominal leg length, rad"},
      {"env.quadruped.model.swing_limits", "actuator swing range, rad"},
      {"env.quadruped.model.extension_limits", "actuator extension range, rad"},
      {"env.quadruped.model.servo_rate", "joint servo bandwidth, 1/s"},
      {"env.quadruped.model.gravity", "m/s^2"},
      {"env.quadruped.model.fall_pitch", "|pitch| above this ends the episode, rad"},
      {"env.quadruped.model.fall_height_fraction", "body height below this fraction of leg_length ends the episode"},
      {"env.quadruped.contact.normal_stiffness", "ground spring, N/m"},
      {"env.quadruped.contact.normal_damping", "ground damper, N s/m"},
      {"env.quadruped.contact.friction", "Coulomb coefficient"},
      {"env.quadruped.contact.tangential_stiffness", "stick spring, N/m"},
      {"env.quadruped.contact.tangential_damping", "stick damper, N s/m"},
      {"tg.gait", "walk or bound; sets phase offsets and swing fraction"},
      {"tg.swing_center", "C_s, rad"},
      {"tg.extension_amplitude", "A_e, rad"},
      {"tg.extension_asymmetry", "theta, rad"},
      {"tg.swing_fraction", "null = gait default"},
      {"tg.phase_offsets", "null = gait default; else four offsets in rad"},
      {"policy.kind", "linear or mlp"},
      {"policy.hidden", "two hidden layer sizes for mlp (each <= 200)"},
      {"policy.bias", "add a bias term to the linear policy"},
      {"policy.bounds.frequency", "TG frequency range, Hz"},
      {"policy.bounds.amplitude", "TG stride amplitude range, rad"},
      {"policy.bounds.height", "TG walking height range, rad"},
      {"policy.bounds.correction", "feedback correction range, rad"},
      {"optim.algo", "required: ars or ppo"},
      {"optim.ars.step_size", "learning rate"},
      {"optim.ars.noise_std", "exploration noise"},
      {"optim.ars.num_directions", "directions sampled per iteration"},
      {"optim.ars.top_directions", "best directions used in the update"},
      {"optim.ars.rollouts_per_direction", "episodes averaged per perturbation"},
      {"optim.ars.normalize_obs", "running observation normalization; null = on for quadruped, off for pointmass"},
      {"optim.ppo.clip", "surrogate clip range"},
      {"optim.ppo.gamma", "discount"},
      {"optim.ppo.lambda", "GAE lambda"},
      {"optim.ppo.learning_rate", "Adam step size"},
      {"optim.ppo.epochs", "passes over each batch"},
      {"optim.ppo.minibatch_size", "samples per gradient step"},
      {"optim.ppo.episodes_per_batch", "episodes collected per iteration"},
      {"optim.ppo.value_coef", "value loss weight"},
      {"optim.ppo.entropy_coef", "entropy bonus weight"},
      {"optim.ppo.init_std", "initial exploration std in raw action units"},
      {"optim.ppo.value_hidden", "value network hidden sizes"},
      {"optim.ppo.normalize_obs", "running observation normalization; null = on for quadruped, off for pointmass"},
      {"run.seed", "master seed"},
      {"run.max_rollouts", "training budget in episodes (0 = write the initial checkpoint only)"},
      {"run.max_env_steps", "training budget in environment steps (0 = unlimited)"},
      {"run.max_iterations", "iteration cap (0 = unlimited)"},
      {"run.eval_every", "iterations between evaluations (0 = final only)"},
      {"run.eval_episodes", "deterministic evaluation episodes"},
      {"run.eval_perturbations", "keep external pushes on during evaluation"},
      {"run.checkpoint_every", "iterations between checkpoints (0 = final only)"},
      {"run.workers", "rollout threads"},
      {"run.output_dir", "relative paths resolve under $PMTG_OUTPUT_ROOT when set"},
      {"run.log_wall_time", "record elapsed seconds in the learning curve (breaks byte-identical reruns)"},
  };
  return d;
}

std::string type_name(const json& v) {
  if (v.is_null()) return "null";
  if (v.is_boolean()) return "boolean";
  if (v.is_number_integer()) return "integer";
  if (v.is_number()) return "number";
  if (v.is_string()) return "string";
  if (v.is_array()) return "array";
  return "object";
}

bool compatible(const json& def, const json& val) {
  if (def.is_null()) return !val.is_object();
  if (def.is_boolean()) return val.is_boolean();
  if (def.is_number_integer()) return val.is_number_integer();
  if (def.is_number()) return val.is_number();
  if (def.is_string()) return val.is_string();
  if (def.is_array()) return val.is_array();
  return val.is_object();
}

void merge_into(json& base, const json& user, const std::string& prefix) {
  if (!user.is_object()) throw ConfigError("config section '" + prefix + "' must be an object");
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (!base.contains(it.key())) throw ConfigError("unknown config key '" + path + "'");
    json& slot = base[it.key()];
    if (slot.is_object()) {
      merge_into(slot, it.value(), path);
      continue;
    }
    if (!compatible(slot, it.value())) {
      throw ConfigError("config key '" + path + "' expects " + type_name(slot) + ", got " +
                        type_name(it.value()));
    }
    slot = it.value();
  }
}

const json& at(const json& doc, std::string_view dotted) {
  const json* cur = &doc;
  std::string path(dotted);
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    cur = &cur->at(key);
    if (dot == std::string::npos) return *cur;
    start = dot + 1;
  }
}

template <class T>
T get(const json& doc, std::string_view dotted) {
  const json& v = at(doc, dotted);
  try {
    return v.get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("config key '" + std::string(dotted) + "': " + e.what());
  }
}

Interval get_interval(const json& doc, std::string_view dotted) {
  const auto v = get<std::vector<double>>(doc, dotted);
  if (v.size() != 2) throw ConfigError("config key '" + std::string(dotted) + "' expects [lo, hi]");
  if (!(v[0] < v[1])) throw ConfigError("config key '" + std::string(dotted) + "' needs lo < hi");
  return {v[0], v[1]};
}

Point2 get_point(const json& doc, std::string_view dotted) {
  const auto v = get<std::vector<double>>(doc, dotted);
  if (v.size() != 2) throw ConfigError("config key '" + std::string(dotted) + "' expects [x, y]");
  return {v[0], v[1]};
}

std::size_t get_size(const json& doc, std::string_view dotted) {
  const json& v = at(doc, dotted);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw ConfigError("config key '" + std::string(dotted) + "' must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

bool get_flag(const json& doc, std::string_view dotted, bool fallback) {
  const json& v = at(doc, dotted);
  if (v.is_null()) return fallback;
  if (!v.is_boolean()) throw ConfigError("config key '" + std::string(dotted) + "' expects boolean or null");
  return v.get<bool>();
}

void require(bool ok, std::string_view dotted, std::string_view what) {
  if (!ok) throw ConfigError("config key '" + std::string(dotted) + "' " + std::string(what));
}

void fill_typed(RunConfig& cfg) {
  const json& d = cfg.resolved;

  const auto env_type = get<std::string>(d, "env.type");
  if (env_type.empty()) throw ConfigError("missing required config key 'env.type'");
  if (env_type == "pointmass") {
    cfg.env = EnvType::kPointMass;
  } else if (env_type == "quadruped") {
    cfg.env = EnvType::kQuadruped;
  } else {
    throw ConfigError("config key 'env.type' must be pointmass or quadruped, got '" + env_type + "'");
  }
  try {
    cfg.wiring = parse_wiring(get<std::string>(d, "env.wiring"));
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("config key 'env.wiring': ") + e.what());
  }

  // point-mass
  {
    PointMassConfig& pm = cfg.pointmass;
    pm.episode_steps = get<int>(d, "env.pointmass.episode_steps");
    pm.reset_noise = get<double>(d, "env.pointmass.reset_noise");
    pm.workspace_half = get<double>(d, "env.pointmass.workspace_half");
    pm.curve = make_target_curve(get<double>(d, "env.pointmass.curve.base_amplitude"),
                                 get<double>(d, "env.pointmass.curve.rotation_deg"),
                                 get<double>(d, "env.pointmass.curve.scale_x"),
                                 get<double>(d, "env.pointmass.curve.scale_y"),
                                 get_point(d, "env.pointmass.curve.offset"),
                                 get<int>(d, "env.pointmass.curve.period"));
    PointMassWiringConfig& w = cfg.pointmass_wiring;
    w.wiring = cfg.wiring;
    w.amplitude = get_interval(d, "env.pointmass.amplitude");
    w.correction = get<double>(d, "env.pointmass.correction");
    w.tg_step = get<double>(d, "env.pointmass.tg_step");
    require(pm.episode_steps > 0, "env.pointmass.episode_steps", "must be positive");
    require(pm.reset_noise >= 0.0, "env.pointmass.reset_noise", "must be non-negative");
    require(pm.workspace_half > 0.0, "env.pointmass.workspace_half", "must be positive");
    require(w.correction > 0.0, "env.pointmass.correction", "must be positive");
  }

  // quadruped
  {
    QuadrupedEpisodeConfig& q = cfg.quadruped;
    TaskSpec& t = q.task;
    t.v_max = get<double>(d, "env.quadruped.task.v_max");
    t.episode_length = get<double>(d, "env.quadruped.task.episode_length");
    const auto bp = get<std::vector<double>>(d, "env.quadruped.task.profile_breakpoints");
    require(bp.size() == 3, "env.quadruped.task.profile_breakpoints", "expects three fractions");
    t.profile_breakpoints = {bp[0], bp[1], bp[2]};
    t.physics_dt = get<double>(d, "env.quadruped.task.physics_dt");
    t.control_dt = get<double>(d, "env.quadruped.task.control_dt");
    t.reset_noise = get<double>(d, "env.quadruped.task.reset_noise");
    t.speed_window = get<double>(d, "env.quadruped.task.speed_window");
    t.perturbations.enabled = get<bool>(d, "env.quadruped.task.perturbations.enabled");
    t.perturbations.count = get<int>(d, "env.quadruped.task.perturbations.count");
    t.perturbations.duration = get<double>(d, "env.quadruped.task.perturbations.duration");
    t.perturbations.max_vertical = get<double>(d, "env.quadruped.task.perturbations.max_vertical");
    t.perturbations.max_horizontal = get<double>(d, "env.quadruped.task.perturbations.max_horizontal");

    RobotModel& m = q.model;
    m.mass = get<double>(d, "env.quadruped.model.mass");
    m.inertia = get<double>(d, "env.quadruped.model.inertia");
    const auto hips = get<std::vector<double>>(d, "env.quadruped.model.hip_offsets");
    require(hips.size() == kNumLegs, "env.quadruped.model.hip_offsets", "expects four values");
    for (std::size_t i = 0; i < kNumLegs; ++i) m.hip_offsets[i] = hips[i];
    m.leg_length = get<double>(d, "env.quadruped.model.leg_length");
    m.extension_gain = get<double>(d, "env.quadruped.model.extension_gain");
    m.extension_reference = get<double>(d, "env.quadruped.model.extension_reference");
    const Interval sw = get_interval(d, "env.quadruped.model.swing_limits");
    const Interval ex = get_interval(d, "env.quadruped.model.extension_limits");
    m.limits.swing_lo = sw.lo;
    m.limits.swing_hi = sw.hi;
    m.limits.extension_lo = ex.lo;
    m.limits.extension_hi = ex.hi;
    m.servo_rate = get<double>(d, "env.quadruped.model.servo_rate");
    m.gravity = get<double>(d, "env.quadruped.model.gravity");
    m.fall_pitch = get<double>(d, "env.quadruped.model.fall_pitch");
    m.fall_height_fraction = get<double>(d, "env.quadruped.model.fall_height_fraction");

    ContactModel& c = q.contact;
    c.normal_stiffness = get<double>(d, "env.quadruped.contact.normal_stiffness");
    c.normal_damping = get<double>(d, "env.quadruped.contact.normal_damping");
    c.friction = get<double>(d, "env.quadruped.contact.friction");
    c.tangential_stiffness = get<double>(d, "env.quadruped.contact.tangential_stiffness");
    c.tangential_damping = get<double>(d, "env.quadruped.contact.tangential_damping");

    try {
      q.tg = gait_table(get<std::string>(d, "tg.gait"));
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("config key 'tg.gait': ") + e.what());
    }
    q.tg.swing_center = get<double>(d, "tg.swing_center");
    q.tg.extension_amplitude = get<double>(d, "tg.extension_amplitude");
    q.tg.extension_asymmetry = get<double>(d, "tg.extension_asymmetry");
    if (!at(d, "tg.swing_fraction").is_null()) q.tg.swing_fraction = get<double>(d, "tg.swing_fraction");
    if (!at(d, "tg.phase_offsets").is_null()) {
      const auto off = get<std::vector<double>>(d, "tg.phase_offsets");
      require(off.size() == kNumLegs, "tg.phase_offsets", "expects four values");
      for (std::size_t i = 0; i < kNumLegs; ++i) q.tg.leg_phase_offsets[i] = off[i];
    }
    q.tg.dt = t.control_dt;

    q.bounds.frequency = get_interval(d, "policy.bounds.frequency");
    q.bounds.amplitude = get_interval(d, "policy.bounds.amplitude");
    q.bounds.height = get_interval(d, "policy.bounds.height");
    q.bounds.correction = get<double>(d, "policy.bounds.correction");
    q.wiring = cfg.wiring;

    if (cfg.env == EnvType::kQuadruped) {
      m.validate();
      c.validate();
      t.validate();
      q.tg.validate();
      q.bounds.validate();
      require(cfg.wiring != Wiring::kVanillaTime, "env.wiring", "vanilla_time is only defined for pointmass");
    }
  }

  // policy
  try {
    cfg.policy_kind = parse_policy_kind(get<std::string>(d, "policy.kind"));
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("config key 'policy.kind': ") + e.what());
  }
  cfg.hidden = get<std::vector<std::size_t>>(d, "policy.hidden");
  cfg.bias = get<bool>(d, "policy.bias");

  // optimizer
  const auto algo = get<std::string>(d, "optim.algo");
  if (algo.empty()) throw ConfigError("missing required config key 'optim.algo'");
  if (algo == "ars") {
    cfg.algo = OptimAlgo::kArs;
  } else if (algo == "ppo") {
    cfg.algo = OptimAlgo::kPpo;
  } else {
    throw ConfigError("config key 'optim.algo' must be ars or ppo, got '" + algo + "'");
  }
  ArsConfig& a = cfg.ars;
  a.step_size = get<double>(d, "optim.ars.step_size");
  a.noise_std = get<double>(d, "optim.ars.noise_std");
  a.num_directions = get<int>(d, "optim.ars.num_directions");
  a.top_directions = get<int>(d, "optim.ars.top_directions");
  a.rollouts_per_direction = get<int>(d, "optim.ars.rollouts_per_direction");
  a.normalize_obs = get_flag(d, "optim.ars.normalize_obs", cfg.env == EnvType::kQuadruped);
  PpoConfig& p = cfg.ppo;
  p.clip = get<double>(d, "optim.ppo.clip");
  p.gamma = get<double>(d, "optim.ppo.gamma");
  p.lambda = get<double>(d, "optim.ppo.lambda");
  p.learning_rate = get<double>(d, "optim.ppo.learning_rate");
  p.epochs = get<int>(d, "optim.ppo.epochs");
  p.minibatch_size = get<int>(d, "optim.ppo.minibatch_size");
  p.episodes_per_batch = get<int>(d, "optim.ppo.episodes_per_batch");
  p.value_coef = get<double>(d, "optim.ppo.value_coef");
  p.entropy_coef = get<double>(d, "optim.ppo.entropy_coef");
  p.init_std = get<double>(d, "optim.ppo.init_std");
  p.value_hidden = get<std::vector<std::size_t>>(d, "optim.ppo.value_hidden");
  p.normalize_obs = get_flag(d, "optim.ppo.normalize_obs", cfg.env == EnvType::kQuadruped);
  if (cfg.algo == OptimAlgo::kArs) a.validate();
  if (cfg.algo == OptimAlgo::kPpo) p.validate();

  // run
  RunSection& r = cfg.run;
  r.seed = get<std::uint64_t>(d, "run.seed");
  r.max_rollouts = get_size(d, "run.max_rollouts");
  r.max_env_steps = get_size(d, "run.max_env_steps");
  r.max_iterations = get_size(d, "run.max_iterations");
  r.eval_every = get_size(d, "run.eval_every");
  r.eval_episodes = get_size(d, "run.eval_episodes");
  r.eval_perturbations = get<bool>(d, "run.eval_perturbations");
  r.checkpoint_every = get_size(d, "run.checkpoint_every");
  r.workers = get_size(d, "run.workers");
  r.output_dir = get<std::string>(d, "run.output_dir");
  r.log_wall_time = get<bool>(d, "run.log_wall_time");
  require(r.eval_episodes >= 1, "run.eval_episodes", "must be at least 1");
  require(r.workers >= 1, "run.workers", "must be at least 1");

  cfg.policy_shape().validate();
}

}  // namespace

std::string_view to_string(EnvType type) { return type == EnvType::kPointMass ? "pointmass" : "quadruped"; }
std::string_view to_string(OptimAlgo algo) { return algo == OptimAlgo::kArs ? "ars" : "ppo"; }

std::size_t RunConfig::observation_dim() const {
  if (env == EnvType::kQuadruped) return wiring == Wiring::kPmtg ? kObservationDim : 5;
  return wiring == Wiring::kVanilla ? 2 : 4;
}

std::size_t RunConfig::action_dim() const {
  if (env == EnvType::kQuadruped) return wiring == Wiring::kPmtg ? kActionDim : LegCommand::kSize;
  return wiring == Wiring::kPmtg ? 4 : 2;
}

PolicyShape RunConfig::policy_shape() const {
  PolicyShape s;
  s.kind = policy_kind;
  s.input_dim = observation_dim();
  s.output_dim = action_dim();
  if (policy_kind == PolicyKind::kMlp) s.hidden = hidden;
  s.bias = bias;
  return s;
}

std::size_t RunConfig::max_episode_steps() const {
  if (env == EnvType::kPointMass) return static_cast<std::size_t>(pointmass.episode_steps);
  return static_cast<std::size_t>(std::llround(quadruped.task.episode_length / quadruped.task.control_dt));
}

std::uint64_t RunConfig::hash() const {
  json key;
  key["env"] = resolved.at("env");
  key["tg"] = resolved.at("tg");
  key["policy"] = resolved.at("policy");
  key["optim.normalize_obs"] = algo == OptimAlgo::kArs ? ars.normalize_obs : ppo.normalize_obs;
  return fnv1a64(key.dump());
}

const json& config_defaults() {
  static const json defaults = json::parse(kDefaults);
  return defaults;
}

void apply_overrides(json& doc, const std::vector<std::string>& overrides) {
  for (const std::string& item : overrides) {
    const std::size_t eq = item.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ConfigError("override '" + item + "' must look like key.path=value");
    }
    const std::string path = item.substr(0, eq);
    const std::string text = item.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
    json* cur = &doc;
    std::size_t start = 0;
    while (true) {
      const std::size_t dot = path.find('.', start);
      const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
      if (key.empty()) throw ConfigError("override '" + item + "' has an empty key");
      if (!cur->is_object()) *cur = json::object();
      if (dot == std::string::npos) {
        (*cur)[key] = value;
        break;
      }
      cur = &(*cur)[key];
      start = dot + 1;
    }
  }
}

RunConfig resolve_config(const json& user, const std::vector<std::string>& overrides) {
  json doc = user.is_null() ? json::object() : user;
  apply_overrides(doc, overrides);
  RunConfig cfg;
  cfg.resolved = config_defaults();
  merge_into(cfg.resolved, doc, "");
  fill_typed(cfg);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  json doc = json::parse(in, nullptr, false, true);
  if (doc.is_discarded()) throw ConfigError("config file " + path.string() + " is not valid JSON");
  return resolve_config(doc, overrides);
}

EpisodeFactory make_episode_factory(const RunConfig& cfg, bool evaluation) {
  if (cfg.env == EnvType::kPointMass) {
    const PointMassConfig env = cfg.pointmass;
    const PointMassWiringConfig wiring = cfg.pointmass_wiring;
    return [env, wiring]() -> std::unique_ptr<Episode> { return std::make_unique<PointMassEpisode>(env, wiring); };
  }
  QuadrupedEpisodeConfig q = cfg.quadruped;
  if (evaluation && !cfg.run.eval_perturbations) q.task.perturbations.enabled = false;
  return [q]() -> std::unique_ptr<Episode> { return std::make_unique<QuadrupedEpisode>(q); };
}

std::string config_reference() {
  std::ostringstream out;
  out << "| key | default | meaning |\n|---|---|---|\n";
  const auto& desc = descriptions();
  auto walk = [&](auto&& self, const json& node, const std::string& prefix) -> void {
    for (auto it = node.begin(); it != node.end(); ++it) {
      const std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
      if (it.value().is_object()) {
        self(self, it.value(), path);
        continue;
      }
      const auto found = desc.find(path);
      std::string def = it.value().dump();
      if (it.value().is_string() && it.value().get<std::string>().empty()) def = "(required)";
      out << "| `" << path << "` | `" << def << "` | " << (found == desc.end() ? "" : found->second) << " |\n";
    }
  };
  walk(walk, config_defaults(), "");
  return out.str();
}

}  // namespace pmtg
