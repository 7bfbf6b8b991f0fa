#pragma once

// Run configuration: a nested JSON document merged over built-in defaults.
// Unknown keys and type mismatches are rejected with their dotted path.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "pmtg/ars.hpp"
#include "pmtg/episode.hpp"
#include "pmtg/pointmass.hpp"
#include "pmtg/policy.hpp"
#include "pmtg/ppo.hpp"
#include "pmtg/quadruped.hpp"

namespace pmtg {

enum class EnvType { kPointMass, kQuadruped };
enum class OptimAlgo { kArs, kPpo };

std::string_view to_string(EnvType type);
std::string_view to_string(OptimAlgo algo);

struct RunSection {
  std::uint64_t seed = 0;
  std::size_t max_rollouts = 1000;
  std::size_t max_env_steps = 0;   // 0 = no step budget
  std::size_t max_iterations = 0;  // 0 = no iteration cap
  std::size_t eval_every = 10;
  std::size_t eval_episodes = 4;
  bool eval_perturbations = false;
  std::size_t checkpoint_every = 10;
  std::size_t workers = 1;
  std::string output_dir = "runs/default";
  bool log_wall_time = false;
};

struct RunConfig {
  nlohmann::json resolved;  // full document after merging defaults and overrides

  EnvType env = EnvType::kPointMass;
  Wiring wiring = Wiring::kPmtg;
  PointMassConfig pointmass;
  PointMassWiringConfig pointmass_wiring;
  QuadrupedEpisodeConfig quadruped;

  PolicyKind policy_kind = PolicyKind::kLinear;
  std::vector<std::size_t> hidden{32, 32};
  bool bias = false;

  OptimAlgo algo = OptimAlgo::kArs;
  ArsConfig ars;
  PpoConfig ppo;

  RunSection run;

  std::size_t observation_dim() const;
  std::size_t action_dim() const;
  PolicyShape policy_shape() const;
  // Longest possible episode in environment steps.
  std::size_t max_episode_steps() const;
  // Hash of everything that determines the policy's input/output meaning.
  std::uint64_t hash() const;
};

const nlohmann::json& config_defaults();

// Applies "a.b.c=value" assignments. Values parse as JSON when possible and
// fall back to plain strings.
void apply_overrides(nlohmann::json& doc, const std::vector<std::string>& overrides);

RunConfig resolve_config(const nlohmann::json& user, const std::vector<std::string>& overrides = {});
RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

EpisodeFactory make_episode_factory(const RunConfig& cfg, bool evaluation = false);

// Markdown table of every key, its default and meaning.
std::string config_reference();

}  // namespace pmtg
