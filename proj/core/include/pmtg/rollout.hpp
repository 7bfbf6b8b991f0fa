#pragma once

#include <cstdint>
#include <vector>

#include "pmtg/episode.hpp"
#include "pmtg/normalizer.hpp"
#include "pmtg/policy.hpp"

namespace pmtg {

struct RolloutOptions {
  const RunningNormalizer* normalizer = nullptr;  // applied to observations before the policy
  bool collect_obs_stats = false;                 // accumulate raw observations into obs_stats
  bool record_steps = false;
  bool record_trace = false;
  std::size_t max_steps = 0;  // 0 = until the episode reports done
};

struct RolloutRecord {
  std::vector<std::vector<double>> observations;  // raw, before normalization
  std::vector<std::vector<double>> actions;       // raw policy outputs
  std::vector<double> rewards;
  std::vector<double> values;  // filled by actor-critic collection only
  double episode_return = 0.0;
  std::size_t length = 0;
  std::uint64_t seed = 0;
  EpisodeSummary summary;
  RunningNormalizer obs_stats;
  std::vector<std::vector<double>> trace;
};

// One deterministic episode of the control loop: observe, normalize, policy
// forward, hand the raw output to the episode (which squashes, drives the TG
// and steps the simulator), repeat until done.
RolloutRecord rollout(const PolicyParams& params, Episode& episode, std::uint64_t seed,
                      const RolloutOptions& options = {});

}  // namespace pmtg
