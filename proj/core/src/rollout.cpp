#include "pmtg/rollout.hpp"

#include "pmtg/errors.hpp"

namespace pmtg {

RolloutRecord rollout(const PolicyParams& params, Episode& episode, std::uint64_t seed,
                      const RolloutOptions& options) {
  if (params.shape.input_dim != episode.observation_dim() || params.shape.output_dim != episode.action_dim()) {
    throw ConfigError("policy " + params.shape.describe() + " does not fit an episode with " +
                      std::to_string(episode.observation_dim()) + " observations and " +
                      std::to_string(episode.action_dim()) + " actions");
  }
  RolloutRecord record;
  record.seed = seed;
  if (options.collect_obs_stats) record.obs_stats = RunningNormalizer(episode.observation_dim());

  std::vector<double> obs = episode.reset(seed);
  std::vector<double> policy_input(obs.size());
  std::vector<double> action(episode.action_dim());
  while (true) {
    if (options.collect_obs_stats) record.obs_stats.update(obs);
    if (options.normalizer != nullptr && options.normalizer->dim() == obs.size()) {
      options.normalizer->apply(obs, policy_input);
    } else {
      policy_input = obs;
    }
    policy_forward(params, policy_input, action);
    if (options.record_steps) {
      record.observations.push_back(obs);
      record.actions.push_back(action);
    }
    StepResult step = episode.step(action);
    record.rewards.push_back(step.reward);
    record.episode_return += step.reward;
    ++record.length;
    if (options.record_trace) record.trace.push_back(episode.trace_row());
    if (step.done || (options.max_steps > 0 && record.length >= options.max_steps)) break;
    obs = std::move(step.observation);
  }
  record.summary = episode.summary();
  return record;
}

}  // namespace pmtg
