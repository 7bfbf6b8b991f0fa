#pragma once

// Augmented Random Search: antithetic finite-difference steps along random
// Gaussian directions, keeping the best directions and scaling the step by
// the spread of the returns that were used.

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "pmtg/normalizer.hpp"

namespace pmtg {

class WorkerPool;

struct ArsConfig {
  double step_size = 0.02;
  double noise_std = 0.025;
  int num_directions = 8;
  int top_directions = 4;
  int rollouts_per_direction = 1;
  bool normalize_obs = false;

  void validate() const;
};

class ArsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Result of evaluating one perturbed parameter vector.
struct EvalOutcome {
  double episode_return = 0.0;
  std::size_t steps = 0;
  RunningNormalizer obs_stats;  // empty unless the evaluator collects them
};

using ParamEvaluator = std::function<EvalOutcome(std::span<const double> params, std::uint64_t seed)>;

// Pure update step. Direction k contributes (r_plus[k] - r_minus[k]) delta_k
// when it ranks in the top_directions by max(r_plus, r_minus). Selected
// directions are reduced in a canonical order, so permuting the inputs
// leaves the result bit-identical. A zero return spread is replaced by 1.
std::vector<double> ars_update(std::span<const double> params,
                               const std::vector<std::vector<double>>& directions,
                               std::span<const double> r_plus, std::span<const double> r_minus,
                               const ArsConfig& cfg);

struct ArsIteration {
  std::vector<double> params;
  // Outcomes in (direction, sign, repeat) order: index = (k * 2 + s) * reps + j.
  std::vector<EvalOutcome> outcomes;
  std::size_t rollouts = 0;
  std::size_t env_steps = 0;
  double mean_return = 0.0;
  double max_return = 0.0;
  double min_return = 0.0;
};

// Seed for evaluation j of direction k with sign s (0 = +, 1 = -).
std::uint64_t ars_rollout_seed(std::uint64_t master_seed, std::uint64_t iteration, std::uint64_t direction,
                               std::uint64_t sign, std::uint64_t repeat = 0);

// Consumes exactly 2 * num_directions * rollouts_per_direction evaluations.
// Throws ArsError when any return is non-finite; params are then unchanged.
ArsIteration ars_iteration(std::span<const double> params, const ArsConfig& cfg,
                           const ParamEvaluator& evaluate, std::uint64_t master_seed,
                           std::uint64_t iteration, WorkerPool* pool = nullptr);

}  // namespace pmtg
