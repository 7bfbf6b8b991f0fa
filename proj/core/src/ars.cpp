#include "pmtg/ars.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "pmtg/errors.hpp"
#include "pmtg/seeding.hpp"
#include "pmtg/worker_pool.hpp"

namespace pmtg {

void ArsConfig::validate() const {
  if (num_directions < 1) throw ConfigError("optim.ars.num_directions must be >= 1");
  if (top_directions < 1 || top_directions > num_directions) {
    throw ConfigError("optim.ars.top_directions must lie in [1, num_directions]");
  }
  if (!(step_size > 0.0)) throw ConfigError("optim.ars.step_size must be positive");
  if (!(noise_std > 0.0)) throw ConfigError("optim.ars.noise_std must be positive");
  if (rollouts_per_direction < 1) throw ConfigError("optim.ars.rollouts_per_direction must be >= 1");
}

std::vector<double> ars_update(std::span<const double> params,
                               const std::vector<std::vector<double>>& directions,
                               std::span<const double> r_plus, std::span<const double> r_minus,
                               const ArsConfig& cfg) {
  const std::size_t n = directions.size();
  if (r_plus.size() != n || r_minus.size() != n) throw ConfigError("ARS return count mismatch");
  const std::size_t b = std::min<std::size_t>(static_cast<std::size_t>(cfg.top_directions), n);

  // Canonical order: best first, ties broken by the returns and then by the
  // direction itself, never by input position.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t c) {
    const double ka = std::max(r_plus[a], r_minus[a]);
    const double kc = std::max(r_plus[c], r_minus[c]);
    if (ka != kc) return ka > kc;
    if (r_plus[a] != r_plus[c]) return r_plus[a] > r_plus[c];
    if (r_minus[a] != r_minus[c]) return r_minus[a] > r_minus[c];
    return std::lexicographical_compare(directions[a].begin(), directions[a].end(), directions[c].begin(),
                                        directions[c].end());
  });
  order.resize(b);

  double sum = 0.0;
  for (std::size_t k : order) sum += r_plus[k] + r_minus[k];
  const double mean = sum / static_cast<double>(2 * b);
  double sq = 0.0;
  for (std::size_t k : order) {
    sq += (r_plus[k] - mean) * (r_plus[k] - mean);
    sq += (r_minus[k] - mean) * (r_minus[k] - mean);
  }
  double sigma = std::sqrt(sq / static_cast<double>(2 * b));
  if (!(sigma > 0.0)) sigma = 1.0;

  std::vector<double> step(params.size(), 0.0);
  for (std::size_t k : order) {
    const double diff = r_plus[k] - r_minus[k];
    const auto& d = directions[k];
    for (std::size_t i = 0; i < step.size(); ++i) step[i] += diff * d[i];
  }
  const double scale = cfg.step_size / (static_cast<double>(b) * sigma);
  std::vector<double> out(params.begin(), params.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += scale * step[i];
  return out;
}

std::uint64_t ars_rollout_seed(std::uint64_t master_seed, std::uint64_t iteration, std::uint64_t direction,
                               std::uint64_t sign, std::uint64_t repeat) {
  return derive_seed(master_seed, "env", {iteration, direction, sign, repeat});
}

ArsIteration ars_iteration(std::span<const double> params, const ArsConfig& cfg,
                           const ParamEvaluator& evaluate, std::uint64_t master_seed,
                           std::uint64_t iteration, WorkerPool* pool) {
  cfg.validate();
  const std::size_t n = static_cast<std::size_t>(cfg.num_directions);
  const std::size_t reps = static_cast<std::size_t>(cfg.rollouts_per_direction);
  const std::size_t dim = params.size();

  Rng rng = make_rng(derive_seed(master_seed, "optim", {iteration}));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::vector<double>> directions(n, std::vector<double>(dim));
  for (auto& d : directions) {
    for (double& v : d) v = normal(rng);
  }

  ArsIteration result;
  result.outcomes.resize(2 * n * reps);
  auto task = [&](std::size_t index) {
    const std::size_t j = index % reps;
    const std::size_t s = (index / reps) % 2;
    const std::size_t k = index / (2 * reps);
    std::vector<double> candidate(params.begin(), params.end());
    const double sign = s == 0 ? 1.0 : -1.0;
    for (std::size_t i = 0; i < dim; ++i) candidate[i] += sign * cfg.noise_std * directions[k][i];
    result.outcomes[index] = evaluate(candidate, ars_rollout_seed(master_seed, iteration, k, s, j));
  };
  if (pool != nullptr) {
    pool->run(result.outcomes.size(), task);
  } else {
    for (std::size_t i = 0; i < result.outcomes.size(); ++i) task(i);
  }

  std::vector<double> r_plus(n, 0.0);
  std::vector<double> r_minus(n, 0.0);
  double total = 0.0;
  result.max_return = -std::numeric_limits<double>::infinity();
  result.min_return = std::numeric_limits<double>::infinity();
  for (std::size_t index = 0; index < result.outcomes.size(); ++index) {
    const EvalOutcome& o = result.outcomes[index];
    if (!std::isfinite(o.episode_return)) {
      throw ArsError("non-finite return in ARS iteration " + std::to_string(iteration) + ", direction " +
                     std::to_string(index / (2 * reps)) + "; update rejected");
    }
    const std::size_t s = (index / reps) % 2;
    const std::size_t k = index / (2 * reps);
    (s == 0 ? r_plus : r_minus)[k] += o.episode_return / static_cast<double>(reps);
    total += o.episode_return;
    result.max_return = std::max(result.max_return, o.episode_return);
    result.min_return = std::min(result.min_return, o.episode_return);
    result.env_steps += o.steps;
  }
  result.rollouts = result.outcomes.size();
  result.mean_return = total / static_cast<double>(result.rollouts);
  result.params = ars_update(params, directions, r_plus, r_minus, cfg);
  return result;
}

}  // namespace pmtg
