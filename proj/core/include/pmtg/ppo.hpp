#pragma once

// Minimal clipped-surrogate policy gradient with generalized advantage
// estimation. Gradients are exact reverse-mode sweeps written for the two
// network shapes the policies use (linear, two-layer ReLU MLP).

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "pmtg/episode.hpp"
#include "pmtg/normalizer.hpp"
#include "pmtg/policy.hpp"
#include "pmtg/seeding.hpp"

namespace pmtg {

class WorkerPool;

struct PpoConfig {
  double clip = 0.2;
  double gamma = 0.99;
  double lambda = 0.95;
  double learning_rate = 3e-4;
  int epochs = 3;
  int minibatch_size = 256;
  int episodes_per_batch = 8;
  double value_coef = 0.5;
  double entropy_coef = 0.0;
  double init_std = 0.3;  // exploration std in raw (pre-squash) action units
  std::vector<std::size_t> value_hidden{32, 32};
  bool normalize_obs = true;

  void validate() const;
};

class PpoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;  // advantages + values
};

// Backward recursion A_t = δ_t + γλ A_{t+1}, δ_t = r_t + γ V_{t+1} - V_t,
// with V_T = bootstrap.
GaeResult gae(std::span<const double> rewards, std::span<const double> values, double bootstrap,
              double gamma, double lambda);

// min(r A, clip(r, 1 - ε, 1 + ε) A)
double clipped_surrogate(double ratio, double advantage, double clip);

double gaussian_log_prob(std::span<const double> action, std::span<const double> mean,
                         std::span<const double> log_std);

// Adds d(upstream · f(obs))/dθ to grad, where f is the network forward pass.
void policy_backward(const PolicyParams& params, std::span<const double> obs, std::span<const double> upstream,
                     std::span<double> grad);

struct ActorCritic {
  PolicyParams policy;
  std::vector<double> log_std;
  PolicyParams value;  // scalar output

  static ActorCritic make(const PolicyShape& policy_shape, const PpoConfig& cfg, std::uint64_t seed);

  // Flat layout: policy params, log_std, value params.
  std::size_t size() const;
  std::vector<double> flatten() const;
  void unflatten(std::span<const double> flat);
};

struct PpoBatch {
  std::vector<std::vector<double>> observations;  // policy inputs (already normalized)
  std::vector<std::vector<double>> actions;       // raw sampled actions
  std::vector<double> log_probs;                  // under the behaviour policy
  std::vector<double> advantages;
  std::vector<double> returns;

  std::size_t size() const { return actions.size(); }
};

struct PpoLoss {
  double total = 0.0;
  double policy = 0.0;  // -mean clipped surrogate
  double value = 0.0;   // mean squared value error
  double entropy = 0.0;
  double clip_fraction = 0.0;
};

// Loss over batch[indices]; when grad is given it receives dLoss/dθ in
// ActorCritic::flatten() layout (overwritten, not accumulated).
PpoLoss ppo_loss(const ActorCritic& net, const PpoBatch& batch, std::span<const std::size_t> indices,
                 const PpoConfig& cfg, std::vector<double>* grad = nullptr);

class Adam {
 public:
  Adam() = default;
  Adam(std::size_t dim, double learning_rate);
  void step(std::span<double> params, std::span<const double> grad);
  double learning_rate() const { return lr_; }

 private:
  double lr_ = 1e-3;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  std::vector<double> m_;
  std::vector<double> v_;
  long t_ = 0;
};

struct PpoUpdateStats {
  PpoLoss first;  // full-batch loss before the update
  PpoLoss last;   // full-batch loss after the update
  int minibatches = 0;
};

// Normalizes advantages over the batch, then runs cfg.epochs passes of
// shuffled minibatches. Rejects the update if any loss is non-finite.
PpoUpdateStats ppo_update(ActorCritic& net, Adam& optimizer, PpoBatch batch, const PpoConfig& cfg, Rng& rng);

struct PpoCollection {
  PpoBatch batch;
  std::vector<double> episode_returns;
  std::size_t env_steps = 0;
  RunningNormalizer obs_stats;
};

// Samples cfg.episodes_per_batch stochastic episodes, computes GAE per
// episode (terminal bootstrap 0) and gathers them in episode order.
PpoCollection ppo_collect(const ActorCritic& net, const EpisodeFactory& factory,
                          const RunningNormalizer* normalizer, const PpoConfig& cfg, std::uint64_t master_seed,
                          std::uint64_t iteration, WorkerPool* pool = nullptr);

}  // namespace pmtg
