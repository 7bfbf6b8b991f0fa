#include "pmtg/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "pmtg/errors.hpp"
#include "pmtg/worker_pool.hpp"

namespace pmtg {

namespace {

constexpr double kLogTwoPi = 1.8378770664093453;  // log(2π)

}  // namespace

void PpoConfig::validate() const {
  if (!(clip > 0.0 && clip < 1.0)) throw ConfigError("optim.ppo.clip must lie in (0, 1)");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("optim.ppo.gamma must lie in [0, 1]");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("optim.ppo.lambda must lie in [0, 1]");
  if (!(learning_rate > 0.0)) throw ConfigError("optim.ppo.learning_rate must be positive");
  if (epochs < 1 || minibatch_size < 1 || episodes_per_batch < 1) {
    throw ConfigError("optim.ppo epochs, minibatch_size and episodes_per_batch must be >= 1");
  }
  if (!(init_std > 0.0)) throw ConfigError("optim.ppo.init_std must be positive");
  if (value_hidden.size() != 2) throw ConfigError("optim.ppo.value_hidden needs two layer sizes");
}

GaeResult gae(std::span<const double> rewards, std::span<const double> values, double bootstrap,
              double gamma, double lambda) {
  if (rewards.size() != values.size()) throw ConfigError("gae: rewards and values differ in length");
  const std::size_t n = rewards.size();
  GaeResult out;
  out.advantages.assign(n, 0.0);
  out.returns.assign(n, 0.0);
  double next_value = bootstrap;
  double running = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    const double delta = rewards[i] + gamma * next_value - values[i];
    running = delta + gamma * lambda * running;
    out.advantages[i] = running;
    out.returns[i] = running + values[i];
    next_value = values[i];
  }
  return out;
}

double clipped_surrogate(double ratio, double advantage, double clip) {
  const double clipped = std::clamp(ratio, 1.0 - clip, 1.0 + clip);
  return std::min(ratio * advantage, clipped * advantage);
}

double gaussian_log_prob(std::span<const double> action, std::span<const double> mean,
                         std::span<const double> log_std) {
  double lp = 0.0;
  for (std::size_t j = 0; j < action.size(); ++j) {
    const double z = (action[j] - mean[j]) * std::exp(-log_std[j]);
    lp += -0.5 * z * z - log_std[j] - 0.5 * kLogTwoPi;
  }
  return lp;
}

void policy_backward(const PolicyParams& params, std::span<const double> obs, std::span<const double> upstream,
                     std::span<double> grad) {
  const PolicyShape& s = params.shape;
  if (grad.size() != params.flat.size() || upstream.size() != s.output_dim || obs.size() != s.input_dim) {
    throw ConfigError("policy_backward: shape mismatch");
  }
  const double* w = params.flat.data();
  if (s.kind == PolicyKind::kLinear) {
    for (std::size_t r = 0; r < s.output_dim; ++r) {
      for (std::size_t c = 0; c < s.input_dim; ++c) grad[r * s.input_dim + c] += upstream[r] * obs[c];
    }
    if (s.bias) {
      const std::size_t off = s.output_dim * s.input_dim;
      for (std::size_t r = 0; r < s.output_dim; ++r) grad[off + r] += upstream[r];
    }
    return;
  }
  const std::size_t n_in = s.input_dim;
  const std::size_t n1 = s.hidden[0];
  const std::size_t n2 = s.hidden[1];
  const std::size_t n_out = s.output_dim;
  const std::size_t w1 = 0, b1 = w1 + n1 * n_in, w2 = b1 + n1, b2 = w2 + n2 * n1, w3 = b2 + n2,
                    b3 = w3 + n_out * n2;

  std::vector<double> z1(n1), h1(n1), z2(n2), h2(n2);
  for (std::size_t r = 0; r < n1; ++r) {
    double acc = w[b1 + r];
    for (std::size_t c = 0; c < n_in; ++c) acc += w[w1 + r * n_in + c] * obs[c];
    z1[r] = acc;
    h1[r] = std::max(acc, 0.0);
  }
  for (std::size_t r = 0; r < n2; ++r) {
    double acc = w[b2 + r];
    for (std::size_t c = 0; c < n1; ++c) acc += w[w2 + r * n1 + c] * h1[c];
    z2[r] = acc;
    h2[r] = std::max(acc, 0.0);
  }

  std::vector<double> dh2(n2, 0.0);
  for (std::size_t r = 0; r < n_out; ++r) {
    const double g = upstream[r];
    grad[b3 + r] += g;
    for (std::size_t c = 0; c < n2; ++c) {
      grad[w3 + r * n2 + c] += g * h2[c];
      dh2[c] += g * w[w3 + r * n2 + c];
    }
  }
  std::vector<double> dh1(n1, 0.0);
  for (std::size_t r = 0; r < n2; ++r) {
    const double g = z2[r] > 0.0 ? dh2[r] : 0.0;
    grad[b2 + r] += g;
    for (std::size_t c = 0; c < n1; ++c) {
      grad[w2 + r * n1 + c] += g * h1[c];
      dh1[c] += g * w[w2 + r * n1 + c];
    }
  }
  for (std::size_t r = 0; r < n1; ++r) {
    const double g = z1[r] > 0.0 ? dh1[r] : 0.0;
    grad[b1 + r] += g;
    for (std::size_t c = 0; c < n_in; ++c) grad[w1 + r * n_in + c] += g * obs[c];
  }
}

ActorCritic ActorCritic::make(const PolicyShape& policy_shape, const PpoConfig& cfg, std::uint64_t seed) {
  ActorCritic net;
  net.policy = PolicyParams::random_init(policy_shape, derive_seed(seed, "init", {0}));
  net.log_std.assign(policy_shape.output_dim, std::log(cfg.init_std));
  PolicyShape value_shape{PolicyKind::kMlp, policy_shape.input_dim, 1, cfg.value_hidden, true};
  net.value = PolicyParams::random_init(value_shape, derive_seed(seed, "init", {1}));
  return net;
}

std::size_t ActorCritic::size() const { return policy.flat.size() + log_std.size() + value.flat.size(); }

std::vector<double> ActorCritic::flatten() const {
  std::vector<double> out;
  out.reserve(size());
  out.insert(out.end(), policy.flat.begin(), policy.flat.end());
  out.insert(out.end(), log_std.begin(), log_std.end());
  out.insert(out.end(), value.flat.begin(), value.flat.end());
  return out;
}

void ActorCritic::unflatten(std::span<const double> flat) {
  if (flat.size() != size()) throw ConfigError("actor-critic flat size mismatch");
  auto it = flat.begin();
  std::copy(it, it + static_cast<std::ptrdiff_t>(policy.flat.size()), policy.flat.begin());
  it += static_cast<std::ptrdiff_t>(policy.flat.size());
  std::copy(it, it + static_cast<std::ptrdiff_t>(log_std.size()), log_std.begin());
  it += static_cast<std::ptrdiff_t>(log_std.size());
  std::copy(it, flat.end(), value.flat.begin());
}

PpoLoss ppo_loss(const ActorCritic& net, const PpoBatch& batch, std::span<const std::size_t> indices,
                 const PpoConfig& cfg, std::vector<double>* grad) {
  if (indices.empty()) throw PpoError("empty PPO minibatch");
  const std::size_t n_act = net.policy.shape.output_dim;
  const std::size_t n_pol = net.policy.flat.size();
  const std::size_t n_val = net.value.flat.size();
  std::span<double> g_pol, g_std, g_val;
  if (grad != nullptr) {
    grad->assign(net.size(), 0.0);
    g_pol = std::span<double>(grad->data(), n_pol);
    g_std = std::span<double>(grad->data() + n_pol, n_act);
    g_val = std::span<double>(grad->data() + n_pol + n_act, n_val);
  }
  const double inv_b = 1.0 / static_cast<double>(indices.size());
  std::vector<double> inv_var(n_act);
  for (std::size_t j = 0; j < n_act; ++j) inv_var[j] = std::exp(-2.0 * net.log_std[j]);

  PpoLoss loss;
  std::vector<double> mean(n_act), up(n_act), value_out(1), value_up(1);
  std::size_t clipped = 0;
  for (std::size_t idx : indices) {
    const auto& obs = batch.observations[idx];
    const auto& act = batch.actions[idx];
    policy_forward(net.policy, obs, mean);
    const double logp = gaussian_log_prob(act, mean, net.log_std);
    const double ratio = std::exp(logp - batch.log_probs[idx]);
    const double adv = batch.advantages[idx];
    loss.policy -= clipped_surrogate(ratio, adv, cfg.clip) * inv_b;
    if (ratio < 1.0 - cfg.clip || ratio > 1.0 + cfg.clip) ++clipped;

    policy_forward(net.value, obs, value_out);
    const double verr = value_out[0] - batch.returns[idx];
    loss.value += verr * verr * inv_b;

    if (grad != nullptr) {
      const double unclipped = ratio * adv;
      const double clipped_term = std::clamp(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip) * adv;
      // d surrogate / d logp; zero when the clipped branch is the minimum.
      const double d_logp = unclipped <= clipped_term ? ratio * adv : 0.0;
      for (std::size_t j = 0; j < n_act; ++j) {
        const double diff = act[j] - mean[j];
        up[j] = -inv_b * d_logp * diff * inv_var[j];
        g_std[j] += -inv_b * d_logp * (diff * diff * inv_var[j] - 1.0);
      }
      policy_backward(net.policy, obs, up, g_pol);
      value_up[0] = cfg.value_coef * 2.0 * verr * inv_b;
      policy_backward(net.value, obs, value_up, g_val);
    }
  }
  for (std::size_t j = 0; j < n_act; ++j) loss.entropy += net.log_std[j] + 0.5 * (kLogTwoPi + 1.0);
  if (grad != nullptr) {
    for (std::size_t j = 0; j < n_act; ++j) g_std[j] -= cfg.entropy_coef;
  }
  loss.total = loss.policy + cfg.value_coef * loss.value - cfg.entropy_coef * loss.entropy;
  loss.clip_fraction = static_cast<double>(clipped) * inv_b;
  return loss;
}

Adam::Adam(std::size_t dim, double learning_rate) : lr_(learning_rate), m_(dim, 0.0), v_(dim, 0.0) {}

void Adam::step(std::span<double> params, std::span<const double> grad) {
  if (params.size() != m_.size() || grad.size() != m_.size()) throw ConfigError("Adam: size mismatch");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
  }
}

namespace {

void check_loss(const PpoLoss& loss, const char* when) {
  if (!std::isfinite(loss.total) || !std::isfinite(loss.policy) || !std::isfinite(loss.value)) {
    throw PpoError(std::string("non-finite PPO loss ") + when + " (policy=" + std::to_string(loss.policy) +
                   ", value=" + std::to_string(loss.value) + "); update rejected");
  }
}

}  // namespace

PpoUpdateStats ppo_update(ActorCritic& net, Adam& optimizer, PpoBatch batch, const PpoConfig& cfg, Rng& rng) {
  cfg.validate();
  const std::size_t n = batch.size();
  if (n == 0) throw PpoError("empty PPO batch");
  double mean = 0.0;
  for (double a : batch.advantages) mean += a;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double a : batch.advantages) var += (a - mean) * (a - mean);
  const double std_dev = std::sqrt(var / static_cast<double>(n));
  for (double& a : batch.advantages) a = (a - mean) / (std_dev + 1e-8);

  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  PpoUpdateStats stats;
  stats.first = ppo_loss(net, batch, all, cfg);
  check_loss(stats.first, "before update");

  const ActorCritic backup = net;
  std::vector<double> flat = net.flatten();
  std::vector<double> grad;
  std::vector<std::size_t> order = all;
  const std::size_t mb = std::min<std::size_t>(static_cast<std::size_t>(cfg.minibatch_size), n);
  try {
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t start = 0; start < n; start += mb) {
        const std::size_t end = std::min(n, start + mb);
        std::span<const std::size_t> idx(order.data() + start, end - start);
        const PpoLoss l = ppo_loss(net, batch, idx, cfg, &grad);
        check_loss(l, "during update");
        optimizer.step(flat, grad);
        net.unflatten(flat);
        ++stats.minibatches;
      }
    }
    stats.last = ppo_loss(net, batch, all, cfg);
    check_loss(stats.last, "after update");
  } catch (...) {
    net = backup;
    throw;
  }
  return stats;
}

PpoCollection ppo_collect(const ActorCritic& net, const EpisodeFactory& factory,
                          const RunningNormalizer* normalizer, const PpoConfig& cfg, std::uint64_t master_seed,
                          std::uint64_t iteration, WorkerPool* pool) {
  struct EpisodeData {
    PpoBatch part;
    double ret = 0.0;
    std::size_t steps = 0;
    RunningNormalizer stats;
  };
  const std::size_t episodes = static_cast<std::size_t>(cfg.episodes_per_batch);
  std::vector<EpisodeData> data(episodes);
  const std::size_t n_act = net.policy.shape.output_dim;
  std::vector<double> std_dev(n_act);
  for (std::size_t j = 0; j < n_act; ++j) std_dev[j] = std::exp(net.log_std[j]);

  auto task = [&](std::size_t e) {
    EpisodeData& d = data[e];
    auto episode = factory();
    Rng rng = make_rng(derive_seed(master_seed, "explore", {iteration, e}));
    std::normal_distribution<double> normal(0.0, 1.0);
    d.stats = RunningNormalizer(episode->observation_dim());
    std::vector<double> obs = episode->reset(derive_seed(master_seed, "env", {iteration, e}));
    std::vector<double> mean(n_act), value(1);
    std::vector<double> rewards, values;
    while (true) {
      d.stats.update(obs);
      std::vector<double> input =
          (normalizer != nullptr && normalizer->dim() == obs.size()) ? normalizer->apply(obs) : obs;
      policy_forward(net.policy, input, mean);
      std::vector<double> action(n_act);
      for (std::size_t j = 0; j < n_act; ++j) action[j] = mean[j] + std_dev[j] * normal(rng);
      policy_forward(net.value, input, value);
      d.part.log_probs.push_back(gaussian_log_prob(action, mean, net.log_std));
      values.push_back(value[0]);
      StepResult step = episode->step(action);
      d.part.observations.push_back(std::move(input));
      d.part.actions.push_back(std::move(action));
      rewards.push_back(step.reward);
      d.ret += step.reward;
      ++d.steps;
      if (step.done) break;
      obs = std::move(step.observation);
    }
    GaeResult g = gae(rewards, values, 0.0, cfg.gamma, cfg.lambda);
    d.part.advantages = std::move(g.advantages);
    d.part.returns = std::move(g.returns);
  };
  if (pool != nullptr) {
    pool->run(episodes, task);
  } else {
    for (std::size_t e = 0; e < episodes; ++e) task(e);
  }

  PpoCollection out;
  for (auto& d : data) {
    auto append = [](auto& dst, auto& src) {
      dst.insert(dst.end(), std::make_move_iterator(src.begin()), std::make_move_iterator(src.end()));
    };
    append(out.batch.observations, d.part.observations);
    append(out.batch.actions, d.part.actions);
    append(out.batch.log_probs, d.part.log_probs);
    append(out.batch.advantages, d.part.advantages);
    append(out.batch.returns, d.part.returns);
    out.episode_returns.push_back(d.ret);
    out.env_steps += d.steps;
    if (out.obs_stats.dim() == 0) out.obs_stats = RunningNormalizer(d.stats.dim());
    out.obs_stats.merge(d.stats);
  }
  return out;
}

}  // namespace pmtg
