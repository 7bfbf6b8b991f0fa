#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "pmtg/ars.hpp"
#include "pmtg/pointmass.hpp"
#include "pmtg/ppo.hpp"
#include "pmtg/rollout.hpp"
#include "pmtg/worker_pool.hpp"

using namespace pmtg;

namespace {

std::vector<std::vector<double>> random_directions(std::mt19937_64& rng, std::size_t n, std::size_t dim) {
  std::normal_distribution<double> g;
  std::vector<std::vector<double>> d(n, std::vector<double>(dim));
  for (auto& row : d)
    for (double& v : row) v = g(rng);
  return d;
}

}  // namespace

TEST_SUITE("optim") {
  TEST_CASE("ARS converges on a quadratic") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      CAPTURE(seed);
      CHECK(oracle::ars_quadratic_distance(seed, 4, 500, 0.01) < 1e-2);
    }
  }

  TEST_CASE("ARS with equal returns leaves the parameters unchanged") {
    std::mt19937_64 rng(1);
    const auto dirs = random_directions(rng, 8, 5);
    const std::vector<double> theta{0.1, 0.2, -0.3, 0.4, 0.5};
    const std::vector<double> r(8, -3.25);
    CHECK(ars_update(theta, dirs, r, r, ArsConfig{}) == theta);
  }

  TEST_CASE("ARS iteration consumes 2N rollouts") {
    ArsConfig cfg;
    int calls = 0;
    const ParamEvaluator f = [&](std::span<const double> p, std::uint64_t) {
      ++calls;
      return EvalOutcome{-p[0] * p[0], 10, {}};
    };
    const ArsIteration it = ars_iteration(std::vector<double>{1.0, 2.0}, cfg, f, 3, 0);
    CHECK(calls == 16);
    CHECK(it.rollouts == 16);
    CHECK(it.outcomes.size() == 16);
    CHECK(it.env_steps == 160);
    cfg.rollouts_per_direction = 3;
    calls = 0;
    ars_iteration(std::vector<double>{1.0, 2.0}, cfg, f, 3, 0);
    CHECK(calls == 48);
  }

  TEST_CASE("ARS update is invariant to direction permutations") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 50; ++trial) {
      const auto dirs = random_directions(rng, 8, 6);
      std::vector<double> rp(8), rm(8), theta(6);
      for (double& v : rp) v = g(rng);
      for (double& v : rm) v = g(rng);
      for (double& v : theta) v = g(rng);
      // a tie in the ranking key
      rp[3] = rp[5];
      rm[3] = rm[5];
      const std::vector<double> base = ars_update(theta, dirs, rp, rm, ArsConfig{});
      std::vector<std::size_t> perm(8);
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng);
      std::vector<std::vector<double>> pd;
      std::vector<double> pp, pm;
      for (std::size_t k : perm) {
        pd.push_back(dirs[k]);
        pp.push_back(rp[k]);
        pm.push_back(rm[k]);
      }
      CHECK(ars_update(theta, pd, pp, pm, ArsConfig{}) == base);
    }
  }

  TEST_CASE("ARS update is invariant to positive return scaling") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> scale(0.01, 100.0);
    for (int trial = 0; trial < 50; ++trial) {
      const auto dirs = random_directions(rng, 8, 6);
      std::vector<double> rp(8), rm(8), theta(6, 0.0);
      for (double& v : rp) v = g(rng);
      for (double& v : rm) v = g(rng);
      const double c = scale(rng);
      std::vector<double> sp = rp, sm = rm;
      for (double& v : sp) v *= c;
      for (double& v : sm) v *= c;
      const auto a = ars_update(theta, dirs, rp, rm, ArsConfig{});
      const auto b = ars_update(theta, dirs, sp, sm, ArsConfig{});
      for (std::size_t i = 0; i < a.size(); ++i) CHECK(b[i] == doctest::Approx(a[i]).epsilon(1e-12));
    }
  }

  TEST_CASE("ARS update matches the textbook formula") {
    std::mt19937_64 rng(6);
    const auto dirs = random_directions(rng, 4, 3);
    const std::vector<double> rp{1.0, 4.0, 2.0, -1.0}, rm{0.0, 3.0, 5.0, -2.0};
    ArsConfig cfg;
    cfg.num_directions = 4;
    cfg.top_directions = 2;
    // top two by max(r+, r-): directions 2 (5) and 1 (4)
    const std::vector<double> used{4.0, 3.0, 2.0, 5.0};
    const double mean = 3.5;
    double var = 0.0;
    for (double u : used) var += (u - mean) * (u - mean);
    const double sigma = std::sqrt(var / 4.0);
    const std::vector<double> theta{0.0, 0.0, 0.0};
    const auto out = ars_update(theta, dirs, rp, rm, cfg);
    for (std::size_t i = 0; i < 3; ++i) {
      const double expect = 0.02 / (2.0 * sigma) * ((4.0 - 3.0) * dirs[1][i] + (2.0 - 5.0) * dirs[2][i]);
      CHECK(out[i] == doctest::Approx(expect).epsilon(1e-12));
    }
  }

  TEST_CASE("ARS rejects non-finite returns") {
    const ParamEvaluator f = [](std::span<const double>, std::uint64_t seed) {
      return EvalOutcome{seed % 3 == 0 ? NAN : 1.0, 1, {}};
    };
    CHECK_THROWS_AS(ars_iteration(std::vector<double>{0.0}, ArsConfig{}, f, 1, 0), ArsError);
  }

  TEST_CASE("ARS iteration is identical with a worker pool") {
    const ParamEvaluator f = [](std::span<const double> p, std::uint64_t seed) {
      return EvalOutcome{-std::abs(p[0] - 1.0) + 1e-3 * static_cast<double>(seed % 97), 1, {}};
    };
    WorkerPool pool(4);
    const auto a = ars_iteration(std::vector<double>{0.0, 0.5}, ArsConfig{}, f, 9, 2);
    const auto b = ars_iteration(std::vector<double>{0.0, 0.5}, ArsConfig{}, f, 9, 2, &pool);
    CHECK(a.params == b.params);
    CHECK(a.mean_return == b.mean_return);
  }

  TEST_CASE("GAE examples") {
    const GaeResult one = gae(std::vector<double>{1.0}, std::vector<double>{0.5}, 0.25, 1.0, 1.0);
    CHECK(std::abs(one.advantages[0] - 0.75) < 1e-12);
    CHECK(std::abs(one.returns[0] - 1.25) < 1e-12);

    std::mt19937_64 rng(8);
    std::normal_distribution<double> g;
    const std::size_t n = 20;
    std::vector<double> r(n), v(n);
    for (double& x : r) x = g(rng);
    for (double& x : v) x = g(rng);
    const double boot = g(rng);
    auto value_at = [&](std::size_t t) { return t < n ? v[t] : boot; };

    const GaeResult td = gae(r, v, boot, 0.9, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
      CHECK(td.advantages[t] == doctest::Approx(r[t] + 0.9 * value_at(t + 1) - v[t]).epsilon(1e-12));
    }
    const GaeResult myopic = gae(r, v, boot, 0.0, 0.7);
    for (std::size_t t = 0; t < n; ++t) CHECK(myopic.returns[t] == doctest::Approx(r[t]).epsilon(1e-12));

    // direct sum A_t = Σ_l (γλ)^l δ_{t+l}
    const double gamma = 0.97, lambda = 0.9;
    const GaeResult full = gae(r, v, boot, gamma, lambda);
    for (std::size_t t = 0; t < n; ++t) {
      double sum = 0.0, w = 1.0;
      for (std::size_t l = t; l < n; ++l) {
        sum += w * (r[l] + gamma * value_at(l + 1) - v[l]);
        w *= gamma * lambda;
      }
      CHECK(full.advantages[t] == doctest::Approx(sum).epsilon(1e-10));
      CHECK(full.returns[t] == doctest::Approx(sum + v[t]).epsilon(1e-10));
    }
    CHECK_THROWS(gae(r, std::vector<double>(n - 1, 0.0), 0.0, 0.9, 0.9));
  }

  TEST_CASE("clipped surrogate") {
    CHECK(clipped_surrogate(1.5, 2.0, 0.2) == doctest::Approx(2.4));
    CHECK(clipped_surrogate(1.5, -2.0, 0.2) == doctest::Approx(-3.0));
    CHECK(clipped_surrogate(0.5, -2.0, 0.2) == doctest::Approx(-1.6));
    CHECK(clipped_surrogate(1.1, 1.0, 0.2) == doctest::Approx(1.1));
  }

  TEST_CASE("gaussian log prob matches the density formula") {
    const std::vector<double> a{0.3, -1.0}, mu{0.0, 0.5}, ls{std::log(0.5), 0.0};
    double expect = 0.0;
    for (std::size_t i = 0; i < 2; ++i) {
      const double s = std::exp(ls[i]);
      expect += -0.5 * std::pow((a[i] - mu[i]) / s, 2) - std::log(s) - 0.5 * std::log(2.0 * std::numbers::pi);
    }
    CHECK(gaussian_log_prob(a, mu, ls) == doctest::Approx(expect).epsilon(1e-14));
  }

  TEST_CASE("analytic gradients match central differences") {
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const oracle::GradCheck r = oracle::ppo_gradient_check(seed);
      CAPTURE(seed);
      CHECK(r.max_rel_error < 1e-4);
      worst = std::max(worst, r.max_rel_error);
    }
    MESSAGE("worst relative gradient error " << worst);
  }

  TEST_CASE("at ratio one the surrogate gradient is the vanilla policy gradient") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      oracle::TinyProblem p = oracle::make_tiny_problem(seed);
      p.cfg.value_coef = 0.0;
      p.cfg.entropy_coef = 0.0;
      for (std::size_t i = 0; i < p.batch.size(); ++i) {
        const auto mu = policy_forward(p.net.policy, p.batch.observations[i]);
        p.batch.log_probs[i] = gaussian_log_prob(p.batch.actions[i], mu, p.net.log_std);
      }
      std::vector<std::size_t> all(p.batch.size());
      std::iota(all.begin(), all.end(), 0);
      std::vector<double> grad;
      ppo_loss(p.net, p.batch, all, p.cfg, &grad);

      // -(1/B) Σ A ∇ log π by central differences of the log-likelihood
      const auto base = p.net.flatten();
      ActorCritic probe = p.net;
      const double h = 1e-6;
      auto objective = [&](const std::vector<double>& x) {
        probe.unflatten(x);
        double s = 0.0;
        for (std::size_t i = 0; i < p.batch.size(); ++i) {
          const auto mu = policy_forward(probe.policy, p.batch.observations[i]);
          s += p.batch.advantages[i] * gaussian_log_prob(p.batch.actions[i], mu, probe.log_std);
        }
        return -s / static_cast<double>(p.batch.size());
      };
      for (std::size_t k = 0; k < base.size(); ++k) {
        std::vector<double> x = base;
        x[k] += h;
        const double up = objective(x);
        x[k] -= 2.0 * h;
        const double down = objective(x);
        CHECK(grad[k] == doctest::Approx((up - down) / (2.0 * h)).epsilon(1e-5).scale(1e-3));
      }
    }
  }

  TEST_CASE("one small update lowers the loss on a fixed batch") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      oracle::TinyProblem p = oracle::make_tiny_problem(seed);
      p.cfg.learning_rate = 1e-5;
      p.cfg.epochs = 1;
      p.cfg.minibatch_size = static_cast<int>(p.batch.size());
      Adam adam(p.net.size(), p.cfg.learning_rate);
      Rng rng(seed);
      const PpoUpdateStats s = ppo_update(p.net, adam, p.batch, p.cfg, rng);
      CHECK(s.minibatches == 1);
      CHECK(s.last.total < s.first.total);
    }
  }

  TEST_CASE("PPO rejects a non-finite batch and leaves the network untouched") {
    oracle::TinyProblem p = oracle::make_tiny_problem(3);
    p.batch.returns[0] = NAN;
    const auto before = p.net.flatten();
    Adam adam(p.net.size(), 1e-3);
    Rng rng(1);
    CHECK_THROWS_AS(ppo_update(p.net, adam, p.batch, p.cfg, rng), PpoError);
    CHECK(p.net.flatten() == before);
  }

  TEST_CASE("Adam takes bias-corrected steps") {
    Adam adam(2, 0.1);
    std::vector<double> x{1.0, -1.0};
    const std::vector<double> g{0.5, -2.0};
    adam.step(x, g);
    // first step moves every coordinate by lr against the gradient sign
    CHECK(x[0] == doctest::Approx(0.9).epsilon(1e-6));
    CHECK(x[1] == doctest::Approx(-0.9).epsilon(1e-6));
  }

  TEST_CASE("rollout return is the exact reward sum and rollouts are deterministic") {
    PointMassEpisode ep(PointMassConfig{}, PointMassWiringConfig{});
    PolicyShape s;
    s.input_dim = 4;
    s.output_dim = 4;
    s.bias = true;
    const PolicyParams p = PolicyParams::random_init(s, 77);
    RolloutOptions o;
    o.record_steps = true;
    o.collect_obs_stats = true;
    const RolloutRecord a = rollout(p, ep, 5, o);
    double sum = 0.0;
    for (double r : a.rewards) sum += r;
    CHECK(a.episode_return == sum);
    CHECK(a.rewards.size() == a.length);
    CHECK(a.observations.size() == a.length);
    CHECK(a.obs_stats.count() == a.length);

    const RolloutRecord b = rollout(p, ep, 5, o);
    CHECK(b.observations == a.observations);
    CHECK(b.actions == a.actions);
    CHECK(b.rewards == a.rewards);
    CHECK(b.episode_return == a.episode_return);
    CHECK(b.obs_stats.mean() == a.obs_stats.mean());

    o.max_steps = 10;
    CHECK(rollout(p, ep, 5, o).length == 10);
  }

  TEST_CASE("PPO collection is independent of the worker count") {
    PolicyShape s;
    s.input_dim = 4;
    s.output_dim = 4;
    s.bias = true;
    PpoConfig cfg;
    cfg.episodes_per_batch = 4;
    const ActorCritic net = ActorCritic::make(s, cfg, 5);
    const EpisodeFactory factory = [] {
      return std::make_unique<PointMassEpisode>(PointMassConfig{}, PointMassWiringConfig{});
    };
    WorkerPool pool(3);
    const PpoCollection a = ppo_collect(net, factory, nullptr, cfg, 1, 0);
    const PpoCollection b = ppo_collect(net, factory, nullptr, cfg, 1, 0, &pool);
    CHECK(a.batch.actions == b.batch.actions);
    CHECK(a.batch.advantages == b.batch.advantages);
    CHECK(a.episode_returns == b.episode_returns);
    CHECK(a.env_steps == 4 * 400);
    CHECK(a.batch.size() == a.env_steps);
  }
}
