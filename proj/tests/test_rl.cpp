#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "mlselect/rl.hpp"

using namespace mlselect;
using rl::AdvantageConfig;
using rl::ClipConfig;
using rl::ReplayBuffer;
using rl::Trajectory;

namespace {

Trajectory make_trajectory(std::size_t t, int features = 1) {
  Trajectory tr;
  tr.observations.assign(t + 1, std::vector<double>(static_cast<std::size_t>(features), 0.0));
  tr.actions.assign(t, 0);
  tr.rewards.assign(t, 0.0);
  tr.behavior_log_probs.assign(t, -1.0);
  tr.value_estimates.assign(t + 1, 0.0);
  return tr;
}

Trajectory random_trajectory(std::mt19937_64& rng, std::size_t max_len) {
  std::uniform_int_distribution<std::size_t> len(1, max_len);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Trajectory tr = make_trajectory(len(rng));
  for (double& r : tr.rewards) r = unit(rng);
  for (double& v : tr.value_estimates) v = unit(rng);
  tr.value_estimates.back() = 0.0;
  return tr;
}

}  // namespace

TEST_CASE("gae hand examples") {
  Trajectory tr = make_trajectory(2);
  tr.rewards = {1.0, 1.0};
  tr.value_estimates = {0.5, 0.5, 0.0};

  const auto td = rl::gae(tr, {0.9, 0.0});
  CHECK(td[0] == Catch::Approx(0.95).margin(1e-12));
  CHECK(td[1] == Catch::Approx(0.5).margin(1e-12));

  Trajectory single = make_trajectory(1);
  single.rewards = {1.0};
  CHECK(rl::gae(single, {0.7, 0.3})[0] == 1.0);

  Trajectory mc = make_trajectory(2);
  mc.rewards = {1.0, 1.0};
  mc.value_estimates = {0.2, 0.0, 0.0};
  CHECK(rl::gae(mc, {0.5, 1.0})[0] == Catch::Approx(1.3).margin(1e-12));
}

TEST_CASE("gae identities at the lambda extremes") {
  std::mt19937_64 rng(20240815);
  for (int round = 0; round < 100; ++round) {
    Trajectory tr = random_trajectory(rng, 50);
    const double gamma = 0.5 + 0.5 * static_cast<double>(round) / 100.0;

    const auto td = rl::gae(tr, {gamma, 0.0});
    for (std::size_t t = 0; t < tr.length(); ++t) {
      const double delta =
          tr.rewards[t] + gamma * tr.value_estimates[t + 1] - tr.value_estimates[t];
      CHECK(td[t] == delta);  // exactly the one-step TD residual
    }

    const auto mc = rl::gae(tr, {gamma, 1.0});
    for (std::size_t t = 0; t < tr.length(); ++t) {
      double ret = 0.0, g = 1.0;
      for (std::size_t l = t; l < tr.length(); ++l) {
        ret += g * tr.rewards[l];
        g *= gamma;
      }
      ret += g * tr.value_estimates.back();
      CHECK(std::fabs(mc[t] - (ret - tr.value_estimates[t])) <= 1e-10);
    }
  }
}

TEST_CASE("gae validates trajectory shape") {
  Trajectory tr = make_trajectory(2);
  tr.rewards.push_back(1.0);  // now inconsistent
  CHECK_THROWS_AS(rl::gae(tr, {0.9, 0.5}), std::invalid_argument);

  Trajectory bad_lp = make_trajectory(1);
  bad_lp.behavior_log_probs = {0.5};  // log prob must be <= 0
  CHECK_THROWS_AS(bad_lp.validate(), std::invalid_argument);
}

TEST_CASE("importance ratio") {
  CHECK(rl::importance_ratio(-1.0, -1.0) == 1.0);
  CHECK(rl::importance_ratio(-1.0, -1.0 - std::log(2.0)) == Catch::Approx(2.0).epsilon(1e-12));
  CHECK(rl::importance_ratio(-1.2, -2.3) == Catch::Approx(std::exp(1.1)).epsilon(1e-12));
  CHECK_THROWS_AS(rl::importance_ratio(std::nan(""), -1.0), std::invalid_argument);
}

TEST_CASE("clipped surrogate examples") {
  CHECK(rl::ppo_clip_objective({1.0}, {2.0}, {0.2}).mean == 2.0);
  CHECK(rl::ppo_clip_objective({1.5}, {2.0}, {0.2}).mean == Catch::Approx(2.4).epsilon(1e-12));
  CHECK(rl::ppo_clip_objective({0.5}, {-1.0}, {0.2}).mean == Catch::Approx(-0.8).epsilon(1e-12));
  CHECK_THROWS_AS(rl::ppo_clip_objective({1.0}, {1.0, 2.0}, {0.2}), std::invalid_argument);
  CHECK_THROWS_AS(rl::ppo_clip_objective({1.0}, {1.0}, {0.0}), std::invalid_argument);
}

TEST_CASE("surrogate is a lower bound on the unclipped objective") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> ratio(0.0, 3.0);
  std::uniform_real_distribution<double> adv(-2.0, 2.0);
  for (int round = 0; round < 100; ++round) {
    const double r = ratio(rng), a = adv(rng), eps = 0.1 + 0.2 * (round % 3);
    const auto out = rl::ppo_clip_objective({r}, {a}, {eps});
    CHECK(out.per_step[0] <= r * a + 1e-15);
    // replacing r by its clamp never changes the value when that clamp
    // does not increase r*A
    const double clamped = std::clamp(r, 1.0 - eps, 1.0 + eps);
    if (clamped * a <= r * a)
      CHECK(rl::ppo_clip_objective({clamped}, {a}, {eps}).per_step[0] ==
            Catch::Approx(out.per_step[0]).margin(1e-15));
  }
}

TEST_CASE("replay buffer is FIFO with strict capacity") {
  ReplayBuffer buf(3);
  for (int i = 0; i < 5; ++i) {
    Trajectory tr = make_trajectory(1);
    tr.snapshot = i;
    buf.push(std::move(tr));
  }
  REQUIRE(buf.size() == 3);
  CHECK(buf.at(0).snapshot == 2);  // oldest evicted first
  CHECK(buf.newest_snapshot() == 4);
  CHECK_THROWS_AS(ReplayBuffer(0), std::invalid_argument);
}

TEST_CASE("replay sampling honors counts, determinism and shortfall") {
  ReplayBuffer buf(16);
  for (int i = 0; i < 10; ++i) {
    Trajectory tr = make_trajectory(2);
    tr.snapshot = i < 8 ? i : 8;  // the last two share the newest snapshot
    tr.rewards[0] = static_cast<double>(i);
    buf.push(std::move(tr));
  }

  SECTION("n_off = 0 returns exactly the newest trajectories") {
    const auto batch = rl::replay_sample(buf, 2, 0, 123);
    REQUIRE(batch.trajectories.size() == 2);
    CHECK(batch.trajectories[0].rewards[0] == 8.0);
    CHECK(batch.trajectories[1].rewards[0] == 9.0);
    CHECK_FALSE(batch.shortfall);
  }

  SECTION("asking for more off-policy than stored flags a shortfall") {
    const auto batch = rl::replay_sample(buf, 2, 100, 123);
    CHECK(batch.trajectories.size() == 10);
    CHECK(batch.shortfall);
  }

  SECTION("fixed seeds reproduce the batch") {
    for (int round = 0; round < 100; ++round) {
      const auto a = rl::replay_sample(buf, 2, 3, 77);
      const auto b = rl::replay_sample(buf, 2, 3, 77);
      REQUIRE(a.trajectories.size() == b.trajectories.size());
      for (std::size_t i = 0; i < a.trajectories.size(); ++i)
        CHECK(a.trajectories[i].rewards == b.trajectories[i].rewards);
    }
    const auto c = rl::replay_sample(buf, 2, 3, 78);
    const auto d = rl::replay_sample(buf, 2, 3, 77);
    bool same = true;
    for (std::size_t i = 0; i < c.trajectories.size(); ++i)
      same &= c.trajectories[i].rewards == d.trajectories[i].rewards;
    CHECK_FALSE(same);  // different seed, different draw (with these contents)
  }

  SECTION("stored behavior log-probs are never touched") {
    const std::vector<double> before = buf.at(3).behavior_log_probs;
    auto batch = rl::replay_sample(buf, 2, 5, 9);
    rl::recompute_advantages(batch, [](const std::vector<double>&) { return 0.25; },
                             AdvantageConfig{0.9, 0.8});
    CHECK(buf.at(3).behavior_log_probs == before);
  }

  SECTION("requesting more on-policy than stored is an error") {
    CHECK_THROWS_AS(rl::replay_sample(buf, 11, 0, 1), std::invalid_argument);
    // newest two share a snapshot, three do not
    CHECK_THROWS_AS(rl::replay_sample(buf, 3, 0, 1), std::invalid_argument);
  }
}

TEST_CASE("recomputing advantages with a zero critic gives reward tails") {
  std::mt19937_64 rng(13);
  rl::TrajectoryBatch batch;
  batch.trajectories.push_back(random_trajectory(rng, 10));
  rl::recompute_advantages(batch, [](const std::vector<double>&) { return 0.0; },
                           AdvantageConfig{0.8, 1.0});
  const Trajectory& tr = batch.trajectories[0];
  for (std::size_t t = 0; t < tr.length(); ++t) {
    double ret = 0.0, g = 1.0;
    for (std::size_t l = t; l < tr.length(); ++l) {
      ret += g * tr.rewards[l];
      g *= 0.8;
    }
    CHECK(batch.advantages[0][t] == Catch::Approx(ret).margin(1e-12));
  }
}

TEST_CASE("linear softmax policy basics") {
  rl::LinearSoftmaxPolicy uniform(3, 2);
  const auto lp = uniform.log_probs({0.3, -0.7});
  for (double v : lp) CHECK(v == Catch::Approx(-std::log(3.0)).epsilon(1e-12));

  rl::LinearSoftmaxPolicy two(2, 1);
  two.at(0, 0) = 1.0;  // logits (1, 0) for obs = [1]
  const auto lp2 = two.log_probs({1.0});
  const double e = std::exp(1.0);
  CHECK(std::exp(lp2[0]) == Catch::Approx(e / (e + 1.0)).epsilon(1e-12));
  CHECK(std::exp(lp2[1]) == Catch::Approx(1.0 / (e + 1.0)).epsilon(1e-12));

  CHECK_THROWS_AS(uniform.log_probs({1.0}), std::invalid_argument);
}

TEST_CASE("analytic gradient matches central finite differences") {
  std::mt19937_64 rng(20240816);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int actions = 3, features = 4;
  double worst = 0.0;
  for (int round = 0; round < 40; ++round) {
    rl::LinearSoftmaxPolicy policy(actions, features);
    rl::LinearSoftmaxPolicy behavior(actions, features);
    for (double& w : policy.weights) w = 0.5 * normal(rng);
    for (double& w : behavior.weights) w = 0.5 * normal(rng);

    rl::TrajectoryBatch batch;
    std::uniform_int_distribution<int> len(1, 6);
    for (int traj = 0; traj < 2; ++traj) {
      const int t = len(rng);
      Trajectory tr = make_trajectory(static_cast<std::size_t>(t), features);
      std::vector<double> adv;
      for (int s = 0; s < t; ++s) {
        for (double& o : tr.observations[static_cast<std::size_t>(s)]) o = normal(rng);
        const auto lp = behavior.log_probs(tr.observations[static_cast<std::size_t>(s)]);
        std::uniform_int_distribution<int> act(0, actions - 1);
        tr.actions[static_cast<std::size_t>(s)] = act(rng);
        tr.behavior_log_probs[static_cast<std::size_t>(s)] =
            lp[static_cast<std::size_t>(tr.actions[static_cast<std::size_t>(s)])];
        adv.push_back(normal(rng));
      }
      batch.trajectories.push_back(std::move(tr));
      batch.advantages.push_back(std::move(adv));
    }

    const rl::ClipConfig clip{0.1 + 0.1 * (round % 3)};
    const rl::PolicyGradient g = rl::analytic_gradient(policy, batch, clip);
    const double h = 1e-5;
    for (std::size_t w = 0; w < policy.weights.size(); ++w) {
      rl::LinearSoftmaxPolicy plus = policy, minus = policy;
      plus.weights[w] += h;
      minus.weights[w] -= h;
      const double fd =
          (rl::batch_surrogate(plus, batch, clip) - rl::batch_surrogate(minus, batch, clip)) /
          (2.0 * h);
      const double rel = std::fabs(g.grad[w] - fd) / std::max({std::fabs(fd), std::fabs(g.grad[w]), 1e-6});
      worst = std::max(worst, rel);
    }
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("jsonl round trip is bit-exact") {
  std::mt19937_64 rng(19);
  std::vector<Trajectory> batch;
  for (int i = 0; i < 4; ++i) {
    Trajectory tr = random_trajectory(rng, 6);
    tr.snapshot = i;
    batch.push_back(std::move(tr));
  }
  std::ostringstream out;
  rl::batch_to_jsonl(out, batch);
  std::istringstream in(out.str());
  const auto parsed = rl::batch_from_jsonl(in);
  REQUIRE(parsed.size() == batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    CHECK(parsed[i].rewards == batch[i].rewards);
    CHECK(parsed[i].value_estimates == batch[i].value_estimates);
    CHECK(parsed[i].behavior_log_probs == batch[i].behavior_log_probs);
    CHECK(parsed[i].snapshot == batch[i].snapshot);
  }
}

TEST_CASE("train config parses key=value files with overrides") {
  rl::TrainConfig cfg;
  cfg.apply({{"gamma", "0.9"}, {"n_on", "3"}, {"lr", "0.05"}}, "<test>");
  CHECK(cfg.gamma == 0.9);
  CHECK(cfg.n_on_policy == 3);
  CHECK(cfg.learning_rate == 0.05);
  CHECK_THROWS_AS(cfg.apply({{"bogus", "1"}}, "<test>"), ParseError);
  CHECK_THROWS_AS(cfg.apply({{"gamma", "1.5"}}, "<test>"), std::invalid_argument);
}
