#ifndef MLSELECT_TRAINER_HPP
#define MLSELECT_TRAINER_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mlselect/gridworld.hpp"
#include "mlselect/rl.hpp"
#include "mlselect/util.hpp"

namespace mlselect::train {

/// Stream-splitting hash (splitmix64) deriving independent episode seeds.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (a + 1) + 0xBF58476D1CE4E5B9ull * (b + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

struct SeriesPoint {
  int iteration = 0;
  double train_mean = 0.0;
  std::optional<double> eval_mean;
};

struct TrainResult {
  rl::LinearSoftmaxPolicy policy;
  std::vector<double> value_weights;
  std::vector<SeriesPoint> series;
};

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double evaluate_policy(const grid::FloorPlan& plan, const grid::TaskConfig& task,
                              const rl::LinearSoftmaxPolicy& policy, int episodes,
                              std::uint64_t seed) {
  grid::LinearPolicyActor actor(policy, "eval");
  double sum = 0.0;
  for (int e = 0; e < episodes; ++e)
    sum += grid::run_episode(plan, task, actor, mix_seed(seed, 0x5eedull, static_cast<std::uint64_t>(e)),
                             "eval", e).record.reward;
  return sum / static_cast<double>(episodes);
}

/// Off-policy PPO on the linear-softmax policy: collect on-policy episodes,
/// mix in replayed trajectories, re-estimate advantages with the current
/// critic, ascend the clipped surrogate, then fit the critic by plain
/// squared-error regression on the GAE returns.
inline TrainResult train_policy(const grid::FloorPlan& plan, const grid::TaskConfig& task,
                                const rl::TrainConfig& config, int iterations,
                                std::uint64_t seed, int ascent_epochs = 4) {
  config.validate();
  if (iterations < 0) throw std::invalid_argument("iterations must be >= 0");

  TrainResult result;
  result.policy = rl::LinearSoftmaxPolicy(grid::kNumActions, grid::Environment::kObservationSize);
  result.value_weights.assign(grid::Environment::kObservationSize, 0.0);

  rl::ReplayBuffer buffer(static_cast<std::size_t>(config.capacity));
  const rl::AdvantageConfig adv_cfg{config.gamma, config.lambda};
  const rl::ClipConfig clip_cfg{config.epsilon};

  for (int iter = 0; iter < iterations; ++iter) {
    grid::LinearPolicyActor actor(result.policy, "train");
    double collected = 0.0;
    for (int j = 0; j < config.n_on_policy; ++j) {
      grid::EpisodeOutput out = grid::run_episode(
          plan, task, actor, mix_seed(seed, static_cast<std::uint64_t>(iter), static_cast<std::uint64_t>(j)),
          "train", j, iter);
      collected += out.record.reward;
      buffer.push(std::move(out.trajectory));
    }

    rl::TrajectoryBatch batch = rl::replay_sample(
        buffer, config.n_on_policy, config.n_off_policy,
        mix_seed(seed, 0xba7c4ull, static_cast<std::uint64_t>(iter)));
    const std::vector<double>& vw = result.value_weights;
    rl::recompute_advantages(batch, [&vw](const std::vector<double>& obs) { return dot(vw, obs); },
                             adv_cfg);

    if (config.normalize_advantages) {
      double mean = 0.0, var = 0.0;
      std::size_t count = 0;
      for (const auto& adv : batch.advantages)
        for (double a : adv) { mean += a; ++count; }
      if (count > 1) {
        mean /= static_cast<double>(count);
        for (const auto& adv : batch.advantages)
          for (double a : adv) var += (a - mean) * (a - mean);
        const double sd = std::sqrt(var / static_cast<double>(count - 1));
        if (sd > 0.0)
          for (auto& adv : batch.advantages)
            for (double& a : adv) a = (a - mean) / sd;
      }
    }

    for (int epoch = 0; epoch < ascent_epochs; ++epoch) {
      const rl::PolicyGradient g = rl::analytic_gradient(result.policy, batch, clip_cfg);
      for (std::size_t i = 0; i < result.policy.weights.size(); ++i)
        result.policy.weights[i] += config.learning_rate * g.grad[i];
    }
    for (double w : result.policy.weights)
      if (!std::isfinite(w)) throw std::runtime_error("training diverged: non-finite policy weights");

    // critic regression on GAE returns (advantage + value)
    for (std::size_t ti = 0; ti < batch.trajectories.size(); ++ti) {
      const rl::Trajectory& t = batch.trajectories[ti];
      for (std::size_t s = 0; s < t.length(); ++s) {
        const std::vector<double>& obs = t.observations[s];
        const double target = batch.advantages[ti][s] + t.value_estimates[s];
        const double err = target - dot(result.value_weights, obs);
        for (std::size_t f = 0; f < result.value_weights.size(); ++f)
          result.value_weights[f] += config.critic_learning_rate * err * obs[f];
      }
    }
    for (double w : result.value_weights)
      if (!std::isfinite(w)) throw std::runtime_error("training diverged: non-finite critic weights");

    SeriesPoint point;
    point.iteration = iter + 1;
    point.train_mean = collected / static_cast<double>(config.n_on_policy);
    if (config.eval_every > 0 && (iter + 1) % config.eval_every == 0)
      point.eval_mean = evaluate_policy(plan, task, result.policy, config.eval_episodes, seed);
    result.series.push_back(point);
    util::log_debug("iter " + std::to_string(iter + 1) + " train_mean " +
                    util::format_double(point.train_mean));
  }
  return result;
}

inline nlohmann::json policy_to_json(const rl::LinearSoftmaxPolicy& policy,
                                     const std::vector<double>& value_weights,
                                     const std::string& task) {
  nlohmann::json j;
  j["type"] = "linear_softmax";
  j["task"] = task;
  j["num_actions"] = policy.num_actions;
  j["num_features"] = policy.num_features;
  j["weights"] = policy.weights;
  j["value_weights"] = value_weights;
  return j;
}

inline rl::LinearSoftmaxPolicy policy_from_json(const nlohmann::json& j) {
  if (j.value("type", std::string()) != "linear_softmax")
    throw std::invalid_argument("policy file must have type linear_softmax");
  rl::LinearSoftmaxPolicy p(j.at("num_actions").get<int>(), j.at("num_features").get<int>());
  p.weights = j.at("weights").get<std::vector<double>>();
  if (p.weights.size() != static_cast<std::size_t>(p.num_actions) *
                              static_cast<std::size_t>(p.num_features))
    throw std::invalid_argument("policy weight count mismatch");
  return p;
}

}  // namespace mlselect::train

#endif  // MLSELECT_TRAINER_HPP
