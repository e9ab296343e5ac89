#ifndef MLSELECT_RL_HPP
#define MLSELECT_RL_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mlselect/util.hpp"

namespace mlselect::rl {

/// One rollout under a frozen behavior policy. observations has T+1 entries
/// (the final state included for bootstrapping); the other per-step lists
/// have T. behavior_log_probs are log-probabilities at collection time and
/// are never rewritten afterwards.
struct Trajectory {
  std::vector<std::vector<double>> observations;  // T+1
  std::vector<int> actions;                       // T
  std::vector<double> rewards;                    // T
  std::vector<double> behavior_log_probs;         // T
  std::vector<double> value_estimates;            // T+1, last entry bootstraps
  bool terminal = true;
  int snapshot = 0;  // id of the policy that collected this trajectory

  std::size_t length() const { return rewards.size(); }

  void validate() const {
    const std::size_t t = rewards.size();
    if (observations.size() != t + 1 || actions.size() != t ||
        behavior_log_probs.size() != t || value_estimates.size() != t + 1)
      throw std::invalid_argument("trajectory lengths are inconsistent");
    for (double lp : behavior_log_probs)
      if (!(lp <= 0.0)) throw std::invalid_argument("behavior log-probs must be <= 0");
    if (terminal && value_estimates.back() != 0.0)
      throw std::invalid_argument("terminal trajectory must bootstrap with 0");
  }
};

struct AdvantageConfig {
  double gamma = 0.99;
  double lambda = 0.95;

  void validate() const {
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must lie in [0, 1]");
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("lambda must lie in [0, 1]");
  }
};

struct ClipConfig {
  double epsilon = 0.2;

  void validate() const {
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon must lie in (0, 1)");
  }
};

/// Generalized advantage estimation by backward recursion:
///   delta_t = r_t + gamma * V_{t+1} - V_t
///   A_t     = delta_t + gamma * lambda * A_{t+1}
inline std::vector<double> gae(const Trajectory& trajectory, const AdvantageConfig& config) {
  config.validate();
  trajectory.validate();
  const std::size_t t_max = trajectory.length();
  std::vector<double> advantages(t_max, 0.0);
  double running = 0.0;
  for (std::size_t i = t_max; i-- > 0;) {
    const double delta = trajectory.rewards[i] +
                         config.gamma * trajectory.value_estimates[i + 1] -
                         trajectory.value_estimates[i];
    running = delta + config.gamma * config.lambda * running;
    advantages[i] = running;
  }
  return advantages;
}

inline double importance_ratio(double log_prob_new, double log_prob_old) {
  if (!std::isfinite(log_prob_new) || !std::isfinite(log_prob_old))
    throw std::invalid_argument("importance_ratio: log-probs must be finite");
  return std::exp(log_prob_new - log_prob_old);
}

struct ClipObjective {
  double mean = 0.0;
  std::vector<double> per_step;
};

/// Clipped surrogate, maximized by the trainer:
///   min(r * A, clamp(r, 1-eps, 1+eps) * A)
inline ClipObjective ppo_clip_objective(const std::vector<double>& ratios,
                                        const std::vector<double>& advantages,
                                        const ClipConfig& config) {
  config.validate();
  if (ratios.size() != advantages.size())
    throw std::invalid_argument("ppo_clip_objective: length mismatch");
  ClipObjective out;
  out.per_step.reserve(ratios.size());
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    const double clamped = std::clamp(ratios[i], 1.0 - config.epsilon, 1.0 + config.epsilon);
    out.per_step.push_back(std::min(ratios[i] * advantages[i], clamped * advantages[i]));
  }
  if (!out.per_step.empty())
    out.mean = std::accumulate(out.per_step.begin(), out.per_step.end(), 0.0) /
               static_cast<double>(out.per_step.size());
  return out;
}

/// FIFO trajectory store; eviction is strictly oldest-first.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("replay buffer capacity must be positive");
  }

  void push(Trajectory trajectory) {
    trajectory.validate();
    stored_.push_back(std::move(trajectory));
    if (stored_.size() > capacity_) stored_.pop_front();
  }

  std::size_t size() const { return stored_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Trajectory& at(std::size_t i) const { return stored_.at(i); }

  int newest_snapshot() const {
    if (stored_.empty()) throw std::logic_error("replay buffer is empty");
    return stored_.back().snapshot;
  }

 private:
  std::size_t capacity_;
  std::deque<Trajectory> stored_;
};

struct TrajectoryBatch {
  std::vector<Trajectory> trajectories;
  std::vector<std::vector<double>> advantages;  // filled by recompute_advantages
  bool shortfall = false;                       // fewer off-policy draws than requested
};

/// The n_on most recent trajectories plus n_off uniform draws (without
/// replacement) from the older ones. Deterministic given the seed. When the
/// older pool is smaller than n_off, everything available is returned and
/// the shortfall flag set.
inline TrajectoryBatch replay_sample(const ReplayBuffer& buffer, int n_on_policy,
                                     int n_off_policy, std::uint64_t rng_seed) {
  if (n_on_policy < 0 || n_off_policy < 0)
    throw std::invalid_argument("replay_sample: counts must be nonnegative");
  if (buffer.size() < static_cast<std::size_t>(n_on_policy))
    throw std::invalid_argument("replay_sample: buffer holds fewer than n_on_policy trajectories");
  for (std::size_t i = buffer.size() - static_cast<std::size_t>(n_on_policy); i < buffer.size(); ++i)
    if (buffer.at(i).snapshot != buffer.newest_snapshot())
      throw std::invalid_argument("replay_sample: newest n_on_policy entries span snapshots");

  TrajectoryBatch batch;
  const std::size_t pool = buffer.size() - static_cast<std::size_t>(n_on_policy);
  for (std::size_t i = pool; i < buffer.size(); ++i) batch.trajectories.push_back(buffer.at(i));

  std::vector<std::size_t> indices(pool);
  std::iota(indices.begin(), indices.end(), std::size_t{0});
  std::mt19937_64 rng(rng_seed);
  const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(n_off_policy), pool);
  batch.shortfall = take < static_cast<std::size_t>(n_off_policy);
  for (std::size_t i = 0; i < take; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, indices.size() - 1);
    std::swap(indices[i], indices[pick(rng)]);
  }
  std::vector<std::size_t> chosen(indices.begin(), indices.begin() + static_cast<long>(take));
  std::sort(chosen.begin(), chosen.end());
  for (std::size_t i : chosen) batch.trajectories.push_back(buffer.at(i));
  return batch;
}

/// Replaces each trajectory's value estimates with fresh critic values and
/// recomputes advantages. Behavior log-probs are untouched.
inline void recompute_advantages(TrajectoryBatch& batch,
                                 const std::vector<std::vector<double>>& fresh_values,
                                 const AdvantageConfig& config) {
  if (fresh_values.size() != batch.trajectories.size())
    throw std::invalid_argument("recompute_advantages: one value vector per trajectory required");
  batch.advantages.clear();
  for (std::size_t i = 0; i < batch.trajectories.size(); ++i) {
    Trajectory& t = batch.trajectories[i];
    if (fresh_values[i].size() != t.length() + 1)
      throw std::invalid_argument("recompute_advantages: values must have length T+1");
    t.value_estimates = fresh_values[i];
    if (t.terminal) t.value_estimates.back() = 0.0;
    batch.advantages.push_back(gae(t, config));
  }
}

using ValueFn = std::function<double(const std::vector<double>&)>;

inline void recompute_advantages(TrajectoryBatch& batch, const ValueFn& critic,
                                 const AdvantageConfig& config) {
  std::vector<std::vector<double>> values;
  values.reserve(batch.trajectories.size());
  for (const Trajectory& t : batch.trajectories) {
    std::vector<double> v;
    v.reserve(t.observations.size());
    for (const auto& obs : t.observations) v.push_back(critic(obs));
    if (t.terminal) v.back() = 0.0;
    values.push_back(std::move(v));
  }
  recompute_advantages(batch, values, config);
}

/// Minimal differentiable policy: log-softmax of theta * observation.
/// Weights are row-major, one row per action.
struct LinearSoftmaxPolicy {
  int num_actions = 0;
  int num_features = 0;
  std::vector<double> weights;

  LinearSoftmaxPolicy() = default;
  LinearSoftmaxPolicy(int actions, int features)
      : num_actions(actions), num_features(features),
        weights(static_cast<std::size_t>(actions) * static_cast<std::size_t>(features), 0.0) {
    if (actions < 1 || features < 1)
      throw std::invalid_argument("policy needs at least one action and one feature");
  }

  double& at(int action, int feature) {
    return weights[static_cast<std::size_t>(action) * static_cast<std::size_t>(num_features) +
                   static_cast<std::size_t>(feature)];
  }
  double at(int action, int feature) const {
    return weights[static_cast<std::size_t>(action) * static_cast<std::size_t>(num_features) +
                   static_cast<std::size_t>(feature)];
  }

  std::vector<double> log_probs(const std::vector<double>& observation) const {
    if (static_cast<int>(observation.size()) != num_features)
      throw std::invalid_argument("observation dimension mismatch");
    std::vector<double> logits(static_cast<std::size_t>(num_actions), 0.0);
    for (int a = 0; a < num_actions; ++a) {
      double z = 0.0;
      for (int f = 0; f < num_features; ++f) z += at(a, f) * observation[static_cast<std::size_t>(f)];
      logits[static_cast<std::size_t>(a)] = z;
    }
    const double zmax = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double z : logits) sum += std::exp(z - zmax);
    const double lse = zmax + std::log(sum);
    for (double& z : logits) z -= lse;
    return logits;  // now log-probabilities
  }

  int sample(const std::vector<double>& observation, std::mt19937_64& rng,
             double* log_prob_out = nullptr) const {
    const std::vector<double> lp = log_probs(observation);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double u = unit(rng);
    double acc = 0.0;
    int chosen = num_actions - 1;
    for (int a = 0; a < num_actions; ++a) {
      acc += std::exp(lp[static_cast<std::size_t>(a)]);
      if (u < acc) { chosen = a; break; }
    }
    if (log_prob_out) *log_prob_out = lp[static_cast<std::size_t>(chosen)];
    return chosen;
  }
};

struct PolicyGradient {
  double mean_surrogate = 0.0;
  std::vector<double> grad;  // same layout as LinearSoftmaxPolicy::weights
};

/// Gradient of the mean clipped surrogate with respect to theta, averaged
/// over every step in the batch. Advantages are treated as constants. Where
/// the clipped branch is strictly smaller the local gradient is zero (clamp
/// treated as constant); ties take the unclipped branch.
inline PolicyGradient analytic_gradient(const LinearSoftmaxPolicy& policy,
                                        const TrajectoryBatch& batch, const ClipConfig& clip) {
  clip.validate();
  if (batch.advantages.size() != batch.trajectories.size())
    throw std::invalid_argument("analytic_gradient: advantages missing; run recompute_advantages");

  PolicyGradient out;
  out.grad.assign(policy.weights.size(), 0.0);
  std::size_t total_steps = 0;
  for (const Trajectory& t : batch.trajectories) total_steps += t.length();
  if (total_steps == 0) return out;

  double surrogate_sum = 0.0;
  for (std::size_t ti = 0; ti < batch.trajectories.size(); ++ti) {
    const Trajectory& t = batch.trajectories[ti];
    if (batch.advantages[ti].size() != t.length())
      throw std::invalid_argument("analytic_gradient: advantage length mismatch");
    for (std::size_t step = 0; step < t.length(); ++step) {
      const std::vector<double>& obs = t.observations[step];
      const int action = t.actions[step];
      if (action < 0 || action >= policy.num_actions)
        throw std::invalid_argument("analytic_gradient: action index out of range");
      const std::vector<double> lp = policy.log_probs(obs);
      const double ratio =
          importance_ratio(lp[static_cast<std::size_t>(action)], t.behavior_log_probs[step]);
      const double advantage = batch.advantages[ti][step];
      const double clamped = std::clamp(ratio, 1.0 - clip.epsilon, 1.0 + clip.epsilon);
      const double unclipped = ratio * advantage;
      const double clipped = clamped * advantage;
      surrogate_sum += std::min(unclipped, clipped);
      if (unclipped <= clipped) {
        // d/dtheta (r * A) = A * r * dlogpi/dtheta
        const double coeff = unclipped / static_cast<double>(total_steps);
        for (int a = 0; a < policy.num_actions; ++a) {
          const double indicator = a == action ? 1.0 : 0.0;
          const double factor = coeff * (indicator - std::exp(lp[static_cast<std::size_t>(a)]));
          for (int f = 0; f < policy.num_features; ++f)
            out.grad[static_cast<std::size_t>(a) * static_cast<std::size_t>(policy.num_features) +
                     static_cast<std::size_t>(f)] += factor * obs[static_cast<std::size_t>(f)];
        }
      }
    }
  }
  out.mean_surrogate = surrogate_sum / static_cast<double>(total_steps);
  return out;
}

/// Mean clipped surrogate of a batch under the given policy (no gradient);
/// shares its definition with analytic_gradient through the same formulas.
inline double batch_surrogate(const LinearSoftmaxPolicy& policy, const TrajectoryBatch& batch,
                              const ClipConfig& clip) {
  std::vector<double> ratios, advantages;
  for (std::size_t ti = 0; ti < batch.trajectories.size(); ++ti) {
    const Trajectory& t = batch.trajectories[ti];
    for (std::size_t step = 0; step < t.length(); ++step) {
      const std::vector<double> lp = policy.log_probs(t.observations[step]);
      ratios.push_back(importance_ratio(lp[static_cast<std::size_t>(t.actions[step])],
                                        t.behavior_log_probs[step]));
      advantages.push_back(batch.advantages[ti][step]);
    }
  }
  return ppo_clip_objective(ratios, advantages, clip).mean;
}

// JSON-lines serialization for fixture tests.
inline nlohmann::json trajectory_to_json(const Trajectory& t) {
  nlohmann::json j;
  j["observations"] = t.observations;
  j["actions"] = t.actions;
  j["rewards"] = t.rewards;
  j["behavior_log_probs"] = t.behavior_log_probs;
  j["value_estimates"] = t.value_estimates;
  j["terminal"] = t.terminal;
  j["snapshot"] = t.snapshot;
  return j;
}

inline Trajectory trajectory_from_json(const nlohmann::json& j) {
  Trajectory t;
  t.observations = j.at("observations").get<std::vector<std::vector<double>>>();
  t.actions = j.at("actions").get<std::vector<int>>();
  t.rewards = j.at("rewards").get<std::vector<double>>();
  t.behavior_log_probs = j.at("behavior_log_probs").get<std::vector<double>>();
  t.value_estimates = j.at("value_estimates").get<std::vector<double>>();
  t.terminal = j.at("terminal").get<bool>();
  t.snapshot = j.value("snapshot", 0);
  t.validate();
  return t;
}

inline void batch_to_jsonl(std::ostream& out, const std::vector<Trajectory>& trajectories) {
  for (const Trajectory& t : trajectories)
    out << trajectory_to_json(t).dump() << "\n";
}

inline std::vector<Trajectory> batch_from_jsonl(std::istream& in,
                                                const std::string& path = "<trajectories>") {
  std::vector<Trajectory> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = util::trim(line);
    if (t.empty()) continue;
    try {
      out.push_back(trajectory_from_json(nlohmann::json::parse(t)));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

/// Trainer hyperparameters; file format is plain key=value.
struct TrainConfig {
  double gamma = 0.99;
  double lambda = 0.95;
  double epsilon = 0.2;
  int n_on_policy = 2;
  int n_off_policy = 4;
  int capacity = 64;
  double learning_rate = 0.15;
  double critic_learning_rate = 0.05;
  bool normalize_advantages = false;  // off by default
  int eval_every = 20;
  int eval_episodes = 4;

  void validate() const {
    AdvantageConfig{gamma, lambda}.validate();
    ClipConfig{epsilon}.validate();
    if (n_on_policy < 1) throw std::invalid_argument("n_on must be >= 1");
    if (n_off_policy < 0) throw std::invalid_argument("n_off must be >= 0");
    if (capacity < n_on_policy) throw std::invalid_argument("capacity must cover n_on");
    if (!(learning_rate > 0.0) || !(critic_learning_rate > 0.0))
      throw std::invalid_argument("learning rates must be positive");
  }

  static TrainConfig from_file(const std::string& path) {
    TrainConfig c;
    c.apply(util::parse_kv_file(path), path);
    return c;
  }

  void apply(const std::map<std::string, std::string>& kv, const std::string& source) {
    for (const auto& [key, value] : kv) {
      if (key == "gamma") gamma = util::parse_double(value, source, 0);
      else if (key == "lambda") lambda = util::parse_double(value, source, 0);
      else if (key == "epsilon") epsilon = util::parse_double(value, source, 0);
      else if (key == "n_on") n_on_policy = static_cast<int>(util::parse_long(value, source, 0));
      else if (key == "n_off") n_off_policy = static_cast<int>(util::parse_long(value, source, 0));
      else if (key == "capacity") capacity = static_cast<int>(util::parse_long(value, source, 0));
      else if (key == "lr") learning_rate = util::parse_double(value, source, 0);
      else if (key == "critic_lr") critic_learning_rate = util::parse_double(value, source, 0);
      else if (key == "normalize_advantages") normalize_advantages = (value == "1" || value == "true");
      else if (key == "eval_every") eval_every = static_cast<int>(util::parse_long(value, source, 0));
      else if (key == "eval_episodes") eval_episodes = static_cast<int>(util::parse_long(value, source, 0));
      else throw ParseError(source + ": unknown config key '" + key + "'");
    }
    validate();
  }
};

}  // namespace mlselect::rl

#endif  // MLSELECT_RL_HPP
