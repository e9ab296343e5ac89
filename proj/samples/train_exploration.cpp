// Trains the linear-softmax exploration policy on a small open map and
// compares it against the random baseline on paired seeds.

#include <cstdio>
#include <sstream>

#include "mlselect/gridworld.hpp"
#include "mlselect/stats.hpp"
#include "mlselect/trainer.hpp"

int main() {
  using namespace mlselect;

  std::istringstream map_text(
      "........\n"
      "........\n"
      "........\n"
      "........\n"
      "........\n"
      "........\n"
      "........\n"
      "........\n");
  const grid::FloorPlan plan = grid::FloorPlan::from_ascii(map_text);
  const grid::TaskConfig task = grid::TaskConfig::defaults(grid::Task::exploration);

  rl::TrainConfig config;
  config.eval_every = 0;
  const train::TrainResult result = train::train_policy(plan, task, config, 100, 7);

  grid::LinearPolicyActor trained(result.policy, "trained");
  grid::RandomPolicy baseline;
  std::vector<double> ours, theirs;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    ours.push_back(grid::run_episode(plan, task, trained, seed).record.reward);
    theirs.push_back(grid::run_episode(plan, task, baseline, seed).record.reward);
  }
  double mean_ours = 0.0, mean_theirs = 0.0;
  for (std::size_t i = 0; i < ours.size(); ++i) {
    mean_ours += ours[i] / static_cast<double>(ours.size());
    mean_theirs += theirs[i] / static_cast<double>(theirs.size());
  }
  const auto test = stats::mann_whitney_u(ours, theirs, stats::Alternative::greater);
  std::printf("trained mean %.2f vs random mean %.2f (one-sided rank-sum p = %.4f)\n", mean_ours,
              mean_theirs, test.p_value);
  return 0;
}
