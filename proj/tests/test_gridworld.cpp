#include <catch2/catch_amalgamated.hpp>

#include <numbers>
#include <random>
#include <sstream>

#include "mlselect/gridworld.hpp"
#include "test_support.hpp"

using namespace mlselect;
using grid::Action;
using grid::Environment;
using grid::FloorPlan;
using grid::OccupancyGrid;
using grid::Pose;
using grid::Task;
using grid::TaskConfig;

namespace {

FloorPlan open10() { return FloorPlan::load(test_support::data_dir() + "/maps/open10.map"); }
FloorPlan rooms() { return FloorPlan::load(test_support::data_dir() + "/maps/rooms.map"); }

}  // namespace

TEST_CASE("floor plan parsing") {
  const FloorPlan plan = rooms();
  CHECK(plan.width == 12);
  CHECK(plan.height == 8);
  CHECK(plan.spawn_cells.size() == 4);
  CHECK(plan.target_cells.size() == 6);
  CHECK(plan.blocked(-0.5, 1.0));
  CHECK(plan.blocked(0.5, 0.5));    // border wall
  CHECK_FALSE(plan.blocked(1.5, 1.5));

  std::istringstream ragged("...\n..\n");
  CHECK_THROWS_AS(FloorPlan::from_ascii(ragged), ParseError);
  std::istringstream unknown("..X\n");
  CHECK_THROWS_AS(FloorPlan::from_ascii(unknown), ParseError);
  std::istringstream walls_only("###\n###\n");
  CHECK_THROWS_AS(FloorPlan::from_ascii(walls_only), std::invalid_argument);

  const FloorPlan from_json = FloorPlan::from_json(nlohmann::json{{"rows", {"...", ".S."}}});
  CHECK(from_json.spawn_cells.size() == 1);
}

TEST_CASE("planning observation is the goal in the agent frame") {
  const Pose pose{2.0, 2.0, 0.0};
  const auto ahead = grid::planning_observation(pose, 7.0, 2.0);
  CHECK(ahead[0] == 5.0);
  CHECK(ahead[1] == Catch::Approx(1.0).margin(1e-12));
  CHECK(ahead[2] == Catch::Approx(0.0).margin(1e-12));

  const auto behind = grid::planning_observation(pose, 0.0, 2.0);
  CHECK(behind[0] == 2.0);
  CHECK(behind[1] == Catch::Approx(-1.0).margin(1e-12));
  CHECK(behind[2] == Catch::Approx(0.0).margin(1e-9));

  const auto left = grid::planning_observation(pose, 2.0, 5.0);  // 90 degrees counterclockwise
  CHECK(left[0] == 3.0);
  CHECK(left[1] == Catch::Approx(0.0).margin(1e-9));
  CHECK(left[2] == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("turn actions rotate in place by the fixed increment") {
  Environment env(open10(), TaskConfig::defaults(Task::navigation));
  env.reset_at({5.0, 5.0, 0.0}, 9.5, 9.5);
  const auto r = env.step(Action::turn_left);
  CHECK(env.pose().heading == Catch::Approx(0.24).margin(1e-12));
  CHECK(env.pose().x == 5.0);
  CHECK(env.pose().y == 5.0);
  CHECK_FALSE(r.info.collision);
  env.step(Action::turn_right);
  CHECK(env.pose().heading == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("forward into a wall bounces back with the collision penalty") {
  Environment env(rooms(), TaskConfig::defaults(Task::planning));
  // wall cell starts at x=5 on this row; goal far away so no goal bonus
  env.reset_at({4.95, 3.5, 0.0}, 2.5, 6.5);
  const auto r = env.step(Action::move_forward);
  CHECK(r.info.collision);
  CHECK(env.pose().x == 4.95);
  CHECK(env.pose().y == 3.5);
  CHECK(r.reward == Catch::Approx(-0.30).margin(1e-12));  // -0.25 - 0.05 + 0.1 * 0
  CHECK(env.collisions() == 1);
}

TEST_CASE("touching the navigation target pays the bonus minus living cost") {
  Environment env(open10(), TaskConfig::defaults(Task::navigation));
  env.reset_at({5.0, 5.0, 0.0}, 5.25, 5.0);  // 0.25 m ahead, touch radius 0.2
  const auto r = env.step(Action::move_forward);
  CHECK(r.reward == Catch::Approx(10.0 - 0.025).margin(1e-12));
  CHECK(r.done);
  CHECK(env.goal_reached());
  CHECK_THROWS_AS(env.step(Action::move_forward), std::logic_error);
}

TEST_CASE("navigation step-limit episodes total exactly minus ten") {
  struct Spinner final : grid::Policy {
    std::string name() const override { return "spinner"; }
    grid::ActionChoice act(const std::vector<double>&, std::mt19937_64&) override {
      return {0, -0.1};
    }
  } spinner;
  const auto out = grid::run_episode(open10(), TaskConfig::defaults(Task::navigation), spinner, 99);
  CHECK(out.trajectory.length() == 400);
  CHECK(out.record.reward == -10.0);  // bit-exact by the counter bookkeeping
}

TEST_CASE("scanner reveals the forward cone and respects walls") {
  const TaskConfig cfg = TaskConfig::defaults(Task::exploration);

  SECTION("open space ahead") {
    FloorPlan plan = open10();
    OccupancyGrid grid_state(plan.width, plan.height);
    const auto revealed = grid::scan_unlock({1.5, 1.5, 0.0}, plan, grid_state, cfg);
    // own cell plus the two axis cells within 1.5 m, plus cone spill
    CHECK(grid_state.is_unlocked(1, 1));
    CHECK(grid_state.is_unlocked(2, 1));
    for (const auto& c : revealed) {
      CHECK(c.x >= 1);
      CHECK(c.x <= 3);  // nothing beyond scan range
      CHECK(std::abs(c.y - 1) <= 1);
    }
    CHECK(static_cast<int>(revealed.size()) == grid_state.count());
  }

  SECTION("wall 0.3 m ahead reveals only the agent's own cell") {
    std::istringstream corridor_ss("..#\n");
    FloorPlan corridor = FloorPlan::from_ascii(corridor_ss);
    OccupancyGrid grid_state(corridor.width, corridor.height);
    const auto revealed = grid::scan_unlock({1.7, 0.5, 0.0}, corridor, grid_state, cfg);
    REQUIRE(revealed.size() == 1);
    CHECK(revealed[0] == grid::Cell{1, 0});
  }

  SECTION("re-scanning a revealed area yields nothing") {
    FloorPlan plan = open10();
    OccupancyGrid grid_state(plan.width, plan.height);
    grid::scan_unlock({1.5, 1.5, 0.0}, plan, grid_state, cfg);
    const int count = grid_state.count();
    const auto again = grid::scan_unlock({1.5, 1.5, 0.0}, plan, grid_state, cfg);
    CHECK(again.empty());
    CHECK(grid_state.count() == count);
  }
}

TEST_CASE("exploration reward equals cell reward times newly revealed cells") {
  Environment env(rooms(), TaskConfig::defaults(Task::exploration));
  std::mt19937_64 rng(4242);
  env.reset(rng);
  grid::RandomPolicy policy;
  int total_cells = 0;
  double running = 0.0;
  std::vector<double> obs = env.observation();
  while (!env.done()) {
    const auto choice = policy.act(obs, rng);
    const auto r = env.step(static_cast<Action>(choice.action));
    obs = r.observation;
    total_cells += r.info.cells_revealed;
    running += r.reward;
    // per-step identity against an independent recount
    CHECK(env.occupancy().recount() == total_cells);
    CHECK(r.reward == 0.1 * static_cast<double>(r.info.cells_revealed));
    CHECK(env.episode_return() == 0.1 * static_cast<double>(env.occupancy().count()));
    // pose stays inside the plan
    CHECK_FALSE(env.plan().blocked(env.pose().x, env.pose().y));
  }
  CHECK(env.occupancy().count() <= env.plan().free_cell_count());
  CHECK(running == Catch::Approx(env.episode_return()).margin(1e-9));
}

TEST_CASE("episodes are bit-reproducible under a fixed seed") {
  grid::RandomPolicy policy;
  const TaskConfig cfg = TaskConfig::defaults(Task::exploration);
  const FloorPlan plan = rooms();
  const auto a = grid::run_episode(plan, cfg, policy, 314, "s314", 0);
  const auto b = grid::run_episode(plan, cfg, policy, 314, "s314", 0);
  CHECK(a.record.reward == b.record.reward);
  CHECK(a.trajectory.rewards == b.trajectory.rewards);
  CHECK(a.trajectory.actions == b.trajectory.actions);
  CHECK(a.trajectory.behavior_log_probs == b.trajectory.behavior_log_probs);

  const auto c = grid::run_episode(plan, cfg, policy, 315, "s315", 0);
  CHECK(a.trajectory.actions != c.trajectory.actions);
}

TEST_CASE("planning goals are reachable and episodes settle") {
  const TaskConfig cfg = TaskConfig::defaults(Task::planning);
  grid::BlindPolicy policy;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto out = grid::run_episode(rooms(), cfg, policy, seed);
    CHECK(out.trajectory.length() <= 400);
    CHECK(out.record.task == "planning");
  }
}

TEST_CASE("random baseline is uniform within three sigma") {
  grid::RandomPolicy policy;
  std::mt19937_64 rng(100);
  const int n = 10000;
  int counts[3] = {0, 0, 0};
  for (int i = 0; i < n; ++i) ++counts[policy.act({}, rng).action];
  const double expect = n / 3.0;
  const double sigma = std::sqrt(n * (1.0 / 3.0) * (2.0 / 3.0));
  for (int a = 0; a < 3; ++a)
    CHECK(std::fabs(counts[a] - expect) <= 3.0 * sigma);
}

TEST_CASE("blind baseline ignores the observation") {
  grid::BlindPolicy policy;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng_a(seed), rng_b(seed);
    const auto a = policy.act({1.0, 2.0, 3.0}, rng_a);
    const auto b = policy.act({-9.0, 0.0, 4.5}, rng_b);
    CHECK(a.action == b.action);
    CHECK(a.log_prob == b.log_prob);
  }
}

TEST_CASE("policies returning bad actions are a protocol error") {
  struct Broken final : grid::Policy {
    std::string name() const override { return "broken"; }
    grid::ActionChoice act(const std::vector<double>&, std::mt19937_64&) override {
      return {7, -0.1};
    }
  } broken;
  CHECK_THROWS_AS(grid::run_episode(open10(), TaskConfig::defaults(Task::navigation), broken, 1),
                  std::logic_error);
}

TEST_CASE("unknown baseline names list the registry") {
  CHECK_THROWS_WITH(grid::make_baseline("nonsense"),
                    Catch::Matchers::ContainsSubstring("random"));
}

TEST_CASE("navigation rewards stay inside the analytic range") {
  grid::RandomPolicy policy;
  const TaskConfig cfg = TaskConfig::defaults(Task::navigation);
  const FloorPlan plan = rooms();
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto out = grid::run_episode(plan, cfg, policy, seed);
    CHECK(out.record.reward >= -10.0);
    CHECK(out.record.reward <= 10.0 - 0.025);
  }
}
