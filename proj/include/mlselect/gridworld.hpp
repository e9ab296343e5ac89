#ifndef MLSELECT_GRIDWORLD_HPP
#define MLSELECT_GRIDWORLD_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <memory>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "mlselect/rl.hpp"
#include "mlselect/stats.hpp"
#include "mlselect/util.hpp"

namespace mlselect::grid {

struct Pose {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;  // radians in [0, 2*pi), 0 points along +x
};

inline double normalize_heading(double h) {
  const double two_pi = 2.0 * std::numbers::pi;
  h = std::fmod(h, two_pi);
  if (h < 0.0) h += two_pi;
  return h;
}

struct Cell {
  int x = 0;
  int y = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
  friend auto operator<=>(const Cell&, const Cell&) = default;
};

/// Floor plan on a 1 m cell grid. ASCII format: '#' obstacle, '.' free,
/// 'S' spawn region, 'T' target region; the first file row is the top of
/// the map. Maps without S (or T) use every free cell for that region.
struct FloorPlan {
  int width = 0;   // meters == cells
  int height = 0;
  std::vector<std::uint8_t> occupied;  // row-major, index = y * width + x
  std::vector<Cell> spawn_cells;
  std::vector<Cell> target_cells;

  bool in_bounds_cell(int cx, int cy) const {
    return cx >= 0 && cy >= 0 && cx < width && cy < height;
  }

  bool occupied_cell(int cx, int cy) const {
    return occupied[static_cast<std::size_t>(cy) * static_cast<std::size_t>(width) +
                    static_cast<std::size_t>(cx)] != 0;
  }

  /// A continuous point is blocked when it leaves the floor plan or lands in
  /// an obstacle cell.
  bool blocked(double x, double y) const {
    const int cx = static_cast<int>(std::floor(x));
    const int cy = static_cast<int>(std::floor(y));
    if (!in_bounds_cell(cx, cy)) return true;
    return occupied_cell(cx, cy);
  }

  int free_cell_count() const {
    int n = 0;
    for (std::uint8_t o : occupied) n += o == 0 ? 1 : 0;
    return n;
  }

  void validate() const {
    if (width < 1 || height < 1) throw std::invalid_argument("floor plan must be at least 1x1");
    if (occupied.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
      throw std::invalid_argument("occupancy bitmap size mismatch");
    for (const Cell& c : spawn_cells)
      if (!in_bounds_cell(c.x, c.y) || occupied_cell(c.x, c.y))
        throw std::invalid_argument("spawn region must be obstacle-free");
    for (const Cell& c : target_cells)
      if (!in_bounds_cell(c.x, c.y) || occupied_cell(c.x, c.y))
        throw std::invalid_argument("target region must be obstacle-free");
    if (spawn_cells.empty()) throw std::invalid_argument("floor plan has no spawnable cell");
  }

  static FloorPlan from_ascii(std::istream& in, const std::string& path = "<map>") {
    std::vector<std::string> rows;
    std::string line;
    while (std::getline(in, line)) {
      const std::string t = util::trim(line);
      if (!t.empty()) rows.push_back(t);
    }
    return from_rows(rows, path);
  }

  static FloorPlan from_rows(const std::vector<std::string>& rows, const std::string& path) {
    if (rows.empty()) throw ParseError(path + ":1: empty map");
    FloorPlan plan;
    plan.height = static_cast<int>(rows.size());
    plan.width = static_cast<int>(rows[0].size());
    plan.occupied.assign(static_cast<std::size_t>(plan.width) * static_cast<std::size_t>(plan.height), 0);
    std::vector<Cell> spawn, target;
    for (int r = 0; r < plan.height; ++r) {
      const std::string& row = rows[static_cast<std::size_t>(r)];
      if (static_cast<int>(row.size()) != plan.width)
        throw ParseError(path + ":" + std::to_string(r + 1) + ": ragged map row");
      const int y = plan.height - 1 - r;  // first file row is the top
      for (int x = 0; x < plan.width; ++x) {
        const char c = row[static_cast<std::size_t>(x)];
        switch (c) {
          case '#': plan.occupied[static_cast<std::size_t>(y) * static_cast<std::size_t>(plan.width) +
                                  static_cast<std::size_t>(x)] = 1; break;
          case '.': break;
          case 'S': spawn.push_back({x, y}); break;
          case 'T': target.push_back({x, y}); break;
          default:
            throw ParseError(path + ":" + std::to_string(r + 1) + ": unknown map character '" +
                             std::string(1, c) + "'");
        }
      }
    }
    std::vector<Cell> free;
    for (int y = 0; y < plan.height; ++y)
      for (int x = 0; x < plan.width; ++x)
        if (!plan.occupied_cell(x, y)) free.push_back({x, y});
    plan.spawn_cells = spawn.empty() ? free : spawn;
    plan.target_cells = target.empty() ? free : target;
    plan.validate();
    return plan;
  }

  // {"rows": ["####", "#S.#", ...]}
  static FloorPlan from_json(const nlohmann::json& j, const std::string& path = "<map>") {
    std::vector<std::string> rows;
    for (const auto& r : j.at("rows")) rows.push_back(r.get<std::string>());
    return from_rows(rows, path);
  }

  static FloorPlan load(const std::string& path) {
    const std::string content = util::read_file(path);
    const std::string head = util::trim(content.substr(0, 16));
    if (!head.empty() && head[0] == '{') {
      try {
        return from_json(nlohmann::json::parse(content), path);
      } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
      }
    }
    std::istringstream ss(content);
    return from_ascii(ss, path);
  }
};

/// Cells revealed by the exploration scanner. Grows monotonically within an
/// episode.
class OccupancyGrid {
 public:
  OccupancyGrid() = default;
  OccupancyGrid(int width, int height)
      : width_(width), height_(height),
        unlocked_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0) {}

  bool is_unlocked(int cx, int cy) const {
    return unlocked_[index(cx, cy)] != 0;
  }

  bool unlock(int cx, int cy) {
    std::uint8_t& flag = unlocked_[index(cx, cy)];
    if (flag) return false;
    flag = 1;
    ++count_;
    return true;
  }

  int count() const { return count_; }
  int width() const { return width_; }
  int height() const { return height_; }

  /// Independent recount by walking the bitmap; test oracles use this.
  int recount() const {
    int n = 0;
    for (std::uint8_t f : unlocked_) n += f != 0 ? 1 : 0;
    return n;
  }

 private:
  std::size_t index(int cx, int cy) const {
    if (cx < 0 || cy < 0 || cx >= width_ || cy >= height_)
      throw std::out_of_range("occupancy cell out of bounds");
    return static_cast<std::size_t>(cy) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(cx);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> unlocked_;
  int count_ = 0;
};

enum class Task { navigation, exploration, planning };

inline std::string task_name(Task t) {
  switch (t) {
    case Task::navigation: return "navigation";
    case Task::exploration: return "exploration";
    case Task::planning: return "planning";
  }
  return "navigation";
}

inline Task task_from_string(const std::string& s) {
  if (s == "navigation" || s == "nav") return Task::navigation;
  if (s == "exploration" || s == "explore") return Task::exploration;
  if (s == "planning" || s == "plan") return Task::planning;
  throw std::invalid_argument("unknown task '" + s + "' (expected nav | explore | plan)");
}

struct TaskConfig {
  Task task = Task::navigation;

  // action geometry
  double turn_radians = 0.24;
  double forward_meters = 0.1;
  double touch_radius = 0.2;

  // navigation
  double nav_target_reward = 10.0;
  double nav_living = -0.025;
  int nav_max_steps = 400;

  // exploration
  double explore_cell_reward = 0.1;
  int explore_max_steps = 1000;
  double scan_range = 1.5;
  double scan_half_angle = std::numbers::pi / 6.0;
  int scan_rays = 61;
  double scan_step = 0.05;

  // planning
  double plan_progress_coeff = 0.1;
  double plan_goal_reward = 20.0;
  double plan_living = -0.05;
  double plan_collision = -0.25;
  int plan_max_steps = 400;
  double goal_distance_mean = 5.0;
  double goal_distance_variance = 2.0;

  static TaskConfig defaults(Task task) {
    TaskConfig c;
    c.task = task;
    return c;
  }

  int max_steps() const {
    switch (task) {
      case Task::navigation: return nav_max_steps;
      case Task::exploration: return explore_max_steps;
      case Task::planning: return plan_max_steps;
    }
    return nav_max_steps;
  }

  /// Analytic per-episode reward minimum, the default r_min of the relative
  /// reward. Planning ignores the (map-dependent) progress term.
  double reward_minimum() const {
    switch (task) {
      case Task::navigation: return static_cast<double>(nav_max_steps) * nav_living;
      case Task::exploration: return 0.0;
      case Task::planning:
        return static_cast<double>(plan_max_steps) * (plan_living + plan_collision);
    }
    return 0.0;
  }
};

enum class Action { turn_left = 0, turn_right = 1, move_forward = 2 };
inline constexpr int kNumActions = 3;

/// Goal position in the agent frame: [r, cos(theta), sin(theta)] with theta
/// measured counterclockwise from the heading.
inline std::vector<double> planning_observation(const Pose& pose, double goal_x, double goal_y) {
  const double dx = goal_x - pose.x;
  const double dy = goal_y - pose.y;
  const double r = std::hypot(dx, dy);
  const double theta = std::atan2(dy, dx) - pose.heading;
  return {r, std::cos(theta), std::sin(theta)};
}

/// Forward scan cone: rays across [-half_angle, +half_angle], sampled every
/// scan_step up to scan_range and truncated at the first blocked sample.
/// Newly revealed cells are unlocked in the grid and returned.
inline std::vector<Cell> scan_unlock(const Pose& pose, const FloorPlan& plan, OccupancyGrid& grid,
                                     const TaskConfig& config) {
  std::vector<Cell> revealed;
  const int rays = std::max(1, config.scan_rays);
  for (int ray = 0; ray < rays; ++ray) {
    const double frac = rays == 1 ? 0.5 : static_cast<double>(ray) / static_cast<double>(rays - 1);
    const double angle = pose.heading + config.scan_half_angle * (2.0 * frac - 1.0);
    const double cx = std::cos(angle), cy = std::sin(angle);
    for (double t = 0.0; t <= config.scan_range + 1e-12; t += config.scan_step) {
      const double px = pose.x + t * cx;
      const double py = pose.y + t * cy;
      if (plan.blocked(px, py)) break;
      const int ux = static_cast<int>(std::floor(px));
      const int uy = static_cast<int>(std::floor(py));
      if (grid.unlock(ux, uy)) revealed.push_back({ux, uy});
    }
  }
  return revealed;
}

namespace detail {

// Dry-run scan: counts cells a scan would newly reveal, without unlocking.
// Coarser ray fan than the real scanner; this feeds observations only.
inline int frontier_count(const Pose& pose, const FloorPlan& plan, const OccupancyGrid& grid,
                          const TaskConfig& config) {
  std::vector<Cell> seen;
  const int rays = 21;
  for (int ray = 0; ray < rays; ++ray) {
    const double frac = static_cast<double>(ray) / static_cast<double>(rays - 1);
    const double angle = pose.heading + config.scan_half_angle * (2.0 * frac - 1.0);
    const double cx = std::cos(angle), cy = std::sin(angle);
    for (double t = 0.0; t <= config.scan_range + 1e-12; t += config.scan_step) {
      const double px = pose.x + t * cx;
      const double py = pose.y + t * cy;
      if (plan.blocked(px, py)) break;
      const int ux = static_cast<int>(std::floor(px));
      const int uy = static_cast<int>(std::floor(py));
      if (!grid.is_unlocked(ux, uy)) {
        const Cell c{ux, uy};
        if (std::find(seen.begin(), seen.end(), c) == seen.end()) seen.push_back(c);
      }
    }
  }
  return static_cast<int>(seen.size());
}

inline double clearance(const Pose& pose, const FloorPlan& plan, double angle_offset,
                        double range, double step) {
  const double angle = pose.heading + angle_offset;
  const double cx = std::cos(angle), cy = std::sin(angle);
  double free_t = 0.0;
  for (double t = step; t <= range + 1e-12; t += step) {
    if (plan.blocked(pose.x + t * cx, pose.y + t * cy)) break;
    free_t = t;
  }
  return free_t / range;
}

}  // namespace detail

struct StepInfo {
  bool collision = false;
  int cells_revealed = 0;
};

struct StepResult {
  std::vector<double> observation;
  double reward = 0.0;
  bool done = false;
  StepInfo info;
};

/// Single-threaded episode state machine for the three active tasks. The
/// agent is a point; walls cancel the translation (bounce-back) and set the
/// collision flag, so the pose never leaves the floor plan.
class Environment {
 public:
  Environment(FloorPlan plan, TaskConfig config)
      : plan_(std::move(plan)), cfg_(config) {
    plan_.validate();
  }

  /// Observation layout (all tasks are 7-dimensional):
  ///  navigation/planning: [1, r, cos, sin, clear_fwd, clear_left, clear_right]
  ///  exploration:         [1, clear_fwd, clear_left, clear_right,
  ///                        frontier_fwd, frontier_left, frontier_right]
  static constexpr int kObservationSize = 7;

  std::vector<double> reset(std::mt19937_64& rng) {
    steps_ = 0;
    collisions_ = 0;
    done_ = false;
    target_hit_ = false;
    plan_return_ = 0.0;
    occupancy_ = OccupancyGrid(plan_.width, plan_.height);

    pose_ = sample_pose(plan_.spawn_cells, rng);
    if (cfg_.task == Task::navigation) {
      const Pose t = sample_pose(plan_.target_cells, rng);
      target_x_ = t.x;
      target_y_ = t.y;
    } else if (cfg_.task == Task::planning) {
      sample_goal(rng);
      prev_goal_dist_ = std::hypot(goal_x_ - pose_.x, goal_y_ - pose_.y);
    }
    return observation();
  }

  /// Fully determined reset for scripted scenarios: pins the pose and, for
  /// navigation/planning, the target or goal point.
  std::vector<double> reset_at(const Pose& pose, double goal_x = 0.0, double goal_y = 0.0) {
    if (plan_.blocked(pose.x, pose.y)) throw std::invalid_argument("reset_at: pose is blocked");
    steps_ = 0;
    collisions_ = 0;
    done_ = false;
    target_hit_ = false;
    plan_return_ = 0.0;
    occupancy_ = OccupancyGrid(plan_.width, plan_.height);
    pose_ = pose;
    pose_.heading = normalize_heading(pose.heading);
    target_x_ = goal_x_ = goal_x;
    target_y_ = goal_y_ = goal_y;
    prev_goal_dist_ = std::hypot(goal_x_ - pose_.x, goal_y_ - pose_.y);
    return observation();
  }

  StepResult step(Action action) {
    if (done_) throw std::logic_error("step() called after episode end");

    StepResult result;
    switch (action) {
      case Action::turn_left:
        pose_.heading = normalize_heading(pose_.heading + cfg_.turn_radians);
        break;
      case Action::turn_right:
        pose_.heading = normalize_heading(pose_.heading - cfg_.turn_radians);
        break;
      case Action::move_forward: {
        const double nx = pose_.x + cfg_.forward_meters * std::cos(pose_.heading);
        const double ny = pose_.y + cfg_.forward_meters * std::sin(pose_.heading);
        if (plan_.blocked(nx, ny)) {
          result.info.collision = true;
          ++collisions_;
        } else {
          pose_.x = nx;
          pose_.y = ny;
        }
        break;
      }
      default:
        throw std::logic_error("invalid action index");
    }
    ++steps_;

    switch (cfg_.task) {
      case Task::navigation: {
        result.reward = cfg_.nav_living;
        if (std::hypot(target_x_ - pose_.x, target_y_ - pose_.y) <= cfg_.touch_radius) {
          result.reward += cfg_.nav_target_reward;
          target_hit_ = true;
          done_ = true;
        }
        break;
      }
      case Task::exploration: {
        const std::vector<Cell> revealed = scan_unlock(pose_, plan_, occupancy_, cfg_);
        result.info.cells_revealed = static_cast<int>(revealed.size());
        result.reward = cfg_.explore_cell_reward * static_cast<double>(revealed.size());
        break;
      }
      case Task::planning: {
        const double d = std::hypot(goal_x_ - pose_.x, goal_y_ - pose_.y);
        result.reward = cfg_.plan_progress_coeff * (prev_goal_dist_ - d) + cfg_.plan_living;
        if (result.info.collision) result.reward += cfg_.plan_collision;
        if (d <= cfg_.touch_radius) {
          result.reward += cfg_.plan_goal_reward;
          target_hit_ = true;
          done_ = true;
        }
        prev_goal_dist_ = d;
        plan_return_ += result.reward;
        break;
      }
    }
    if (steps_ >= cfg_.max_steps()) done_ = true;
    result.done = done_;
    result.observation = observation();
    return result;
  }

  /// Episode return from counters, so the bookkeeping identities are exact:
  /// navigation is steps * living (+bonus), exploration is cell_reward *
  /// unlocked count. Planning accumulates its dense reward stepwise.
  double episode_return() const {
    switch (cfg_.task) {
      case Task::navigation:
        return static_cast<double>(steps_) * cfg_.nav_living +
               (target_hit_ ? cfg_.nav_target_reward : 0.0);
      case Task::exploration:
        return cfg_.explore_cell_reward * static_cast<double>(occupancy_.count());
      case Task::planning:
        return plan_return_;
    }
    return 0.0;
  }

  std::vector<double> observation() const {
    const double qa = std::numbers::pi / 4.0;
    const double cf = detail::clearance(pose_, plan_, 0.0, cfg_.scan_range, cfg_.scan_step);
    const double cl = detail::clearance(pose_, plan_, qa, cfg_.scan_range, cfg_.scan_step);
    const double cr = detail::clearance(pose_, plan_, -qa, cfg_.scan_range, cfg_.scan_step);
    if (cfg_.task == Task::exploration) {
      Pose ahead = pose_;
      const double nx = pose_.x + cfg_.forward_meters * std::cos(pose_.heading);
      const double ny = pose_.y + cfg_.forward_meters * std::sin(pose_.heading);
      if (!plan_.blocked(nx, ny)) { ahead.x = nx; ahead.y = ny; }
      Pose left = pose_, right = pose_;
      left.heading = normalize_heading(pose_.heading + cfg_.turn_radians);
      right.heading = normalize_heading(pose_.heading - cfg_.turn_radians);
      const double ff = detail::frontier_count(ahead, plan_, occupancy_, cfg_) / 10.0;
      const double fl = detail::frontier_count(left, plan_, occupancy_, cfg_) / 10.0;
      const double fr = detail::frontier_count(right, plan_, occupancy_, cfg_) / 10.0;
      return {1.0, cf, cl, cr, ff, fl, fr};
    }
    const double gx = cfg_.task == Task::navigation ? target_x_ : goal_x_;
    const double gy = cfg_.task == Task::navigation ? target_y_ : goal_y_;
    std::vector<double> rel = planning_observation(pose_, gx, gy);
    return {1.0, rel[0], rel[1], rel[2], cf, cl, cr};
  }

  const Pose& pose() const { return pose_; }
  const OccupancyGrid& occupancy() const { return occupancy_; }
  const FloorPlan& plan() const { return plan_; }
  const TaskConfig& config() const { return cfg_; }
  int steps() const { return steps_; }
  int collisions() const { return collisions_; }
  bool done() const { return done_; }
  bool goal_reached() const { return target_hit_; }

 private:
  Pose sample_pose(const std::vector<Cell>& cells, std::mt19937_64& rng) {
    std::uniform_int_distribution<std::size_t> pick(0, cells.size() - 1);
    const Cell c = cells[pick(rng)];
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Pose p;
    p.x = static_cast<double>(c.x) + unit(rng);
    p.y = static_cast<double>(c.y) + unit(rng);
    p.heading = normalize_heading(unit(rng) * 2.0 * std::numbers::pi);
    return p;
  }

  // Goal distance ~ Normal(mean, variance), bearing uniform, truncated to
  // reachable free space; resampled up to 100 times.
  void sample_goal(std::mt19937_64& rng) {
    const std::vector<std::uint8_t> reachable = reachable_cells();
    std::normal_distribution<double> dist(cfg_.goal_distance_mean,
                                          std::sqrt(cfg_.goal_distance_variance));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int attempt = 0; attempt < 100; ++attempt) {
      const double d = dist(rng);
      const double bearing = unit(rng) * 2.0 * std::numbers::pi;
      const double gx = pose_.x + d * std::cos(bearing);
      const double gy = pose_.y + d * std::sin(bearing);
      if (d <= 0.0 || plan_.blocked(gx, gy)) continue;
      const int cx = static_cast<int>(std::floor(gx));
      const int cy = static_cast<int>(std::floor(gy));
      if (!reachable[static_cast<std::size_t>(cy) * static_cast<std::size_t>(plan_.width) +
                     static_cast<std::size_t>(cx)])
        continue;
      goal_x_ = gx;
      goal_y_ = gy;
      return;
    }
    throw std::runtime_error("could not sample a reachable planning goal after 100 tries");
  }

  std::vector<std::uint8_t> reachable_cells() const {
    std::vector<std::uint8_t> seen(
        static_cast<std::size_t>(plan_.width) * static_cast<std::size_t>(plan_.height), 0);
    std::deque<Cell> queue;
    const Cell start{static_cast<int>(std::floor(pose_.x)), static_cast<int>(std::floor(pose_.y))};
    queue.push_back(start);
    seen[static_cast<std::size_t>(start.y) * static_cast<std::size_t>(plan_.width) +
         static_cast<std::size_t>(start.x)] = 1;
    while (!queue.empty()) {
      const Cell c = queue.front();
      queue.pop_front();
      const int dx[4] = {1, -1, 0, 0};
      const int dy[4] = {0, 0, 1, -1};
      for (int k = 0; k < 4; ++k) {
        const int nx = c.x + dx[k], ny = c.y + dy[k];
        if (!plan_.in_bounds_cell(nx, ny) || plan_.occupied_cell(nx, ny)) continue;
        std::uint8_t& flag = seen[static_cast<std::size_t>(ny) * static_cast<std::size_t>(plan_.width) +
                                  static_cast<std::size_t>(nx)];
        if (!flag) {
          flag = 1;
          queue.push_back({nx, ny});
        }
      }
    }
    return seen;
  }

  FloorPlan plan_;
  TaskConfig cfg_;
  Pose pose_;
  OccupancyGrid occupancy_;
  double target_x_ = 0.0, target_y_ = 0.0;  // navigation
  double goal_x_ = 0.0, goal_y_ = 0.0;      // planning
  double prev_goal_dist_ = 0.0;
  double plan_return_ = 0.0;
  int steps_ = 0;
  int collisions_ = 0;
  bool done_ = false;
  bool target_hit_ = false;
};

struct ActionChoice {
  int action = 0;
  double log_prob = 0.0;
};

/// Action selector driven by the per-episode RNG stream.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string name() const = 0;
  virtual ActionChoice act(const std::vector<double>& observation, std::mt19937_64& rng) = 0;
};

class RandomPolicy final : public Policy {
 public:
  std::string name() const override { return "random"; }
  ActionChoice act(const std::vector<double>&, std::mt19937_64& rng) override {
    std::uniform_int_distribution<int> pick(0, kNumActions - 1);
    return {pick(rng), -std::log(static_cast<double>(kNumActions))};
  }
};

/// Observation-independent actor with a fixed forward-leaning action
/// distribution; stands in for the learned blind baseline.
class BlindPolicy final : public Policy {
 public:
  std::string name() const override { return "blind"; }
  ActionChoice act(const std::vector<double>&, std::mt19937_64& rng) override {
    static constexpr double kProbs[kNumActions] = {0.2, 0.2, 0.6};
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double u = unit(rng);
    double acc = 0.0;
    for (int a = 0; a < kNumActions; ++a) {
      acc += kProbs[a];
      if (u < acc) return {a, std::log(kProbs[a])};
    }
    return {kNumActions - 1, std::log(kProbs[kNumActions - 1])};
  }
};

/// Adapter exposing a linear-softmax policy as an episode actor.
class LinearPolicyActor final : public Policy {
 public:
  LinearPolicyActor(rl::LinearSoftmaxPolicy policy, std::string name)
      : policy_(std::move(policy)), name_(std::move(name)) {}

  std::string name() const override { return name_; }
  ActionChoice act(const std::vector<double>& observation, std::mt19937_64& rng) override {
    double log_prob = 0.0;
    const int action = policy_.sample(observation, rng, &log_prob);
    return {action, log_prob};
  }

  const rl::LinearSoftmaxPolicy& policy() const { return policy_; }

 private:
  rl::LinearSoftmaxPolicy policy_;
  std::string name_;
};

inline std::vector<std::string> baseline_names() { return {"random", "blind"}; }

inline std::unique_ptr<Policy> make_baseline(const std::string& name) {
  if (name == "random") return std::make_unique<RandomPolicy>();
  if (name == "blind") return std::make_unique<BlindPolicy>();
  std::string known;
  for (const std::string& n : baseline_names()) known += (known.empty() ? "" : ", ") + n;
  throw std::invalid_argument("unknown policy '" + name + "' (registered: " + known + ")");
}

struct EpisodeOutput {
  rl::Trajectory trajectory;
  stats::EpisodeRecord record;
};

/// Runs one episode to completion. Deterministic given the seed and a
/// deterministic policy; spawn, target and policy draws all consume the same
/// seeded stream.
inline EpisodeOutput run_episode(const FloorPlan& plan, const TaskConfig& config, Policy& policy,
                                 std::uint64_t rng_seed, const std::string& seed_label = "",
                                 int episode_index = 0, int snapshot = 0) {
  std::mt19937_64 rng(rng_seed);
  Environment env(plan, config);
  std::vector<double> obs = env.reset(rng);

  EpisodeOutput out;
  rl::Trajectory& traj = out.trajectory;
  traj.snapshot = snapshot;
  while (!env.done()) {
    const ActionChoice choice = policy.act(obs, rng);
    if (choice.action < 0 || choice.action >= kNumActions)
      throw std::logic_error("policy returned invalid action index " +
                             std::to_string(choice.action));
    traj.observations.push_back(obs);
    traj.actions.push_back(choice.action);
    traj.behavior_log_probs.push_back(choice.log_prob);
    const StepResult r = env.step(static_cast<Action>(choice.action));
    traj.rewards.push_back(r.reward);
    obs = r.observation;
  }
  traj.observations.push_back(obs);
  traj.value_estimates.assign(traj.length() + 1, 0.0);
  traj.terminal = true;

  out.record.task = task_name(config.task);
  out.record.condition = policy.name();
  out.record.seed = seed_label.empty() ? std::to_string(rng_seed) : seed_label;
  out.record.episode_index = episode_index;
  out.record.reward = env.episode_return();
  return out;
}

}  // namespace mlselect::grid

#endif  // MLSELECT_GRIDWORLD_HPP
