#ifndef MLSELECT_CLI_HPP
#define MLSELECT_CLI_HPP

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mlselect/cover.hpp"
#include "mlselect/gridworld.hpp"
#include "mlselect/report.hpp"
#include "mlselect/stats.hpp"
#include "mlselect/trainer.hpp"
#include "mlselect/transfer.hpp"
#include "mlselect/util.hpp"

namespace mlselect::cli {

// Exit codes are a stable contract:
//   0 success, 1 usage, 2 input parse, 3 infeasible or degenerate.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitParse = 2;
inline constexpr int kExitInfeasible = 3;

namespace detail {

inline void write_manifest(const std::string& command, const std::vector<std::string>& inputs,
                           const std::vector<std::string>& args, std::uint64_t seed,
                           const std::string& output, const std::string& manifest_path) {
  report::RunManifest m;
  m.command = command;
  m.inputs = inputs;
  m.args = args;
  m.seed = seed;
  m.output = output;
  m.write(manifest_path);
}

inline std::vector<double> parse_alpha_list(const std::string& csv) {
  std::vector<double> out;
  for (const std::string& tok : util::split(csv, ','))
    out.push_back(util::parse_double(util::trim(tok), "--alpha", 0));
  return out;
}

}  // namespace detail

// ---- analyze ------------------------------------------------------------

struct AnalyzeOptions {
  std::string episodes_path;
  std::string pvals_path;
  double q = 0.2;
  std::string baseline;
  std::vector<double> alpha_levels = {0.05, 0.01, 0.001};
  std::map<std::string, double> rmin_overrides;
  std::string out_dir;
};

inline double task_reward_minimum(const std::string& task,
                                  const std::map<std::string, double>& overrides,
                                  bool& known) {
  known = true;
  const auto it = overrides.find(task);
  if (it != overrides.end()) return it->second;
  try {
    return grid::TaskConfig::defaults(grid::task_from_string(task)).reward_minimum();
  } catch (const std::invalid_argument&) {
    known = false;
    return 0.0;
  }
}

inline report::Analysis run_analysis(const AnalyzeOptions& opt) {
  report::Analysis analysis;
  analysis.q = opt.q;
  analysis.alpha_levels = opt.alpha_levels;

  if (!opt.pvals_path.empty()) {
    // p-only mode: labeled p-values straight into the FDR step-up.
    analysis.p_only = true;
    std::ifstream in(opt.pvals_path);
    if (!in) throw ParseError(opt.pvals_path + ": cannot open file");
    std::string line;
    int lineno = 0;
    if (!std::getline(in, line)) throw ParseError(opt.pvals_path + ":1: empty p-value file");
    ++lineno;
    if (util::trim(line) != "label,p")
      throw ParseError(opt.pvals_path + ":1: expected header 'label,p'");
    std::vector<stats::Hypothesis> hs;
    while (std::getline(in, line)) {
      ++lineno;
      const std::string t = util::trim(line);
      if (t.empty()) continue;
      const std::vector<std::string> cells = util::split(t, ',');
      if (cells.size() != 2)
        throw ParseError(opt.pvals_path + ":" + std::to_string(lineno) + ": expected 2 fields");
      hs.push_back({util::trim(cells[0]), 0.0,
                    util::parse_double(util::trim(cells[1]), opt.pvals_path, lineno)});
    }
    report::TaskAnalysis ta;
    ta.task = "pvalues";
    for (const stats::HypothesisResult& r : stats::bh_fdr(hs, opt.q))
      ta.rows.push_back({r.label, 0.0, r.statistic, r.p_value, r.bh_threshold, r.rejected});
    analysis.tasks.push_back(std::move(ta));
    return analysis;
  }

  std::ifstream in(opt.episodes_path);
  if (!in) throw ParseError(opt.episodes_path + ": cannot open file");
  const std::vector<stats::EpisodeRecord> records = stats::episodes_from_csv(in, opt.episodes_path);
  if (records.empty()) throw std::invalid_argument("episode file has no data rows");
  const std::vector<stats::ClusterMean> clusters = stats::cluster_reduce(records);
  analysis.baseline = opt.baseline;

  // task -> condition -> seed-level mean rewards
  std::map<std::string, std::map<std::string, std::vector<double>>> by_task;
  for (const stats::ClusterMean& c : clusters)
    by_task[c.task][c.condition].push_back(c.mean_reward);

  for (const auto& [task, conditions] : by_task) {
    const auto base_it = conditions.find(opt.baseline);
    if (base_it == conditions.end()) {
      std::string available;
      for (const auto& [name, v] : conditions) {
        (void)v;
        available += (available.empty() ? "" : ", ") + name;
      }
      throw std::invalid_argument("task '" + task + "': baseline condition '" + opt.baseline +
                                  "' not present (available: " + available + ")");
    }
    std::vector<stats::Hypothesis> hs;
    std::map<std::string, double> means;
    for (const auto& [condition, rewards] : conditions) {
      double mean = 0.0;
      for (double r : rewards) mean += r;
      means[condition] = mean / static_cast<double>(rewards.size());
      if (condition == opt.baseline) continue;
      const stats::MwResult mw =
          stats::mann_whitney_u(rewards, base_it->second, stats::Alternative::greater);
      hs.push_back({condition, mw.u, mw.p_value});
    }
    report::TaskAnalysis ta;
    ta.task = task;
    for (const stats::HypothesisResult& r : stats::bh_fdr(hs, opt.q))
      ta.rows.push_back({r.label, means[r.label], r.statistic, r.p_value, r.bh_threshold, r.rejected});
    analysis.tasks.push_back(std::move(ta));

    // relative rewards against the blind condition, when present
    const auto blind_it = means.find("blind");
    if (blind_it != means.end()) {
      bool known = false;
      const double r_min = task_reward_minimum(task, opt.rmin_overrides, known);
      if (!known) {
        std::cerr << "mlselect: task '" << task
                  << "' has no analytic reward minimum; pass --rmin " << task
                  << "=VALUE to enable relative rewards\n";
      } else if (blind_it->second == r_min) {
        std::cerr << "mlselect: task '" << task
                  << "': blind mean equals r_min; relative rewards undefined\n";
      } else {
        for (const auto& [condition, mean] : means)
          analysis.relative_rewards.push_back(
              {task, condition, mean, stats::relative_reward(mean, blind_it->second, r_min)});
      }
    }
  }

  if (by_task.size() >= 2) {
    try {
      analysis.rank_reversal = stats::rank_reversal_graph(clusters, opt.alpha_levels);
    } catch (const std::invalid_argument& e) {
      std::cerr << "mlselect: rank-reversal graph skipped: " << e.what() << "\n";
    }
  }
  return analysis;
}

// ---- command bodies -------------------------------------------------------

struct CommandContext {
  std::vector<std::string> args;  // original argv for the manifest
};

inline int cmd_select(const std::string& affinities_path, int k, double delta,
                      const std::string& objective, const std::string& out_path,
                      const CommandContext& ctx) {
  const cover::AffinityMatrix A = cover::AffinityMatrix::load(affinities_path);
  const cover::TieBreak tie = objective == "max_perf" ? cover::TieBreak::max_total_affinity
                                                      : cover::TieBreak::none;
  cover::CoverSolution sol;
  if (k > 0)
    sol = cover::max_threshold_for_size(A, k, tie);
  else
    sol = cover::min_set_for_threshold(A, delta, tie);

  const nlohmann::json j = cover::solution_to_json(A, sol);
  if (!sol.feasible) {
    std::cout << "infeasible: no covering set reaches the requested threshold\n";
  } else {
    std::string names;
    for (int i : sol.selected)
      names += (names.empty() ? "" : ", ") + A.feature_names[static_cast<std::size_t>(i)];
    std::cout << "selected: {" << names << "}\n";
    std::cout << "delta: " << util::format_double(sol.threshold_delta) << "\n";
    std::cout << "solver_calls: " << sol.solver_calls << "\n";
  }
  if (!out_path.empty()) {
    util::write_file(out_path, j.dump(2) + "\n");
    detail::write_manifest("select", {affinities_path}, ctx.args, 0, out_path,
                           out_path + ".manifest.json");
  }
  return sol.feasible ? kExitOk : kExitInfeasible;
}

inline int cmd_transfer_select(const std::string& problem_path, int budget,
                               const std::string& mode_override, const std::string& out_path,
                               const CommandContext& ctx) {
  transfer::TransferProblem problem = transfer::TransferProblem::load(problem_path);
  if (!mode_override.empty())
    problem.objective_mode = transfer::TransferProblem::mode_from_string(mode_override);

  const transfer::TransferSolution sol = budget > 0 ? transfer::min_delta_schedule(problem, budget)
                                                    : transfer::solve_transfer(problem);
  nlohmann::json j = sol.to_json();
  auto edge_names = nlohmann::json::array();
  for (int e : sol.chosen_edges) {
    const transfer::TransferEdge& edge = problem.edges[static_cast<std::size_t>(e)];
    nlohmann::json je;
    je["sources"] = edge.sources;
    je["target"] = edge.target;
    je["p"] = edge.performance;
    edge_names.push_back(std::move(je));
  }
  j["chosen"] = std::move(edge_names);

  if (sol.status == bip::SolveStatus::optimal) {
    std::cout << "active features:";
    for (const std::string& f : sol.active_features) std::cout << " " << f;
    std::cout << "\nobjective: " << util::format_double(bip::to_double(sol.objective_value))
              << "\ndelta: " << util::format_double(sol.achieved_delta) << "\n";
  } else {
    std::cout << "infeasible: no transfer selection satisfies the constraints\n";
  }
  if (!out_path.empty()) {
    util::write_file(out_path, j.dump(2) + "\n");
    detail::write_manifest("transfer-select", {problem_path}, ctx.args, 0, out_path,
                           out_path + ".manifest.json");
  }
  return sol.status == bip::SolveStatus::optimal ? kExitOk : kExitInfeasible;
}

inline int cmd_analyze(const AnalyzeOptions& opt, const CommandContext& ctx) {
  const report::Analysis analysis = run_analysis(opt);
  const std::string table = report::tables_to_text(analysis);
  std::cout << table;
  if (!analysis.relative_rewards.empty()) {
    std::cout << "== relative reward vs blind ==\n";
    for (const report::RelativeRewardRow& r : analysis.relative_rewards)
      std::cout << r.task << " | " << r.condition << " | " << util::format_double(r.rr) << "\n";
  }
  if (analysis.rank_reversal) {
    for (const stats::ReversalPair& p : analysis.rank_reversal->reversals)
      std::cout << "rank reversal: " << p.condition_a << " wins " << p.task_a << ", "
                << p.condition_b << " wins " << p.task_b << "\n";
    if (analysis.rank_reversal->universal_features.empty())
      std::cout << "universal feature: none\n";
    else
      for (const std::string& f : analysis.rank_reversal->universal_features)
        std::cout << "universal feature: " << f << "\n";
  }

  if (!opt.out_dir.empty()) {
    std::filesystem::create_directories(opt.out_dir);
    const std::filesystem::path dir(opt.out_dir);
    nlohmann::json j = report::analysis_to_json(analysis);
    j["schema"] = "mlselect.analysis.v1";
    util::write_file((dir / "analysis.json").string(), j.dump(2) + "\n");
    util::write_file((dir / "tables.txt").string(), table);
    if (analysis.rank_reversal)
      util::write_file((dir / "rank_reversal.dot").string(),
                       stats::to_dot(*analysis.rank_reversal, opt.alpha_levels));
    const std::string input = opt.pvals_path.empty() ? opt.episodes_path : opt.pvals_path;
    detail::write_manifest("analyze", {input}, ctx.args, 0, opt.out_dir,
                           (dir / "manifest.json").string());
  }
  return kExitOk;
}

inline std::unique_ptr<grid::Policy> resolve_policy(const std::string& name) {
  if (std::filesystem::exists(name)) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(util::read_file(name));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(name + ": " + e.what());
    }
    return std::make_unique<grid::LinearPolicyActor>(train::policy_from_json(j),
                                                     std::filesystem::path(name).stem().string());
  }
  return grid::make_baseline(name);
}

inline int cmd_simulate(const std::string& task_name, const std::string& map_path,
                        const std::string& policy_name, int episodes, std::uint64_t seed,
                        const std::string& out_path, const CommandContext& ctx) {
  if (episodes < 1) throw std::invalid_argument("--episodes must be >= 1");
  const grid::FloorPlan plan = grid::FloorPlan::load(map_path);
  const grid::TaskConfig config = grid::TaskConfig::defaults(grid::task_from_string(task_name));
  std::unique_ptr<grid::Policy> policy = resolve_policy(policy_name);

  std::vector<stats::EpisodeRecord> records;
  records.reserve(static_cast<std::size_t>(episodes));
  for (int e = 0; e < episodes; ++e) {
    grid::EpisodeOutput out =
        grid::run_episode(plan, config, *policy,
                          train::mix_seed(seed, 0x51e9ull, static_cast<std::uint64_t>(e)),
                          std::to_string(seed), e);
    records.push_back(std::move(out.record));
  }

  const bool fresh = !std::filesystem::exists(out_path);
  std::ofstream out(out_path, std::ios::app);
  if (!out) throw std::runtime_error(out_path + ": cannot open for writing");
  stats::episodes_to_csv(out, records, fresh);
  out.close();
  detail::write_manifest("simulate", {map_path}, ctx.args, seed, out_path,
                         out_path + ".manifest.json");
  double total = 0.0;
  for (const stats::EpisodeRecord& r : records) total += r.reward;
  std::cout << "wrote " << records.size() << " episodes to " << out_path
            << " (mean reward " << util::format_double(total / static_cast<double>(records.size()))
            << ")\n";
  return kExitOk;
}

inline int cmd_train(const std::string& task_name, const std::string& map_path,
                     const std::string& config_path,
                     const std::vector<std::string>& config_sets, int iterations,
                     std::uint64_t seed, int eval_episodes, const std::string& out_dir,
                     const CommandContext& ctx) {
  if (iterations < 0) throw std::invalid_argument("--iters must be >= 0");
  const grid::FloorPlan plan = grid::FloorPlan::load(map_path);
  const grid::TaskConfig task = grid::TaskConfig::defaults(grid::task_from_string(task_name));

  rl::TrainConfig config;
  if (!config_path.empty()) config = rl::TrainConfig::from_file(config_path);
  std::map<std::string, std::string> overrides;
  for (const std::string& kv : config_sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
    overrides[util::trim(kv.substr(0, eq))] = util::trim(kv.substr(eq + 1));
  }
  config.apply(overrides, "--set");

  const train::TrainResult result = train::train_policy(plan, task, config, iterations, seed);
  const double final_eval =
      train::evaluate_policy(plan, task, result.policy, eval_episodes, seed);

  std::filesystem::create_directories(out_dir);
  const std::filesystem::path dir(out_dir);
  util::write_file((dir / "policy.json").string(),
                   train::policy_to_json(result.policy, result.value_weights,
                                         grid::task_name(task.task)).dump(2) + "\n");

  std::ostringstream series_csv;
  series_csv << "iteration,train_mean,eval_mean\n";
  auto series_json = nlohmann::json::array();
  for (const train::SeriesPoint& p : result.series) {
    series_csv << p.iteration << ',' << util::format_double(p.train_mean) << ','
               << (p.eval_mean ? util::format_double(*p.eval_mean) : "") << "\n";
    nlohmann::json jp;
    jp["iteration"] = p.iteration;
    jp["train_mean"] = p.train_mean;
    if (p.eval_mean) jp["eval_mean"] = *p.eval_mean;
    series_json.push_back(std::move(jp));
  }
  util::write_file((dir / "series.csv").string(), series_csv.str());

  nlohmann::json summary;
  summary["schema"] = "mlselect.train_summary.v1";
  summary["task"] = grid::task_name(task.task);
  summary["iterations"] = iterations;
  summary["final_eval_mean"] = final_eval;
  summary["eval_episodes"] = eval_episodes;
  summary["series"] = std::move(series_json);
  util::write_file((dir / "summary.json").string(), summary.dump(2) + "\n");
  detail::write_manifest("train", {map_path, config_path}, ctx.args, seed, out_dir,
                         (dir / "manifest.json").string());
  std::cout << "trained " << iterations << " iterations; final eval mean "
            << util::format_double(final_eval) << " over " << eval_episodes << " episodes\n";
  return kExitOk;
}

inline int cmd_report(const std::string& in_path, const std::string& curves_path,
                      const std::string& out_dir, const CommandContext& ctx) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(util::read_file(in_path));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(in_path + ": " + e.what());
  }
  if (j.contains("schema") && j.at("schema").get<std::string>() != "mlselect.analysis.v1")
    throw ParseError(in_path + ": unsupported schema '" + j.at("schema").get<std::string>() +
                     "' (this tool reads mlselect.analysis.v1)");
  const report::Analysis analysis = report::analysis_from_json(j);

  std::vector<report::CurvePoint> curves;
  if (!curves_path.empty()) {
    nlohmann::json cj;
    try {
      cj = nlohmann::json::parse(util::read_file(curves_path));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(curves_path + ": " + e.what());
    }
    if (cj.contains("schema") && cj.at("schema").get<std::string>() != "mlselect.train_summary.v1")
      throw ParseError(curves_path + ": unsupported schema (expected mlselect.train_summary.v1)");
    for (const auto& p : cj.value("series", nlohmann::json::array())) {
      report::CurvePoint cp;
      cp.iteration = p.at("iteration").get<int>();
      cp.train = p.at("train_mean").get<double>();
      if (p.contains("eval_mean")) cp.eval = p.at("eval_mean").get<double>();
      curves.push_back(cp);
    }
  }

  std::filesystem::create_directories(out_dir);
  const std::filesystem::path dir(out_dir);
  util::write_file((dir / "reward_bars.svg").string(), report::render_reward_bars(analysis));
  util::write_file((dir / "curves.svg").string(), report::render_curves(curves));
  util::write_file((dir / "rank_reversal.svg").string(),
                   report::render_rank_reversal(analysis.rank_reversal, analysis.alpha_levels));
  detail::write_manifest("report", {in_path, curves_path}, ctx.args, 0, out_dir,
                         (dir / "manifest.json").string());
  std::cout << "wrote reward_bars.svg, curves.svg, rank_reversal.svg to " << out_dir << "\n";
  return kExitOk;
}

// ---- dispatch -------------------------------------------------------------

inline int run(std::vector<std::string> args) {
  CLI::App app{"max-coverage feature selection, evaluation statistics, and desk-scale simulation"};
  app.name("mlselect");
  app.require_subcommand(1);

  CommandContext ctx;
  ctx.args = args;

  // select
  std::string sel_affinities, sel_objective = "min_size", sel_out;
  int sel_k = 0;
  double sel_delta = -1.0;
  auto* sel = app.add_subcommand("select", "minimum covering feature set or best threshold under a budget");
  sel->add_option("--affinities", sel_affinities, "affinity matrix (CSV or JSON)")->required();
  auto* sel_k_opt = sel->add_option("--k", sel_k, "maximum set size; maximizes the threshold");
  auto* sel_d_opt = sel->add_option("--delta", sel_delta, "coverage threshold; minimizes the set size");
  sel->add_option("--objective", sel_objective, "min_size | max_perf (tie-break by total affinity)")
      ->check(CLI::IsMember({"min_size", "max_perf"}));
  sel->add_option("--out", sel_out, "write the solution JSON here");
  sel_k_opt->excludes(sel_d_opt);
  sel_d_opt->excludes(sel_k_opt);

  // transfer-select
  std::string ts_problem, ts_mode, ts_out;
  int ts_budget = 0;
  auto* ts = app.add_subcommand("transfer-select", "multi-source transfer selection");
  ts->add_option("--problem", ts_problem, "transfer problem JSON")->required();
  ts->add_option("--budget", ts_budget, "feature budget; searches the best threshold");
  ts->add_option("--mode", ts_mode, "min_size | max_performance")
      ->check(CLI::IsMember({"min_size", "max_performance", "max_perf"}));
  ts->add_option("--out", ts_out, "write the solution JSON here");

  // analyze
  AnalyzeOptions an;
  std::string an_alpha = "0.05,0.01,0.001";
  std::vector<std::string> an_rmin;
  auto* analyze = app.add_subcommand("analyze", "significance tables, relative rewards, rank reversal");
  auto* an_episodes = analyze->add_option("--episodes", an.episodes_path, "episode CSV");
  auto* an_pvals = analyze->add_option("--pvals", an.pvals_path, "label,p CSV (p-only mode)");
  analyze->add_option("--q", an.q, "FDR level")->capture_default_str();
  analyze->add_option("--baseline", an.baseline, "baseline condition name");
  analyze->add_option("--alpha", an_alpha, "descending alpha levels")->capture_default_str();
  analyze->add_option("--rmin", an_rmin, "per-task reward minimum override, task=value");
  analyze->add_option("--out", an.out_dir, "output directory");
  an_episodes->excludes(an_pvals);
  an_pvals->excludes(an_episodes);

  // simulate
  std::string sim_task, sim_map, sim_policy, sim_out = "episodes.csv";
  int sim_episodes = 100;
  std::uint64_t sim_seed = 0;
  auto* sim = app.add_subcommand("simulate", "batch episodes into the episode log format");
  sim->add_option("--task", sim_task, "nav | explore | plan")->required();
  sim->add_option("--map", sim_map, "floor plan (ASCII or JSON)")->required();
  sim->add_option("--policy", sim_policy, "random | blind | path to a policy JSON")->required();
  sim->add_option("--episodes", sim_episodes, "episode count")->capture_default_str();
  sim->add_option("--seed", sim_seed, "seed cluster id")->required();
  sim->add_option("--out", sim_out, "episode log (appends)")->capture_default_str();

  // train
  std::string tr_task, tr_map, tr_config, tr_out = "train_out";
  std::vector<std::string> tr_sets;
  int tr_iters = 200, tr_eval_episodes = 50;
  std::uint64_t tr_seed = 0;
  auto* tr = app.add_subcommand("train", "PPO with replay on the linear-softmax policy");
  tr->add_option("--task", tr_task, "nav | explore | plan")->required();
  tr->add_option("--map", tr_map, "floor plan")->required();
  tr->add_option("--config", tr_config, "key=value training config");
  tr->add_option("--set", tr_sets, "config override key=value (repeatable)");
  tr->add_option("--iters", tr_iters, "training iterations")->capture_default_str();
  tr->add_option("--seed", tr_seed, "training seed")->required();
  tr->add_option("--eval-episodes", tr_eval_episodes, "final evaluation episodes")
      ->capture_default_str();
  tr->add_option("--out", tr_out, "output directory")->capture_default_str();

  // report
  std::string rp_in, rp_curves, rp_out;
  auto* rp = app.add_subcommand("report", "render SVG figures from prior outputs");
  rp->add_option("--in", rp_in, "analysis JSON")->required();
  rp->add_option("--curves", rp_curves, "train summary JSON for curve overlays");
  rp->add_option("--out", rp_out, "output directory")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (sel->parsed()) {
      if (sel_k_opt->count() == 0 && sel_d_opt->count() == 0)
        throw CLI::RequiredError("select: one of --k or --delta");
      return cmd_select(sel_affinities, sel_k_opt->count() ? sel_k : 0,
                        sel_d_opt->count() ? sel_delta : -1.0, sel_objective, sel_out, ctx);
    }
    if (ts->parsed()) return cmd_transfer_select(ts_problem, ts_budget, ts_mode, ts_out, ctx);
    if (analyze->parsed()) {
      if (an.episodes_path.empty() && an.pvals_path.empty())
        throw CLI::RequiredError("analyze: one of --episodes or --pvals");
      if (!an.episodes_path.empty() && an.baseline.empty())
        throw CLI::RequiredError("analyze: --baseline");
      an.alpha_levels = detail::parse_alpha_list(an_alpha);
      for (const std::string& kv : an_rmin) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
          throw std::invalid_argument("--rmin expects task=value, got '" + kv + "'");
        an.rmin_overrides[util::trim(kv.substr(0, eq))] =
            util::parse_double(util::trim(kv.substr(eq + 1)), "--rmin", 0);
      }
      return cmd_analyze(an, ctx);
    }
    if (sim->parsed())
      return cmd_simulate(sim_task, sim_map, sim_policy, sim_episodes, sim_seed, sim_out, ctx);
    if (tr->parsed())
      return cmd_train(tr_task, tr_map, tr_config, tr_sets, tr_iters, tr_seed, tr_eval_episodes,
                       tr_out, ctx);
    if (rp->parsed()) return cmd_report(rp_in, rp_curves, rp_out, ctx);
  } catch (const CLI::RequiredError& e) {
    std::cerr << "mlselect: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParseError& e) {
    std::cerr << "mlselect: " << e.what() << "\n";
    return kExitParse;
  } catch (const std::invalid_argument& e) {
    std::cerr << "mlselect: " << e.what() << "\n";
    return kExitParse;
  } catch (const std::exception& e) {
    std::cerr << "mlselect: " << e.what() << "\n";
    return kExitInfeasible;
  }
  return kExitUsage;
}

inline int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(std::move(args));
}

}  // namespace mlselect::cli

#endif  // MLSELECT_CLI_HPP
