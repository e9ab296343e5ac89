#ifndef MLSELECT_STATS_HPP
#define MLSELECT_STATS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "mlselect/util.hpp"

namespace mlselect::stats {

/// One evaluation episode. (task, condition, seed, episode_index) is unique
/// within a dataset; seed identifies the training-seed cluster.
struct EpisodeRecord {
  std::string task;
  std::string condition;
  std::string seed;
  int episode_index = 0;
  double reward = 0.0;
};

inline constexpr const char* kEpisodeCsvHeader = "task,condition,seed,episode,reward";

inline std::vector<EpisodeRecord> episodes_from_csv(std::istream& in,
                                                    const std::string& path = "<episodes>") {
  std::string line;
  int lineno = 0;
  if (!std::getline(in, line)) throw ParseError(path + ":1: empty episode file");
  ++lineno;
  if (util::trim(line) != kEpisodeCsvHeader)
    throw ParseError(path + ":1: expected header '" + std::string(kEpisodeCsvHeader) + "'");
  std::vector<EpisodeRecord> out;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = util::trim(line);
    if (t.empty()) continue;
    const std::vector<std::string> cells = util::split(t, ',');
    if (cells.size() != 5)
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected 5 fields");
    EpisodeRecord r;
    r.task = util::trim(cells[0]);
    r.condition = util::trim(cells[1]);
    r.seed = util::trim(cells[2]);
    r.episode_index = static_cast<int>(util::parse_long(util::trim(cells[3]), path, lineno));
    r.reward = util::parse_double(util::trim(cells[4]), path, lineno);
    out.push_back(std::move(r));
  }
  return out;
}

inline void episodes_to_csv(std::ostream& out, const std::vector<EpisodeRecord>& records,
                            bool header = true) {
  if (header) out << kEpisodeCsvHeader << "\n";
  for (const EpisodeRecord& r : records)
    out << r.task << ',' << r.condition << ',' << r.seed << ',' << r.episode_index << ','
        << util::format_double(r.reward) << "\n";
}

namespace detail {

/// Midranks (1-based, ties averaged) of a sample.
inline std::vector<double> midranks(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

inline double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

}  // namespace detail

enum class Alternative { two_sided, greater, less };

struct MwResult {
  double u = 0.0;        // U statistic of the first sample
  double p_value = 1.0;
};

/// Mann-Whitney U (two-sample Wilcoxon rank-sum). Exact tie-aware null
/// distribution by dynamic programming when the combined size is at most 20;
/// normal approximation with midrank tie correction and continuity
/// correction beyond that.
inline MwResult mann_whitney_u(const std::vector<double>& xs, const std::vector<double>& ys,
                               Alternative alternative) {
  if (xs.empty() || ys.empty())
    throw std::invalid_argument("mann_whitney_u: samples must be nonempty");
  const std::size_t n1 = xs.size(), n2 = ys.size(), n = n1 + n2;

  std::vector<double> pooled;
  pooled.reserve(n);
  pooled.insert(pooled.end(), xs.begin(), xs.end());
  pooled.insert(pooled.end(), ys.begin(), ys.end());
  const std::vector<double> ranks = detail::midranks(pooled);

  double rank_sum_x = 0.0;
  for (std::size_t i = 0; i < n1; ++i) rank_sum_x += ranks[i];
  const double u = rank_sum_x - static_cast<double>(n1) * (static_cast<double>(n1) + 1.0) / 2.0;

  MwResult result;
  result.u = u;

  if (n <= 20) {
    // Doubled midranks are integers; count subsets of size n1 by scaled rank
    // sum. Counts stay below C(20,10), exact in doubles.
    std::vector<long> scaled(n);
    long total = 0;
    for (std::size_t i = 0; i < n; ++i) {
      scaled[i] = std::lround(2.0 * ranks[i]);
      total += scaled[i];
    }
    std::vector<std::vector<double>> dp(n1 + 1,
                                        std::vector<double>(static_cast<std::size_t>(total) + 1, 0.0));
    dp[0][0] = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      const long r = scaled[i];
      for (std::size_t k = std::min(i + 1, n1); k >= 1; --k)
        for (long s = total; s >= r; --s)
          dp[k][static_cast<std::size_t>(s)] += dp[k - 1][static_cast<std::size_t>(s - r)];
    }
    const long observed = std::lround(2.0 * rank_sum_x);
    double count_le = 0.0, count_ge = 0.0, count_all = 0.0;
    for (long s = 0; s <= total; ++s) {
      const double c = dp[n1][static_cast<std::size_t>(s)];
      count_all += c;
      if (s <= observed) count_le += c;
      if (s >= observed) count_ge += c;
    }
    const double p_le = count_le / count_all;
    const double p_ge = count_ge / count_all;
    switch (alternative) {
      case Alternative::greater: result.p_value = p_ge; break;
      case Alternative::less: result.p_value = p_le; break;
      case Alternative::two_sided: result.p_value = std::min(1.0, 2.0 * std::min(p_le, p_ge)); break;
    }
    return result;
  }

  const double mu = static_cast<double>(n1) * static_cast<double>(n2) / 2.0;
  std::map<double, long> tie_groups;
  for (double v : pooled) ++tie_groups[v];
  double tie_term = 0.0;
  for (const auto& [value, t] : tie_groups) {
    (void)value;
    tie_term += static_cast<double>(t) * static_cast<double>(t) * static_cast<double>(t) -
                static_cast<double>(t);
  }
  const double nn = static_cast<double>(n);
  const double variance = static_cast<double>(n1) * static_cast<double>(n2) / 12.0 *
                          ((nn + 1.0) - tie_term / (nn * (nn - 1.0)));
  if (variance <= 0.0) {  // every observation tied
    result.p_value = 1.0;
    return result;
  }
  const double sd = std::sqrt(variance);
  const double p_greater = detail::normal_sf((u - mu - 0.5) / sd);
  const double p_less = detail::normal_sf((mu - u - 0.5) / sd);
  switch (alternative) {
    case Alternative::greater: result.p_value = p_greater; break;
    case Alternative::less: result.p_value = p_less; break;
    case Alternative::two_sided:
      result.p_value = std::min(1.0, 2.0 * std::min(p_greater, p_less));
      break;
  }
  return result;
}

struct Hypothesis {
  std::string label;
  double statistic = 0.0;
  double p_value = 0.0;
};

struct HypothesisResult {
  std::string label;
  double statistic = 0.0;
  double p_value = 0.0;
  double bh_threshold = 0.0;  // Q * i / m at this hypothesis' ascending rank
  bool rejected = false;
};

/// Benjamini-Hochberg step-up at FDR level Q. Results come back sorted by
/// ascending p-value; the rejection set is a prefix.
inline std::vector<HypothesisResult> bh_fdr(const std::vector<Hypothesis>& hypotheses, double q) {
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("bh_fdr: Q must lie in (0, 1)");
  for (const Hypothesis& h : hypotheses)
    if (!(h.p_value >= 0.0 && h.p_value <= 1.0))
      throw std::invalid_argument("bh_fdr: p-values must lie in [0, 1]");

  const std::size_t m = hypotheses.size();
  std::vector<std::size_t> order(m);
  for (std::size_t i = 0; i < m; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return hypotheses[a].p_value < hypotheses[b].p_value;
  });

  std::size_t pivot = 0;  // 1-based rank of the last rejected hypothesis
  for (std::size_t i = 1; i <= m; ++i) {
    const double threshold = q * static_cast<double>(i) / static_cast<double>(m);
    if (hypotheses[order[i - 1]].p_value <= threshold) pivot = i;
  }

  std::vector<HypothesisResult> results;
  results.reserve(m);
  for (std::size_t i = 1; i <= m; ++i) {
    const Hypothesis& h = hypotheses[order[i - 1]];
    HypothesisResult r;
    r.label = h.label;
    r.statistic = h.statistic;
    r.p_value = h.p_value;
    r.bh_threshold = q * static_cast<double>(i) / static_cast<double>(m);
    r.rejected = i <= pivot;
    results.push_back(std::move(r));
  }
  return results;
}

/// Spearman's rho: Pearson correlation of midranks.
inline double spearman_rho(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) throw std::invalid_argument("spearman_rho: length mismatch");
  if (xs.size() < 2) throw std::invalid_argument("spearman_rho: need at least 2 pairs");
  const std::vector<double> rx = detail::midranks(xs);
  const std::vector<double> ry = detail::midranks(ys);
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) { mx += rx[i]; my += ry[i]; }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0)
    throw std::invalid_argument("spearman_rho: undefined for constant input");
  return sxy / std::sqrt(sxx * syy);
}

/// Reward relative to blind: (r_treatment - r_min) / (r_blind - r_min).
/// A blind agent scores 1 by construction.
inline double relative_reward(double r_treatment, double r_blind, double r_min) {
  if (r_blind == r_min)
    throw std::invalid_argument("relative_reward: r_blind must differ from r_min");
  return (r_treatment - r_min) / (r_blind - r_min);
}

/// Per-(task, condition, seed) mean episode reward. Downstream tests treat
/// seed clusters as independent units.
struct ClusterMean {
  std::string task;
  std::string condition;
  std::string seed;
  double mean_reward = 0.0;
  int episode_count = 0;
};

inline std::vector<ClusterMean> cluster_reduce(const std::vector<EpisodeRecord>& records) {
  if (records.empty()) throw std::invalid_argument("cluster_reduce: dataset must be nonempty");
  std::set<std::tuple<std::string, std::string, std::string, int>> seen;
  std::map<std::tuple<std::string, std::string, std::string>, std::pair<double, int>> groups;
  for (const EpisodeRecord& r : records) {
    if (!seen.insert({r.task, r.condition, r.seed, r.episode_index}).second)
      throw std::invalid_argument("cluster_reduce: duplicate (task, condition, seed, episode)");
    auto& [sum, count] = groups[{r.task, r.condition, r.seed}];
    sum += r.reward;
    count += 1;
  }
  std::vector<ClusterMean> out;
  out.reserve(groups.size());
  for (const auto& [key, agg] : groups) {
    ClusterMean c;
    c.task = std::get<0>(key);
    c.condition = std::get<1>(key);
    c.seed = std::get<2>(key);
    c.mean_reward = agg.first / static_cast<double>(agg.second);
    c.episode_count = agg.second;
    out.push_back(std::move(c));
  }
  return out;
}

/// Pairwise significance graph per task. An edge points from the loser to
/// the winner, tagged with the smallest alpha level the one-sided rank-sum
/// test passes. Heavier (smaller alpha) edges are more significant.
struct RankEdge {
  std::string task;
  std::string winner;
  std::string loser;
  double alpha = 0.0;
  double p_value = 0.0;
};

struct ReversalPair {
  std::string condition_a;  // wins on task_a
  std::string condition_b;  // wins on task_b
  std::string task_a;
  std::string task_b;
};

struct RankReversalGraph {
  std::vector<std::string> tasks;
  std::vector<std::string> conditions;
  std::vector<RankEdge> edges;
  std::vector<ReversalPair> reversals;
  std::vector<std::string> universal_features;
  std::vector<std::string> warnings;
};

inline RankReversalGraph rank_reversal_graph(const std::vector<ClusterMean>& seed_rewards,
                                             const std::vector<double>& alpha_levels) {
  if (alpha_levels.empty()) throw std::invalid_argument("rank_reversal_graph: need alpha levels");
  for (std::size_t i = 0; i < alpha_levels.size(); ++i) {
    if (!(alpha_levels[i] > 0.0 && alpha_levels[i] < 0.5))
      throw std::invalid_argument("rank_reversal_graph: alpha levels must lie in (0, 0.5)");
    if (i > 0 && alpha_levels[i] >= alpha_levels[i - 1])
      throw std::invalid_argument("rank_reversal_graph: alpha levels must be strictly descending");
  }

  std::map<std::string, std::map<std::string, std::vector<double>>> by_task;
  for (const ClusterMean& c : seed_rewards) by_task[c.task][c.condition].push_back(c.mean_reward);

  RankReversalGraph g;
  std::set<std::string> all_conditions;
  for (auto& [task, conds] : by_task) {
    g.tasks.push_back(task);
    for (auto it = conds.begin(); it != conds.end();) {
      if (it->second.size() < 2) {
        g.warnings.push_back("task '" + task + "': condition '" + it->first +
                             "' excluded (fewer than 2 seeds)");
        it = conds.erase(it);
      } else {
        all_conditions.insert(it->first);
        ++it;
      }
    }
  }
  g.conditions.assign(all_conditions.begin(), all_conditions.end());
  // A single task is allowed and yields an empty reversal set.
  if (g.conditions.size() < 2 || g.tasks.empty())
    throw std::invalid_argument("rank_reversal_graph: need at least 2 conditions and 1 task");

  const auto smallest_alpha_passed = [&](double p) -> std::optional<double> {
    std::optional<double> best;
    for (double a : alpha_levels)
      if (p <= a) best = a;
    return best;
  };

  // winners[task][{a,b}] = winner of the pair on this task, if significant
  std::map<std::string, std::map<std::pair<std::string, std::string>, std::string>> winners;
  for (const auto& [task, conds] : by_task) {
    for (auto ia = conds.begin(); ia != conds.end(); ++ia) {
      for (auto ib = std::next(ia); ib != conds.end(); ++ib) {
        const MwResult a_gt_b = mann_whitney_u(ia->second, ib->second, Alternative::greater);
        const MwResult b_gt_a = mann_whitney_u(ib->second, ia->second, Alternative::greater);
        const auto alpha_a = smallest_alpha_passed(a_gt_b.p_value);
        const auto alpha_b = smallest_alpha_passed(b_gt_a.p_value);
        // One-sided p-values of opposite directions sum to more than 1, so at
        // most one of these can pass any alpha below 0.5.
        if (alpha_a) {
          g.edges.push_back({task, ia->first, ib->first, *alpha_a, a_gt_b.p_value});
          winners[task][{ia->first, ib->first}] = ia->first;
        } else if (alpha_b) {
          g.edges.push_back({task, ib->first, ia->first, *alpha_b, b_gt_a.p_value});
          winners[task][{ia->first, ib->first}] = ib->first;
        }
      }
    }
  }

  // Rank reversal: a condition pair whose winner flips between two tasks.
  std::set<std::pair<std::string, std::string>> reported;
  for (auto it = winners.begin(); it != winners.end(); ++it) {
    for (auto jt = std::next(it); jt != winners.end(); ++jt) {
      for (const auto& [pair, winner_i] : it->second) {
        const auto other = jt->second.find(pair);
        if (other == jt->second.end() || other->second == winner_i) continue;
        if (!reported.insert(pair).second) continue;
        g.reversals.push_back({winner_i, other->second, it->first, jt->first});
      }
    }
  }

  // Universal feature: all incoming edges from every rival on every task.
  for (const std::string& v : g.conditions) {
    bool universal = true;
    for (const auto& [task, conds] : by_task) {
      if (!conds.count(v)) { universal = false; break; }
      for (const auto& [u, rewards] : conds) {
        (void)rewards;
        if (u == v) continue;
        const auto key = u < v ? std::make_pair(u, v) : std::make_pair(v, u);
        const auto w = winners[task].find(key);
        if (w == winners[task].end() || w->second != v) { universal = false; break; }
      }
      if (!universal) break;
    }
    if (universal) g.universal_features.push_back(v);
  }
  return g;
}

/// DOT rendering; penwidth grows as alpha shrinks.
inline std::string to_dot(const RankReversalGraph& g,
                          const std::vector<double>& alpha_levels) {
  std::ostringstream out;
  out << "digraph rank_reversal {\n";
  out << "  rankdir=LR;\n";
  for (const std::string& c : g.conditions) out << "  \"" << c << "\";\n";
  for (const RankEdge& e : g.edges) {
    double width = 1.0;
    for (std::size_t i = 0; i < alpha_levels.size(); ++i)
      if (e.alpha == alpha_levels[i]) width = 1.0 + static_cast<double>(i);
    out << "  \"" << e.loser << "\" -> \"" << e.winner << "\" [label=\"" << e.task
        << " a=" << util::format_double(e.alpha) << "\", penwidth=" << util::format_double(width)
        << "];\n";
  }
  out << "}\n";
  return out.str();
}

}  // namespace mlselect::stats

#endif  // MLSELECT_STATS_HPP
