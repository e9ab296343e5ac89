#ifndef MLSELECT_TRANSFER_HPP
#define MLSELECT_TRANSFER_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mlselect/bip.hpp"
#include "mlselect/cover.hpp"
#include "mlselect/util.hpp"

namespace mlselect::transfer {

/// A candidate transfer: one or more source features feeding a target, with
/// a transfer performance in [0, 1]. A self-edge ({t}, t) encodes keeping
/// the feature itself.
struct TransferEdge {
  std::vector<std::string> sources;
  std::string target;
  double performance = 0.0;
};

enum class ObjectiveMode { min_size, max_performance };

struct TransferProblem {
  std::vector<std::string> features;              // full dictionary, sources may live here only
  std::vector<std::string> targets;               // subset that must be covered
  std::map<std::string, double> target_importance;  // r_j, defaults to 1
  std::vector<TransferEdge> edges;
  double delta = 0.0;
  ObjectiveMode objective_mode = ObjectiveMode::max_performance;

  double importance_of(const std::string& target) const {
    const auto it = target_importance.find(target);
    return it == target_importance.end() ? 1.0 : it->second;
  }

  int feature_index(const std::string& name) const {
    for (std::size_t i = 0; i < features.size(); ++i)
      if (features[i] == name) return static_cast<int>(i);
    return -1;
  }

  void validate() const {
    std::set<std::string> known(features.begin(), features.end());
    if (known.size() != features.size())
      throw std::invalid_argument("duplicate feature identifiers");
    for (const std::string& t : targets)
      if (!known.count(t)) throw std::invalid_argument("unknown target '" + t + "'");
    for (const auto& [t, r] : target_importance) {
      if (!known.count(t)) throw std::invalid_argument("importance for unknown feature '" + t + "'");
      if (!(r > 0.0)) throw std::invalid_argument("target importance must be positive");
    }
    for (const TransferEdge& e : edges) {
      if (e.sources.empty()) throw std::invalid_argument("edge sources must be nonempty");
      if (!known.count(e.target)) throw std::invalid_argument("edge target '" + e.target + "' unknown");
      for (const std::string& s : e.sources)
        if (!known.count(s)) throw std::invalid_argument("edge source '" + s + "' unknown");
      if (!std::isfinite(e.performance) || e.performance < 0.0 || e.performance > 1.0)
        throw std::invalid_argument("edge performance must lie in [0, 1]");
    }
    if (!(delta >= 0.0 && delta <= 1.0)) throw std::invalid_argument("delta must lie in [0, 1]");
  }

  static ObjectiveMode mode_from_string(const std::string& s) {
    if (s == "min_size") return ObjectiveMode::min_size;
    if (s == "max_performance" || s == "max_perf") return ObjectiveMode::max_performance;
    throw std::invalid_argument("unknown objective mode '" + s + "'");
  }

  // {features, targets, importances, edges:[{sources, target, p}], delta, mode}
  static TransferProblem from_json(const nlohmann::json& j) {
    TransferProblem p;
    for (const auto& f : j.at("features")) p.features.push_back(f.get<std::string>());
    for (const auto& t : j.at("targets")) p.targets.push_back(t.get<std::string>());
    if (j.contains("importances"))
      for (const auto& [k, v] : j.at("importances").items())
        p.target_importance[k] = v.get<double>();
    for (const auto& je : j.at("edges")) {
      TransferEdge e;
      for (const auto& s : je.at("sources")) e.sources.push_back(s.get<std::string>());
      e.target = je.at("target").get<std::string>();
      e.performance = je.at("p").get<double>();
      p.edges.push_back(std::move(e));
    }
    p.delta = j.value("delta", 0.0);
    p.objective_mode = mode_from_string(j.value("mode", std::string("max_performance")));
    p.validate();
    return p;
  }

  static TransferProblem load(const std::string& path) {
    try {
      return from_json(nlohmann::json::parse(util::read_file(path)));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path + ": " + e.what());
    }
  }
};

struct TransferSolution {
  bip::SolveStatus status = bip::SolveStatus::infeasible;
  std::vector<int> chosen_edges;             // indices into the problem's edge list
  std::vector<std::string> active_features;  // sorted by dictionary order
  bip::Rational objective_value = 0;
  double achieved_delta = 0.0;               // min performance among chosen edges

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["status"] = status == bip::SolveStatus::optimal ? "optimal" : "infeasible";
    j["chosen_edges"] = chosen_edges;
    j["active_features"] = active_features;
    j["objective_value"] = bip::to_double(objective_value);
    j["achieved_delta"] = achieved_delta;
    return j;
  }
};

/// Drops edges below the performance threshold. The wording in the source
/// material inverts the inequality while calling higher values better; edges
/// with performance >= delta are the ones kept.
inline TransferProblem filter_edges(const TransferProblem& problem) {
  problem.validate();
  TransferProblem out = problem;
  out.edges.clear();
  for (const TransferEdge& e : problem.edges)
    if (e.performance >= problem.delta) out.edges.push_back(e);
  return out;
}

/// Variable layout: [0, |E|) edge selectors, [|E|, |E|+|F|) feature
/// selectors over the full dictionary. Rows:
///   per edge i:    |sources(i)| * x_i - sum_{s in sources(i)} x_{|E|+s} <= 0
///   per target j:  sum_{target(i)=j} x_i >= 1   and   <= 1
/// Edges into non-target features are pinned to 0.
inline bip::BooleanProgram build_transfer_program(const TransferProblem& problem) {
  problem.validate();
  const int ne = static_cast<int>(problem.edges.size());
  const int nf = static_cast<int>(problem.features.size());
  const std::set<std::string> target_set(problem.targets.begin(), problem.targets.end());

  bip::BooleanProgram p;
  p.num_vars = ne + nf;
  p.objective.assign(static_cast<std::size_t>(p.num_vars), bip::Rational(0));
  if (problem.objective_mode == ObjectiveMode::min_size) {
    p.sense = bip::Sense::minimize;
    for (int f = 0; f < nf; ++f) p.objective[static_cast<std::size_t>(ne + f)] = 1;
  } else {
    p.sense = bip::Sense::maximize;
    for (int i = 0; i < ne; ++i) {
      const TransferEdge& e = problem.edges[static_cast<std::size_t>(i)];
      p.objective[static_cast<std::size_t>(i)] =
          bip::to_rational(problem.importance_of(e.target)) * bip::to_rational(e.performance);
    }
  }

  for (int i = 0; i < ne; ++i) {
    const TransferEdge& e = problem.edges[static_cast<std::size_t>(i)];
    if (!target_set.count(e.target)) {
      bip::LinearConstraint pin;
      pin.terms.push_back({i, bip::Rational(1)});
      pin.rel = bip::Relation::le;
      pin.rhs = 0;
      p.constraints.push_back(std::move(pin));
      continue;
    }
    // source closure
    const std::set<std::string> uniq(e.sources.begin(), e.sources.end());
    bip::LinearConstraint c;
    c.terms.push_back({i, bip::Rational(static_cast<int>(uniq.size()))});
    for (const std::string& s : uniq)
      c.terms.push_back({ne + problem.feature_index(s), bip::Rational(-1)});
    c.rel = bip::Relation::le;
    c.rhs = 0;
    p.constraints.push_back(std::move(c));
  }

  for (const std::string& t : problem.targets) {
    bip::LinearConstraint lower, upper;
    for (int i = 0; i < ne; ++i) {
      if (problem.edges[static_cast<std::size_t>(i)].target == t) {
        lower.terms.push_back({i, bip::Rational(1)});
        upper.terms.push_back({i, bip::Rational(1)});
      }
    }
    lower.rel = bip::Relation::ge;
    lower.rhs = 1;
    upper.rel = bip::Relation::le;
    upper.rhs = 1;
    p.constraints.push_back(std::move(lower));
    p.constraints.push_back(std::move(upper));
  }
  return p;
}

namespace detail {

// Solve a filtered problem, optionally capping the active-feature count, and
// decode against the caller's original edge indices.
inline TransferSolution solve_filtered(const TransferProblem& filtered,
                                       const std::vector<int>& original_index,
                                       std::optional<int> budget) {
  bip::BooleanProgram program = build_transfer_program(filtered);
  if (budget) {
    bip::LinearConstraint cap;
    const int ne = static_cast<int>(filtered.edges.size());
    for (std::size_t f = 0; f < filtered.features.size(); ++f)
      cap.terms.push_back({ne + static_cast<int>(f), bip::Rational(1)});
    cap.rel = bip::Relation::le;
    cap.rhs = *budget;
    program.constraints.push_back(std::move(cap));
  }

  TransferSolution sol;
  const bip::BipSolution bip_sol = bip::solve_bip(program);
  if (bip_sol.status != bip::SolveStatus::optimal) return sol;

  std::set<std::string> active;
  std::map<std::string, int> per_target;
  double min_perf = 1.0;
  for (std::size_t i = 0; i < filtered.edges.size(); ++i) {
    if (!bip_sol.assignment[i]) continue;
    const TransferEdge& e = filtered.edges[i];
    sol.chosen_edges.push_back(original_index[i]);
    min_perf = std::min(min_perf, e.performance);
    for (const std::string& s : e.sources) active.insert(s);
    ++per_target[e.target];
  }
  sol.active_features.assign(active.begin(), active.end());
  std::sort(sol.active_features.begin(), sol.active_features.end(),
            [&](const std::string& a, const std::string& b) {
              return filtered.feature_index(a) < filtered.feature_index(b);
            });

  // Structural invariants, re-checked on every decode.
  for (const std::string& t : filtered.targets)
    if (per_target[t] != 1)
      throw std::logic_error("transfer solution violates one-transfer-per-target");

  sol.status = bip::SolveStatus::optimal;
  sol.objective_value = bip_sol.objective_value;
  sol.achieved_delta = sol.chosen_edges.empty() ? 0.0 : min_perf;
  return sol;
}

}  // namespace detail

/// Filter, build, solve, decode. Chosen-edge indices refer to the input
/// problem's edge list.
inline TransferSolution solve_transfer(const TransferProblem& problem,
                                       std::optional<int> budget = std::nullopt) {
  problem.validate();
  TransferProblem filtered = problem;
  filtered.edges.clear();
  std::vector<int> original_index;
  for (std::size_t i = 0; i < problem.edges.size(); ++i) {
    if (problem.edges[i].performance >= problem.delta) {
      filtered.edges.push_back(problem.edges[i]);
      original_index.push_back(static_cast<int>(i));
    }
  }
  return detail::solve_filtered(filtered, original_index, budget);
}

/// Single-source transfer problem over an affinity matrix: one edge per
/// (source, target) pair with p taken from the matrix. Self-edges come from
/// the diagonal, so keeping a feature is representable as the transfer
/// ({t}, t) with its self-affinity. With min_size mode this reduces to the
/// plain covering program.
inline TransferProblem problem_from_affinity(const cover::AffinityMatrix& A,
                                             std::vector<std::string> targets, double delta,
                                             ObjectiveMode mode) {
  A.validate();
  TransferProblem p;
  p.features = A.feature_names;
  p.targets = targets.empty() ? A.feature_names : std::move(targets);
  p.delta = delta;
  p.objective_mode = mode;
  for (const std::string& t : p.targets) {
    const int j = A.index_of(t);
    if (j < 0) throw std::invalid_argument("target '" + t + "' not in the affinity matrix");
    for (std::size_t i = 0; i < A.size(); ++i)
      p.edges.push_back({{A.feature_names[i]},
                         t,
                         A.values[i][static_cast<std::size_t>(j)]});
  }
  p.validate();
  return p;
}

/// Largest delta that still admits a feasible selection with at most
/// max_set_size active features: binary search over the distinct edge
/// performances.
inline TransferSolution min_delta_schedule(const TransferProblem& problem, int max_set_size) {
  if (max_set_size < 1) throw std::invalid_argument("max_set_size must be >= 1");
  problem.validate();

  std::set<double> perf_set;
  for (const TransferEdge& e : problem.edges) perf_set.insert(e.performance);
  const std::vector<double> candidates(perf_set.begin(), perf_set.end());
  if (candidates.empty()) return TransferSolution{};

  const auto probe = [&](double delta) -> TransferSolution {
    TransferProblem trial = problem;
    trial.delta = delta;
    return solve_transfer(trial, max_set_size);
  };

  // Feasibility is monotone decreasing in delta.
  std::size_t lo = 0, hi = candidates.size() - 1;
  std::optional<TransferSolution> best;
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo + 1) / 2;
    TransferSolution s = probe(candidates[mid]);
    if (s.status == bip::SolveStatus::optimal) {
      best = std::move(s);
      lo = mid;
    } else {
      hi = mid - 1;
    }
  }
  if (!best) {
    TransferSolution s = probe(candidates[lo]);
    if (s.status == bip::SolveStatus::optimal) best = std::move(s);
  }
  return best ? *best : TransferSolution{};
}

}  // namespace mlselect::transfer

#endif  // MLSELECT_TRANSFER_HPP
