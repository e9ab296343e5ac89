#ifndef MLSELECT_TESTING_ORACLES_HPP
#define MLSELECT_TESTING_ORACLES_HPP

// Exhaustive reference implementations used by the test suites. Everything
// here enumerates the full search space and must stay independent of the
// production solvers it cross-checks.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "mlselect/bip.hpp"
#include "mlselect/cover.hpp"
#include "mlselect/transfer.hpp"

namespace mlselect::testing {

/// Reference BIP solver: tries all 2^n assignments. Refuses n > 20.
inline bip::BipSolution enumerate_optima_oracle(const bip::BooleanProgram& program) {
  program.validate();
  if (program.num_vars > 20)
    throw std::invalid_argument("enumerate_optima_oracle is test-only; num_vars must be <= 20");

  const int n = program.num_vars;
  bip::BipSolution best;
  bool have_best = false;
  std::vector<std::uint8_t> x(static_cast<std::size_t>(n), 0);
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    for (int i = 0; i < n; ++i) x[static_cast<std::size_t>(i)] = (mask >> i) & 1u;
    bool ok = true;
    for (const bip::LinearConstraint& c : program.constraints) {
      bip::Rational lhs = 0;
      for (const bip::Term& t : c.terms)
        if (x[static_cast<std::size_t>(t.var)]) lhs += t.coeff;
      if (c.rel == bip::Relation::le && lhs > c.rhs) ok = false;
      if (c.rel == bip::Relation::ge && lhs < c.rhs) ok = false;
      if (c.rel == bip::Relation::eq && lhs != c.rhs) ok = false;
      if (!ok) break;
    }
    if (!ok) continue;
    bip::Rational value = 0;
    for (int i = 0; i < n; ++i)
      if (x[static_cast<std::size_t>(i)]) value += program.objective[static_cast<std::size_t>(i)];
    const bool better = !have_best ||
                        (program.sense == bip::Sense::minimize ? value < best.objective_value
                                                               : value > best.objective_value);
    if (better) {
      best.status = bip::SolveStatus::optimal;
      best.assignment = x;
      best.objective_value = value;
      have_best = true;
    }
  }
  if (!have_best) {
    best.status = bip::SolveStatus::infeasible;
    best.assignment.clear();
    best.objective_value = 0;
  }
  return best;
}

// Local recomputation of worst-case coverage, kept separate from
// cover::perceptual_risk on purpose.
inline double subset_risk(const cover::AffinityMatrix& A, std::uint32_t mask) {
  const std::size_t m = A.size();
  double worst = 2.0;
  for (std::size_t j = 0; j < m; ++j) {
    double best = -1.0;
    for (std::size_t i = 0; i < m; ++i)
      if ((mask >> i) & 1u) best = std::max(best, A.values[i][j]);
    worst = std::min(worst, best);
  }
  return worst;
}

struct CoverOracleResult {
  double best_delta = 0.0;
  int min_size_at_delta = 0;
};

/// Best achievable threshold with at most k features, plus the smallest set
/// size attaining it, by enumerating every nonempty subset. m must be <= 20.
inline CoverOracleResult cover_exhaustive(const cover::AffinityMatrix& A, int k) {
  const int m = static_cast<int>(A.size());
  if (m <= 0 || m > 20) throw std::invalid_argument("cover_exhaustive: m must be in [1, 20]");
  if (k < 1) throw std::invalid_argument("cover_exhaustive: k must be >= 1");
  CoverOracleResult r{-1.0, m + 1};
  for (std::uint32_t mask = 1; mask < (1u << m); ++mask) {
    const int size = __builtin_popcount(mask);
    if (size > k) continue;
    const double risk = subset_risk(A, mask);
    if (risk > r.best_delta) {
      r.best_delta = risk;
      r.min_size_at_delta = size;
    } else if (risk == r.best_delta) {
      r.min_size_at_delta = std::min(r.min_size_at_delta, size);
    }
  }
  return r;
}

/// Smallest subset with worst-case coverage >= delta, or nullopt.
inline std::optional<int> min_cover_size_exhaustive(const cover::AffinityMatrix& A, double delta) {
  const int m = static_cast<int>(A.size());
  if (m <= 0 || m > 20) throw std::invalid_argument("min_cover_size_exhaustive: m must be in [1, 20]");
  std::optional<int> best;
  for (std::uint32_t mask = 1; mask < (1u << m); ++mask) {
    if (subset_risk(A, mask) >= delta) {
      const int size = __builtin_popcount(mask);
      if (!best || size < *best) best = size;
    }
  }
  return best;
}

struct TransferOracleResult {
  bool feasible = false;
  bip::Rational best_objective = 0;
};

/// Enumerates every edge subset satisfying the one-transfer-per-target and
/// source-closure structure (sources implied by the chosen edges) after
/// delta-filtering. Optional budget caps the implied active-feature count.
inline TransferOracleResult transfer_exhaustive(const transfer::TransferProblem& problem,
                                                std::optional<int> budget = std::nullopt) {
  std::vector<int> kept;
  for (std::size_t i = 0; i < problem.edges.size(); ++i) {
    const transfer::TransferEdge& e = problem.edges[i];
    bool is_target = false;
    for (const std::string& t : problem.targets) is_target |= (t == e.target);
    if (e.performance >= problem.delta && is_target) kept.push_back(static_cast<int>(i));
  }
  const int ne = static_cast<int>(kept.size());
  if (ne > 20) throw std::invalid_argument("transfer_exhaustive: too many edges for enumeration");

  TransferOracleResult result;
  for (std::uint32_t mask = 0; mask < (1u << ne); ++mask) {
    std::map<std::string, int> per_target;
    for (const std::string& t : problem.targets) per_target[t] = 0;
    std::set<std::string> active;
    bip::Rational perf = 0;
    for (int b = 0; b < ne; ++b) {
      if (!((mask >> b) & 1u)) continue;
      const transfer::TransferEdge& e = problem.edges[static_cast<std::size_t>(kept[static_cast<std::size_t>(b)])];
      per_target[e.target] += 1;
      for (const std::string& s : e.sources) active.insert(s);
      perf += bip::to_rational(problem.importance_of(e.target)) * bip::to_rational(e.performance);
    }
    bool ok = true;
    for (const std::string& t : problem.targets)
      if (per_target[t] != 1) { ok = false; break; }
    if (!ok) continue;
    if (budget && static_cast<int>(active.size()) > *budget) continue;

    const bip::Rational value = problem.objective_mode == transfer::ObjectiveMode::min_size
                                    ? bip::Rational(static_cast<int>(active.size()))
                                    : perf;
    const bool better =
        !result.feasible ||
        (problem.objective_mode == transfer::ObjectiveMode::min_size ? value < result.best_objective
                                                                     : value > result.best_objective);
    if (better) {
      result.feasible = true;
      result.best_objective = value;
    }
  }
  return result;
}

}  // namespace mlselect::testing

#endif  // MLSELECT_TESTING_ORACLES_HPP
