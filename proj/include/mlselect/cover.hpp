#ifndef MLSELECT_COVER_HPP
#define MLSELECT_COVER_HPP

#include <algorithm>
#include <cmath>
#include <istream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mlselect/bip.hpp"
#include "mlselect/util.hpp"

namespace mlselect::cover {

/// Transfer affinities between features. values[i][j] is how well feature i
/// covers target feature j; higher is better, coverage at threshold delta
/// means affinity >= delta.
struct AffinityMatrix {
  std::vector<std::string> feature_names;
  std::vector<std::vector<double>> values;

  std::size_t size() const { return feature_names.size(); }

  void validate() const {
    const std::size_t m = feature_names.size();
    if (values.size() != m) throw std::invalid_argument("affinity matrix must be square");
    std::set<std::string> seen;
    for (const std::string& n : feature_names)
      if (!seen.insert(n).second)
        throw std::invalid_argument("duplicate feature name '" + n + "'");
    for (std::size_t i = 0; i < m; ++i) {
      if (values[i].size() != m) throw std::invalid_argument("affinity matrix must be square");
      for (std::size_t j = 0; j < m; ++j) {
        const double v = values[i][j];
        if (!std::isfinite(v) || v < 0.0 || v > 1.0)
          throw std::invalid_argument("affinity values must lie in [0, 1]");
      }
    }
    // A feature should cover itself at least as well as anything else covers
    // it. Data from upstream pipelines occasionally violates this; warn only.
    for (std::size_t j = 0; j < m; ++j) {
      double col_max = 0.0;
      for (std::size_t i = 0; i < m; ++i) col_max = std::max(col_max, values[i][j]);
      if (values[j][j] < col_max)
        util::log_info("affinity: self-affinity of '" + feature_names[j] +
                       "' is below its column maximum");
    }
  }

  int index_of(const std::string& name) const {
    for (std::size_t i = 0; i < feature_names.size(); ++i)
      if (feature_names[i] == name) return static_cast<int>(i);
    return -1;
  }

  // Delimited format: header "source,<t1>,...,<tm>", then one row per source.
  static AffinityMatrix from_csv(std::istream& in, const std::string& path = "<affinities>") {
    AffinityMatrix A;
    std::string line;
    int lineno = 0;
    if (!std::getline(in, line)) throw ParseError(path + ":1: empty affinity file");
    ++lineno;
    std::vector<std::string> header = util::split(util::trim(line), ',');
    if (header.empty() || util::trim(header[0]) != "source")
      throw ParseError(path + ":1: header must start with 'source'");
    for (std::size_t i = 1; i < header.size(); ++i)
      A.feature_names.push_back(util::trim(header[i]));
    const std::size_t m = A.feature_names.size();

    std::size_t row = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const std::string t = util::trim(line);
      if (t.empty()) continue;
      std::vector<std::string> cells = util::split(t, ',');
      if (cells.size() != m + 1)
        throw ParseError(path + ":" + std::to_string(lineno) + ": expected " +
                         std::to_string(m + 1) + " cells, got " + std::to_string(cells.size()));
      if (row >= m)
        throw ParseError(path + ":" + std::to_string(lineno) + ": more rows than features");
      if (util::trim(cells[0]) != A.feature_names[row])
        throw ParseError(path + ":" + std::to_string(lineno) + ": row order must match header (saw '" +
                         util::trim(cells[0]) + "', expected '" + A.feature_names[row] + "')");
      std::vector<double> vals;
      for (std::size_t j = 1; j < cells.size(); ++j)
        vals.push_back(util::parse_double(util::trim(cells[j]), path, lineno));
      A.values.push_back(std::move(vals));
      ++row;
    }
    if (row != m)
      throw ParseError(path + ": expected " + std::to_string(m) + " data rows, got " +
                       std::to_string(row));
    A.validate();
    return A;
  }

  // {"features": [...], "values": [[...], ...]}
  static AffinityMatrix from_json(const nlohmann::json& j) {
    AffinityMatrix A;
    for (const auto& n : j.at("features")) A.feature_names.push_back(n.get<std::string>());
    for (const auto& row : j.at("values")) {
      std::vector<double> vals;
      for (const auto& v : row) vals.push_back(v.get<double>());
      A.values.push_back(std::move(vals));
    }
    A.validate();
    return A;
  }

  static AffinityMatrix load(const std::string& path) {
    const std::string content = util::read_file(path);
    const std::string head = util::trim(content.substr(0, 64));
    if (!head.empty() && head[0] == '{') {
      try {
        return from_json(nlohmann::json::parse(content));
      } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
      }
    }
    std::istringstream ss(content);
    return from_csv(ss, path);
  }
};

struct CoverSolution {
  bool feasible = false;
  std::vector<int> selected;      // sorted feature indices
  double threshold_delta = 0.0;   // worst-case coverage of `selected`
  int solver_calls = 0;
};

/// Worst-case coverage of a feature set: min over targets of the best
/// affinity from any selected feature.
inline double perceptual_risk(const AffinityMatrix& A, const std::vector<int>& selected) {
  if (selected.empty()) throw std::invalid_argument("perceptual_risk: feature set must be nonempty");
  const std::size_t m = A.size();
  for (int i : selected)
    if (i < 0 || static_cast<std::size_t>(i) >= m)
      throw std::invalid_argument("perceptual_risk: feature index out of range");
  double worst = 2.0;
  for (std::size_t j = 0; j < m; ++j) {
    double best = 0.0;
    bool first = true;
    for (int i : selected) {
      const double a = A.values[static_cast<std::size_t>(i)][j];
      if (first || a > best) { best = a; first = false; }
    }
    worst = std::min(worst, best);
  }
  return worst;
}

/// Minimum-cardinality delta-cover as a BIP: one variable per feature, one
/// covering row per target over the features whose affinity reaches delta.
inline bip::BooleanProgram build_cover_program(const AffinityMatrix& A, double delta) {
  if (!(delta >= 0.0 && delta <= 1.0))
    throw std::invalid_argument("delta must lie in [0, 1]");
  const std::size_t m = A.size();
  bip::BooleanProgram p;
  p.num_vars = static_cast<int>(m);
  p.sense = bip::Sense::minimize;
  p.objective.assign(m, bip::Rational(1));
  for (std::size_t j = 0; j < m; ++j) {
    bip::LinearConstraint c;
    for (std::size_t i = 0; i < m; ++i)
      if (A.values[i][j] >= delta) c.terms.push_back({static_cast<int>(i), bip::Rational(1)});
    c.rel = bip::Relation::ge;
    c.rhs = 1;
    p.constraints.push_back(std::move(c));  // empty support stays: makes the program infeasible
  }
  return p;
}

/// Optional secondary objective applied among equally small covering sets.
enum class TieBreak { none, max_total_affinity };

namespace detail {

inline std::vector<int> decode_selected(const std::vector<std::uint8_t>& assignment) {
  std::vector<int> out;
  for (std::size_t i = 0; i < assignment.size(); ++i)
    if (assignment[i]) out.push_back(static_cast<int>(i));
  return out;
}

// Re-solve with the cover size pinned, maximizing total affinity mass of the
// selected features.
inline bip::BipSolution resolve_tie(const AffinityMatrix& A, double delta, const bip::Rational& size,
                                    int& solver_calls) {
  bip::BooleanProgram p = build_cover_program(A, delta);
  p.sense = bip::Sense::maximize;
  const std::size_t m = A.size();
  for (std::size_t i = 0; i < m; ++i) {
    bip::Rational mass = 0;
    for (std::size_t j = 0; j < m; ++j) mass += bip::to_rational(A.values[i][j]);
    p.objective[i] = mass;
  }
  bip::LinearConstraint cap;
  for (std::size_t i = 0; i < m; ++i) cap.terms.push_back({static_cast<int>(i), bip::Rational(1)});
  cap.rel = bip::Relation::eq;
  cap.rhs = size;
  p.constraints.push_back(std::move(cap));
  ++solver_calls;
  return bip::solve_bip(p);
}

}  // namespace detail

/// Smallest feature set whose worst-case coverage reaches delta.
inline CoverSolution min_set_for_threshold(const AffinityMatrix& A, double delta,
                                           TieBreak tie_break = TieBreak::none) {
  A.validate();
  CoverSolution sol;
  if (A.size() == 0) {  // degenerate: nothing to cover
    sol.feasible = true;
    sol.threshold_delta = 1.0;
    return sol;
  }
  bip::BipSolution bip_sol = bip::solve_bip(build_cover_program(A, delta));
  sol.solver_calls = 1;
  if (bip_sol.status != bip::SolveStatus::optimal) return sol;
  if (tie_break == TieBreak::max_total_affinity)
    bip_sol = detail::resolve_tie(A, delta, bip_sol.objective_value, sol.solver_calls);
  sol.feasible = true;
  sol.selected = detail::decode_selected(bip_sol.assignment);
  sol.threshold_delta = perceptual_risk(A, sol.selected);
  return sol;
}

/// Best achievable threshold under a size budget. Binary search over the
/// sorted distinct affinity values (plus 0), one minimum-cover BIP per probe.
inline CoverSolution max_threshold_for_size(const AffinityMatrix& A, int k,
                                            TieBreak tie_break = TieBreak::none) {
  A.validate();
  CoverSolution sol;
  if (A.size() == 0) {
    sol.feasible = true;
    sol.threshold_delta = 1.0;
    return sol;
  }
  const int m = static_cast<int>(A.size());
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (k > m) throw std::invalid_argument("k must be <= number of features");

  std::set<double> entries{0.0};
  for (const auto& row : A.values)
    for (double v : row) entries.insert(v);
  const std::vector<double> candidates(entries.begin(), entries.end());

  const auto probe = [&](double delta) -> std::optional<std::vector<std::uint8_t>> {
    ++sol.solver_calls;
    bip::BipSolution s = bip::solve_bip(build_cover_program(A, delta));
    if (s.status != bip::SolveStatus::optimal) return std::nullopt;
    if (s.objective_value > k) return std::nullopt;
    return s.assignment;
  };

  // Feasibility is monotone: raising delta can only shrink constraint
  // support. Classic last-feasible search; delta = 0 is always feasible.
  std::size_t lo = 0, hi = candidates.size() - 1;
  std::optional<std::vector<std::uint8_t>> best;
  std::size_t best_idx = 0;
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo + 1) / 2;
    auto r = probe(candidates[mid]);
    if (r) {
      best = std::move(r);
      best_idx = mid;
      lo = mid;
    } else {
      hi = mid - 1;
    }
  }
  if (!best) {
    best = probe(candidates[lo]);
    best_idx = lo;
  }
  if (!best) return sol;  // cannot happen for valid input; kept for safety

  if (tie_break == TieBreak::max_total_affinity) {
    bip::Rational size = 0;
    for (std::uint8_t b : *best) size += b;
    bip::BipSolution tied = detail::resolve_tie(A, candidates[best_idx], size, sol.solver_calls);
    if (tied.status == bip::SolveStatus::optimal) best = tied.assignment;
  }
  sol.feasible = true;
  sol.selected = detail::decode_selected(*best);
  sol.threshold_delta = perceptual_risk(A, sol.selected);
  return sol;
}

inline nlohmann::json solution_to_json(const AffinityMatrix& A, const CoverSolution& sol) {
  nlohmann::json j;
  j["feasible"] = sol.feasible;
  auto names = nlohmann::json::array();
  for (int i : sol.selected) names.push_back(A.feature_names[static_cast<std::size_t>(i)]);
  j["selected"] = std::move(names);
  j["delta"] = sol.threshold_delta;
  j["solver_calls"] = sol.solver_calls;
  return j;
}

}  // namespace mlselect::cover

#endif  // MLSELECT_COVER_HPP
